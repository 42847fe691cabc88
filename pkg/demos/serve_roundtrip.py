"""Stand up the line-protocol server on an ephemeral TCP port and talk to
it over a socket, malformed request included."""

import json
import socket
import threading

from shadowrank import (
    DualConfig,
    LambdaLaw,
    SynthConfig,
    make_tcp_server,
    offline_train,
    synth_generate,
)


def run():
    ds = synth_generate(
        SynthConfig(
            seed=4,
            n_users=40,
            m1=30,
            m2=5,
            num_constraints=2,
            covariate_dim=4,
            lambda_law=LambdaLaw.CLUSTERED,
            binding_fraction=0.5,
        )
    )
    instances = list(ds.instances())
    artifact = offline_train(instances[:30], dual_config=DualConfig(max_iterations=300))

    server = make_tcp_server(artifact, port=0)
    host, port = server.server_address
    threading.Thread(target=server.serve_forever, daemon=True).start()
    print(f"serving on {host}:{port}")

    requests = []
    for inst in instances[30:33]:
        requests.append(json.dumps({
            "user_id": inst.user_id,
            "u": inst.u.tolist(),
            "covariates": inst.covariates.tolist(),
        }))
    requests.insert(2, '{"user_id": "broken"')  # unterminated on purpose

    with socket.create_connection((host, port)) as sock:
        f = sock.makefile("rw", encoding="utf-8")
        for line in requests:
            f.write(line + "\n")
        f.flush()
        sock.shutdown(socket.SHUT_WR)
        for line in f:
            resp = json.loads(line)
            if "error" in resp:
                print(f"  {resp.get('user_id')}: error: {resp['error']}")
            else:
                print(f"  {resp['user_id']}: top={resp['item_at_rank'][:3]}... "
                      f"compliant={resp['compliant']} "
                      f"latency={resp['latency_ms']:.2f} ms")

    server.shutdown()
    print("done, one response per request, in order")


if __name__ == "__main__":
    run()
