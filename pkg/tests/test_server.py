"""Line protocol discipline: one response per request, in order, errors as
data rather than dropped connections."""

import io
import json
import socket

import numpy as np
import pytest

from shadowrank import (
    DualConfig,
    LambdaLaw,
    Strategy,
    SynthConfig,
    handle_request_line,
    make_tcp_server,
    offline_train,
    serve_stream,
    synth_generate,
)

CFG = SynthConfig(
    seed=4,
    n_users=20,
    m1=24,
    m2=4,
    num_constraints=2,
    covariate_dim=3,
    lambda_law=LambdaLaw.CLUSTERED,
    binding_fraction=0.5,
)


@pytest.fixture(scope="module")
def artifact():
    instances = list(synth_generate(CFG).instances())
    return offline_train(instances, dual_config=DualConfig(max_iterations=300))


def request_line(artifact, user_id="q1"):
    rng = np.random.default_rng(3)
    return json.dumps(
        {
            "user_id": user_id,
            "u": np.round(rng.uniform(1, 5, artifact.item_count), 6).tolist(),
            "covariates": rng.normal(size=artifact.covariate_dim).tolist(),
        }
    )


def test_single_request_shape(artifact):
    resp = handle_request_line(artifact, request_line(artifact))
    assert resp["user_id"] == "q1"
    assert len(resp["item_at_rank"]) == len(artifact.gamma)
    assert len(set(resp["item_at_rank"])) == len(resp["item_at_rank"])
    assert len(resp["slack"]) == len(artifact.constraints)
    assert isinstance(resp["compliant"], bool)
    assert resp["latency_ms"] >= 0.0
    assert "error" not in resp


def test_malformed_line_becomes_error_response(artifact):
    resp = handle_request_line(artifact, "{ not json")
    assert "error" in resp
    resp = handle_request_line(artifact, json.dumps({"user_id": "x"}))
    assert "error" in resp and resp["user_id"] == "x"
    wrong = json.dumps({"user_id": "y", "u": [1.0], "covariates": [0.0]})
    assert "error" in handle_request_line(artifact, wrong)


def test_strategy_override_per_request(artifact):
    doc = json.loads(request_line(artifact))
    doc["strategy"] = "no_opt"
    resp = handle_request_line(artifact, json.dumps(doc))
    assert "error" not in resp
    doc["strategy"] = "warp_drive"
    assert "error" in handle_request_line(artifact, json.dumps(doc))


def test_stream_keeps_order_and_answers_every_line(artifact):
    lines = [
        request_line(artifact, "a"),
        "definitely not json",
        request_line(artifact, "c"),
    ]
    out = io.StringIO()
    n = serve_stream(artifact, iter(lines), out)
    assert n == 3
    responses = [json.loads(ln) for ln in out.getvalue().splitlines()]
    assert len(responses) == 3
    assert responses[0]["user_id"] == "a"
    assert "error" in responses[1]
    assert responses[2]["user_id"] == "c"


def test_blank_lines_are_skipped(artifact):
    out = io.StringIO()
    n = serve_stream(artifact, iter(["", request_line(artifact), "  "]), out)
    assert n == 1
    assert len(out.getvalue().splitlines()) == 1


def test_parallel_stream_preserves_request_order(artifact):
    ids = [f"u{i}" for i in range(12)]
    lines = [request_line(artifact, i) for i in ids]
    out = io.StringIO()
    n = serve_stream(artifact, iter(lines), out, parallel=4)
    assert n == 12
    got = [json.loads(ln)["user_id"] for ln in out.getvalue().splitlines()]
    assert got == ids


def test_tcp_round_trip(artifact):
    server = make_tcp_server(artifact, port=0)
    host, port = server.server_address
    import threading

    t = threading.Thread(target=server.serve_forever, daemon=True)
    t.start()
    try:
        with socket.create_connection((host, port), timeout=5) as sock:
            payload = request_line(artifact, "tcp1") + "\n" + "junk\n"
            sock.sendall(payload.encode())
            sock.shutdown(socket.SHUT_WR)
            data = sock.makefile().read()
        responses = [json.loads(ln) for ln in data.splitlines()]
        assert responses[0]["user_id"] == "tcp1"
        assert "error" in responses[1]
    finally:
        server.shutdown()
        server.server_close()
