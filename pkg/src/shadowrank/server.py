"""Line-delimited JSON serving: one request per line, one response per line.

Requests carry the per-user fields (user_id, u, covariates, optional
strategy override); the constraint template, discounts, and tie-break
factor come from the trained artifact.  Responses preserve request order,
and a malformed line produces an error object on its line instead of
killing the stream.  Transport is stdin/stdout or TCP; the protocol is the
same bytes either way.
"""

from __future__ import annotations

import json
import logging
import socketserver
from concurrent.futures import ThreadPoolExecutor

from .pipeline import Strategy, TrainedArtifact, online_rank

__all__ = ["handle_request_line", "serve_stream", "make_tcp_server"]

logger = logging.getLogger(__name__)


def handle_request_line(
    artifact: TrainedArtifact, line: str, default_strategy: Strategy = Strategy.KNN
) -> dict:
    """Process one request line into one response object (never raises)."""
    user_id = None
    try:
        req = json.loads(line)
        if not isinstance(req, dict):
            raise ValueError("request must be a JSON object")
        user_id = req.get("user_id")
        for key in ("user_id", "u", "covariates"):
            if key not in req:
                raise ValueError(f"missing field {key!r}")
        strategy = Strategy(req["strategy"]) if "strategy" in req else default_strategy
        instance = artifact.make_instance(req["user_id"], req["u"], req["covariates"])
        assignment, report, latency_ms = online_rank(artifact, instance, strategy)
        return {
            "user_id": req["user_id"],
            "item_at_rank": assignment.item_at_rank.tolist(),
            "slack": report.slack.tolist(),
            "compliant": report.compliant,
            "utility": report.utility,
            "latency_ms": latency_ms,
        }
    except Exception as exc:  # noqa: BLE001 - protocol: errors are responses
        out = {"error": str(exc)}
        if isinstance(user_id, str):
            out["user_id"] = user_id
        return out


def serve_stream(
    artifact: TrainedArtifact,
    in_stream,
    out_stream,
    strategy: Strategy = Strategy.KNN,
    parallel: int = 0,
) -> int:
    """Serve requests from a text stream until EOF.  Returns request count.

    ``parallel`` > 1 processes lines in a thread pool; responses still come
    back in request order.
    """
    lines = (line for line in in_stream if line.strip())
    count = 0
    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            for resp in pool.map(
                lambda ln: handle_request_line(artifact, ln, strategy), lines
            ):
                out_stream.write(json.dumps(resp) + "\n")
                out_stream.flush()
                count += 1
    else:
        for line in lines:
            resp = handle_request_line(artifact, line, strategy)
            out_stream.write(json.dumps(resp) + "\n")
            out_stream.flush()
            count += 1
    return count


def make_tcp_server(
    artifact: TrainedArtifact,
    host: str = "127.0.0.1",
    port: int = 0,
    strategy: Strategy = Strategy.KNN,
) -> socketserver.ThreadingTCPServer:
    """TCP transport for the same line protocol; one connection per client.

    Port 0 binds an ephemeral port; read it from server.server_address.
    Call serve_forever() (blocking) or run it in a thread.
    """

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace")
                if not line.strip():
                    continue
                resp = handle_request_line(artifact, line, strategy)
                self.wfile.write((json.dumps(resp) + "\n").encode("utf-8"))
                self.wfile.flush()

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server((host, port), Handler)
