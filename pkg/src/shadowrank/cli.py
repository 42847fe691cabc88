"""Command line entry points.

Subcommands: synth, train, rank, bench, serve.  Exit codes: 0 success,
1 usage error, 2 data error (parse/validation), 3 infeasibility.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import data as data_mod
from .assignment import InfeasibleError
from .data import (
    DataFormatError,
    InfeasibleConfigError,
    LambdaLaw,
    SynthConfig,
    load_artifact,
    load_dataset,
    save_artifact,
    synth_generate,
    write_dataset,
)
from .dual import DEFAULT_EPSILON_GRID, DualConfig
from .pipeline import PredictorConfig, Strategy, evaluate, offline_train, online_rank
from .predictor import PredictorKind
from .reporting import emit_report
from .server import make_tcp_server, serve_stream

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is taken by data errors here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _strategy(token: str) -> Strategy:
    try:
        return Strategy(token)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown strategy {token!r} (choose from "
            f"{', '.join(s.value for s in Strategy)})"
        )


def _strategies(tokens: str) -> tuple[Strategy, ...]:
    return tuple(_strategy(t.strip()) for t in tokens.split(",") if t.strip())


def _epsilon_grid(tokens: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(t) for t in tokens.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon grid {tokens!r}")
    if not grid:
        raise argparse.ArgumentTypeError("empty epsilon grid")
    return grid


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shadowrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic population dataset")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-users", type=int, default=200)
    p.add_argument("--m1", type=int, default=100)
    p.add_argument("--m2", type=int, default=10)
    p.add_argument("--constraints", type=int, default=3, help="number of topic constraints")
    p.add_argument("--covariate-dim", type=int, default=8)
    p.add_argument(
        "--lambda-law", choices=[l.value for l in LambdaLaw], default="clustered"
    )
    p.add_argument("--binding-fraction", type=float, default=0.5)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="solve a training population and save the artifact")
    p.add_argument("--dataset", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--k-neighbors", type=int, default=10)
    p.add_argument(
        "--predictor", choices=[k.value for k in PredictorKind], default="knn"
    )
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--epsilon-grid", type=_epsilon_grid, default=DEFAULT_EPSILON_GRID)
    p.add_argument("--lambda-cap", type=float, default=1e6)
    p.add_argument("--max-iterations", type=int, default=5000)
    p.add_argument("--step-schedule", choices=["harmonic", "polyak"], default="harmonic")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("rank", help="rank a dataset's users under an artifact")
    p.add_argument("--artifact", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--strategy", type=_strategy, default=Strategy.KNN)
    p.add_argument("--output", help="write JSONL here instead of stdout")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("bench", help="benchmark strategies on a dataset")
    p.add_argument("--artifact", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument(
        "--strategies",
        type=_strategies,
        default=tuple(Strategy),
        help="comma-separated, e.g. no_opt,mean,knn,optimal",
    )
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="serve the line protocol on stdio or TCP")
    p.add_argument("--artifact", required=True)
    p.add_argument("--strategy", type=_strategy, default=Strategy.KNN)
    p.add_argument("--port", type=int, help="serve TCP on this port (omit for stdio)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--parallel", type=int, default=0)
    p.set_defaults(func=_cmd_serve)

    return parser


def _cmd_synth(args) -> int:
    config = SynthConfig(
        seed=args.seed,
        n_users=args.n_users,
        m1=args.m1,
        m2=args.m2,
        num_constraints=args.constraints,
        covariate_dim=args.covariate_dim,
        lambda_law=LambdaLaw(args.lambda_law),
        binding_fraction=args.binding_fraction,
    )
    ds = synth_generate(config)
    write_dataset(ds, args.output)
    print(
        f"wrote {args.output}: {len(ds.users)} users, m1={ds.m1}, m2={ds.m2}, "
        f"K={ds.num_constraints}, binding~{ds.meta['binding_fraction_achieved']:.3f}"
    )
    return EXIT_OK


def _cmd_train(args) -> int:
    instances = load_dataset(args.dataset)
    dual_config = DualConfig(
        max_iterations=args.max_iterations,
        lambda_cap=args.lambda_cap,
        step_schedule=args.step_schedule,
    )
    predictor_config = PredictorConfig(
        kind=PredictorKind(args.predictor),
        k=args.k_neighbors,
        standardize=args.standardize,
    )
    artifact = offline_train(
        instances,
        dual_config=dual_config,
        predictor_config=predictor_config,
        epsilon_grid=args.epsilon_grid,
    )
    save_artifact(artifact, args.output)
    print(
        f"wrote {args.output}: {artifact.train_lambdas.shape[0]} users solved, "
        f"{len(artifact.skipped_users)} skipped, epsilon={artifact.epsilon}"
    )
    return EXIT_OK


def _cmd_rank(args) -> int:
    artifact = load_artifact(args.artifact)
    instances = load_dataset(args.dataset)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for inst in instances:
            assignment, report, latency_ms = online_rank(artifact, inst, args.strategy)
            out.write(
                json.dumps(
                    {
                        "user_id": inst.user_id,
                        "item_at_rank": assignment.item_at_rank.tolist(),
                        "slack": report.slack.tolist(),
                        "compliant": report.compliant,
                        "utility": report.utility,
                        "latency_ms": latency_ms,
                    }
                )
                + "\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _cmd_bench(args) -> int:
    artifact = load_artifact(args.artifact)
    instances = load_dataset(args.dataset)
    report = evaluate(artifact, instances, strategies=args.strategies, repeats=args.repeats)
    text = emit_report(report, format=args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_serve(args) -> int:
    artifact = load_artifact(args.artifact)
    if args.port is None:
        serve_stream(artifact, sys.stdin, sys.stdout, args.strategy, args.parallel)
        return EXIT_OK
    server = make_tcp_server(artifact, args.host, args.port, args.strategy)
    host, port = server.server_address[:2]
    print(f"serving on {host}:{port}", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InfeasibleError, InfeasibleConfigError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
