"""Command-line client for the selection service.

Every command is a thin wrapper over one HTTP endpoint. With --server
(or SOURCESELECT_SERVER) the request goes to a running service; without
it the app is mounted in-process, so the CLI works standalone against
the local filesystem while exercising the exact same API surface.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys
from pathlib import Path

import httpx

from .selectors import ALGORITHMS

SERVER_ENV = "SOURCESELECT_SERVER"
CONFIG_ENV = "SOURCESELECT_CONFIG"

# error classes the service reports for malformed inputs (CLI exit 1);
# everything else the service reports is a runtime failure (exit 2)
USAGE_ERRORS = {"ConfigError", "SchemaMismatch"}

CONFIG_KEYS_HELP = """\
config file keys (flat YAML map):
  mode                  sources_dir | single_csv | profit_table
  data_path             directory of CSVs, one CSV, or a profit-table file
  partition_column      required for single_csv, forbidden for sources_dir
  feature_columns       list of numeric feature columns
  one_hot_columns       subset of feature_columns to expand categorically
  label_column          target column (default: label)
  sensitive_column      binary group column, required for fairness tasks
  source_names          optional names for profit_table mode
  task_kind             classification | fairness | regression
  lambda                fairness trade-off weight in [0,100] (default: 10)
  test_fraction         per-source test share in (0,1) (default: 0.2)
  seed                  split seed and default algorithm seed (default: 0)
  cost_t, cost_a, cost_b, cost_c
                        cost polynomial (a*g+b)^t * c
                        (defaults: 1, 1.0, -70.0, 0.01)
  zero_cost             force all acquisition costs to 0 (default: false)
  algorithm             default algorithm (default: splice)
  grasp_iterations      restarts N (default: 20)
  rcl_size              candidate-list size k (default: 5)
  s_max                 max seed size (default: m, the catalog size)
  k_max                 max swaps per splicing call (default: 7)
  value_insertions_after_removal
                        price insertions against the active set with the
                        outgoing sources already removed (default: false)
  n_training_subsets    surrogate sample count (default: min(1000, 2^m-1))
  seeds                 benchmark seeds (default: [0..9])
  max_evaluations       optional cap on distinct subset evaluations
  force_enumeration     allow ground truth beyond 20 sources (default: false)
  threads               enumeration worker threads (default: 1)
  max_iterations, step_size, gradient_tolerance, ridge, standardize
                        trainer settings (defaults: 500, 0.1, 1e-6,
                        1e-4 logistic / 1e-8 linear, true)
"""


class Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this CLI reserves 2 for runtime."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _post(server: str | None, path: str, payload: dict) -> dict:
    async def go() -> httpx.Response:
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=None) as client:
                return await client.post(path, json=payload)
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://sourceselect.local", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    try:
        response = asyncio.run(go())
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        raise SystemExit(2)

    if response.status_code == 200:
        return response.json()

    try:
        body = response.json()
    except ValueError:
        body = {"detail": response.text}
    detail = body.get("detail")
    error = body.get("error", "")
    print(f"error: {error + ': ' if error else ''}{detail}", file=sys.stderr)
    if error in USAGE_ERRORS or response.status_code == 422 and not error:
        raise SystemExit(1)
    raise SystemExit(2)


def _resolve_config_path(value: str | None, parser: Parser) -> str:
    path = value or os.environ.get(CONFIG_ENV)
    if not path:
        parser.error("a config file is required (positional CONFIG or $SOURCESELECT_CONFIG)")
    if not Path(path).exists():
        print(f"error: config file not found: {path}", file=sys.stderr)
        raise SystemExit(1)
    return str(Path(path).resolve())


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def build_parser() -> Parser:
    parser = Parser(
        prog="sourceselect",
        description="Select the profit-maximizing subset of data sources for an ML task.",
        epilog=CONFIG_KEYS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--server",
        default=os.environ.get(SERVER_ENV),
        help="service URL; unset runs the service in-process (env: SOURCESELECT_SERVER)",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    defaults = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("select", help="run one selection algorithm", formatter_class=defaults)
    p.add_argument("config", nargs="?", help="run config path (default: $SOURCESELECT_CONFIG)")
    p.add_argument("--algorithm", choices=ALGORITHMS, default=None,
                   help="override the config's algorithm (default: from config)")
    p.add_argument("--seed", type=int, default=None,
                   help="algorithm seed for stochastic methods (default: config seed)")
    p.add_argument("--grasp-iterations", type=int, default=None, metavar="N",
                   help="randomized restarts (default: 20)")
    p.add_argument("--rcl-size", type=int, default=None, metavar="K",
                   help="restricted candidate list size (default: 5)")
    p.add_argument("--s-max", type=int, default=None,
                   help="max seed size, clamped to m (default: m, the catalog size)")
    p.add_argument("--k-max", type=int, default=None,
                   help="max swaps per splicing call (default: 7)")
    p.add_argument("--n-training-subsets", type=int, default=None, metavar="T",
                   help="surrogate training samples (default: min(1000, 2^m-1))")
    p.add_argument("--max-evaluations", type=int, default=None,
                   help="budget of distinct subset evaluations (default: unlimited)")
    p.add_argument("--out", default=None, help="write a one-record report file")

    p = sub.add_parser("benchmark", help="compare algorithms on one task", formatter_class=defaults)
    p.add_argument("config", nargs="?", help="run config path (default: $SOURCESELECT_CONFIG)")
    p.add_argument("--algorithms", default=None, metavar="A,B,...",
                   help=f"comma list from {{{','.join(ALGORITHMS)}}} (default: all six)")
    p.add_argument("--seeds", type=_int_list, default=None, metavar="S1,S2,...",
                   help="seeds for stochastic algorithms (default: config seeds, 0..9)")
    p.add_argument("--no-percentile", action="store_true",
                   help="skip ground-truth enumeration and percentile metrics")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for ground-truth enumeration (default: 1)")
    p.add_argument("--out", default=None, help="write the per-run report file")

    p = sub.add_parser("synth", help="generate planted-optimum synthetic sources",
                       formatter_class=defaults)
    p.add_argument("--m", type=int, default=8, help="number of sources")
    p.add_argument("--n", type=int, default=500, help="rows per source")
    p.add_argument("--p", type=int, default=10, help="features per row")
    p.add_argument("--clean", type=int, default=3, help="count of low-noise sources")
    p.add_argument("--noise-clean", type=float, default=0.02, help="label flip rate, clean")
    p.add_argument("--noise-corrupt", type=float, default=0.45, help="label flip rate, corrupt")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--out-dir", required=True, help="output directory for CSVs + manifest")
    p.add_argument("--force", action="store_true", help="write into a nonempty directory")

    p = sub.add_parser("ground-truth", help="enumerate every subset's profit",
                       formatter_class=defaults)
    p.add_argument("config", nargs="?", help="run config path (default: $SOURCESELECT_CONFIG)")
    p.add_argument("--out", default=None, help="write the ground-truth table file")
    p.add_argument("--force", action="store_true", help="enumerate beyond the 20-source cap")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for enumeration (default: 1)")

    p = sub.add_parser("show", help="pretty-print a report or ground-truth file")
    p.add_argument("path", help="file to display")

    p = sub.add_parser("serve", help="run the HTTP service", formatter_class=defaults)
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8765, help="bind port")

    return parser


def cmd_select(args, parser: Parser) -> int:
    config_path = _resolve_config_path(args.config, parser)
    payload = {
        "config_path": config_path,
        "algorithm": args.algorithm,
        "seed": args.seed,
        "grasp_iterations": args.grasp_iterations,
        "rcl_size": args.rcl_size,
        "s_max": args.s_max,
        "k_max": args.k_max,
        "n_training_subsets": args.n_training_subsets,
        "max_evaluations": args.max_evaluations,
        "out": args.out,
    }
    body = _post(args.server, "/select", payload)
    subset = body["subset"]
    print(f"algorithm: {body['algorithm']}")
    print(f"seed: {fmt(body['seed'])}")
    print(f"subset: {{{', '.join(subset['names'])}}}")
    print(f"mask_hex: {subset['mask_hex']}")
    print(f"size: {subset['size']}")
    print(f"gain: {fmt(body['gain'])}")
    print(f"cost: {fmt(body['cost'])}")
    print(f"profit: {fmt(body['profit'])}")
    print(f"models_explored: {body['models_explored']}")
    if body.get("out"):
        print(f"report: {body['out']}")
    print(f"wall_time_ms: {body['wall_time_ms']:.3f}")
    return 0


def cmd_benchmark(args, parser: Parser) -> int:
    config_path = _resolve_config_path(args.config, parser)
    algorithms = None
    if args.algorithms:
        algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
        bad = [a for a in algorithms if a not in ALGORITHMS]
        if bad:
            parser.error(f"--algorithms: unknown algorithm(s) {bad}")
    payload = {
        "config_path": config_path,
        "algorithms": algorithms,
        "seeds": args.seeds,
        "no_percentile": args.no_percentile,
        "threads": args.threads,
        "out": args.out,
    }
    body = _post(args.server, "/benchmark", payload)

    header = f"{'algorithm':<11}{'runs':>5}{'mean_pctl':>11}{'mean_expl%':>12}{'mean_dprofit':>14}"
    print(header)
    for row in body["summary"]:
        pctl = "-" if row["mean_percentile"] is None else f"{row['mean_percentile']:.3f}"
        dp = "-" if row["mean_delta_profit"] is None else f"{row['mean_delta_profit']:.5f}"
        print(
            f"{row['algorithm']:<11}{row['runs']:>5}{pctl:>11}"
            f"{row['mean_explored_pct']:>12.3f}{dp:>14}"
        )
    if body.get("out"):
        print(f"report: {body['out']}")
    print("wall_time_ms (varies between runs):")
    for row in body["summary"]:
        print(f"  {row['algorithm']}: {row['mean_wall_time_ms']:.3f}")
    return 0


def cmd_synth(args, parser: Parser) -> int:
    payload = {
        "m": args.m,
        "n": args.n,
        "p": args.p,
        "clean": args.clean,
        "noise_clean": args.noise_clean,
        "noise_corrupt": args.noise_corrupt,
        "seed": args.seed,
        "out_dir": args.out_dir,
        "force": args.force,
    }
    body = _post(args.server, "/synth", payload)
    print(f"wrote {len(body['files'])} source files under {args.out_dir}")
    for path in body["files"]:
        print(f"  {path}")
    print(f"manifest: {body['manifest']}")
    print(f"clean sources: {', '.join(body['clean_sources'])}")
    return 0


def cmd_ground_truth(args, parser: Parser) -> int:
    config_path = _resolve_config_path(args.config, parser)
    payload = {
        "config_path": config_path,
        "out": args.out,
        "force": args.force,
        "threads": args.threads,
    }
    body = _post(args.server, "/ground-truth", payload)
    best = body["best"]
    print(f"m: {body['m']}")
    print(f"subsets: {body['subsets']}")
    print(f"best subset: {{{', '.join(best['names'])}}}")
    print(f"best mask_hex: {best['mask_hex']}")
    print(f"best profit: {fmt(body['best_profit'])}")
    print(f"digest: {body['digest']}")
    if body.get("out"):
        print(f"table: {body['out']}")
    print(f"wall_time_ms: {body['wall_time_ms']:.3f}")
    return 0


def cmd_show(args, parser: Parser) -> int:
    path = Path(args.path)
    if not path.exists():
        print(f"error: file not found: {path}", file=sys.stderr)
        return 1
    body = _post(args.server, "/show", {"path": str(path.resolve())})
    for line in body["lines"]:
        print(line)
    return 0


def cmd_serve(args, parser: Parser) -> int:
    import uvicorn

    uvicorn.run("sourceselect.service.app:app", host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.error("a command is required")
    handlers = {
        "select": cmd_select,
        "benchmark": cmd_benchmark,
        "synth": cmd_synth,
        "ground-truth": cmd_ground_truth,
        "show": cmd_show,
        "serve": cmd_serve,
    }
    return handlers[args.command](args, parser)


if __name__ == "__main__":
    raise SystemExit(main())
