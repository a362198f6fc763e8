"""Command-line front end: ``qpir <run|verify|attack|bench|retrieve-bit>``.

Exit codes: 0 success, 1 verification failure, 2 usage/input error,
3 capacity error.  JSON output is the stable machine format.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from qpir import analysis, bench, blocks
from qpir.core import read_database
from qpir.errors import CapacityError, QPIRError
from qpir.protocol import BACKENDS, Fault, classical_baseline_cost, run_session

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    database: str | None = None
    index: int | None = None
    backend: str = "sparse"
    seed: int = 0
    format: str = "text"
    dense_cap: int | None = None


def _config(args) -> RunConfig:
    return RunConfig(command=args.command,
                     database=getattr(args, "database", None),
                     index=getattr(args, "index", None),
                     backend=getattr(args, "backend", "sparse"),
                     seed=args.seed,
                     format="json" if getattr(args, "json", False) else "text",
                     dense_cap=args.dense_cap)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def cmd_run(cfg: RunConfig, args) -> int:
    db = read_database(cfg.database)
    result = run_session(db, cfg.index, cfg.backend, cfg.seed)
    t = result.transcript
    if cfg.format == "json":
        print(t.to_json())
    else:
        print(f"item={result.output} qubits={t.total_qubits} "
              f"classical={classical_baseline_cost(db.ell, db.r)}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    if args.exhaustive is None and cfg.database is None:
        raise argparse.ArgumentTypeError("verify needs a database file or --exhaustive R_MAX ELL_MAX")
    backends = BACKENDS if cfg.backend == "both" else (cfg.backend,)
    reports = {}
    for backend in backends:
        if args.exhaustive is not None:
            r_max, ell_max = args.exhaustive
            reports[backend] = analysis.verify_exhaustive(r_max, ell_max, backend, args.inject_fault)
        else:
            reports[backend] = analysis.verify_database(
                read_database(cfg.database), backend, args.inject_fault)
    passed = all(rep.passed for rep in reports.values())
    if cfg.format == "json":
        print(json.dumps({b: rep.to_dict() for b, rep in reports.items()}, indent=2))
    else:
        for backend, rep in reports.items():
            correct = "all correct" if rep.correct else f"{len(rep.failures)} failures"
            verdict = "PASS" if rep.passed else "FAIL"
            print(f"[{backend}] {rep.databases} databases, {rep.sessions} sessions {correct}; "
                  f"max trace distance {rep.max_distance:.3g} <= 1e-9: {verdict}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_attack(cfg: RunConfig, args) -> int:
    if args.honest:
        raise argparse.ArgumentTypeError(
            "--honest is not supported: the attack requires the cheating preparation")
    db = read_database(cfg.database)
    res = analysis.run_attack(db, cfg.index, cfg.backend, cfg.seed)
    if cfg.format == "json":
        print(res.to_json())
    elif res.success:
        print(f"item={res.recovered_item} recovered index {res.true_index}: SUCCESS")
    else:
        ambiguous = ", ".join(map(str, res.candidate_indices))
        print(f"item={res.recovered_item} item recovered; index ambiguous among {{{ambiguous}}}")
    return EXIT_OK


def cmd_bench(cfg: RunConfig, args) -> int:
    instances = bench.parse_sweep(args.sweep or ["ell=2^1..6", "r=4"])
    backends = BACKENDS if cfg.backend == "both" else (cfg.backend,)
    rows = bench.run_bench(instances, backends, cfg.seed)
    timing = not args.no_timing
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            bench.write_csv(rows, fh, timing)
    else:
        sys.stdout.write(bench.csv_text(rows, timing))
    figure = args.figure
    if figure is None and args.csv and not args.no_figure:
        figure = str(Path(args.csv).with_suffix(".png"))
    if figure and not args.no_figure:
        from qpir.plotting import plot_bench

        plot_bench(rows, figure)
    return EXIT_OK


def cmd_retrieve_bit(cfg: RunConfig, args) -> int:
    bits = blocks.read_bit_database(cfg.database)
    res = blocks.retrieve_bit(bits, cfg.index, cfg.backend, cfg.seed)
    if cfg.format == "json":
        print(json.dumps(res.transcript_dict(), indent=2))
    else:
        print(f"bit={res.bit} qubits={res.qubits} (s={res.plan.s}) classical={bits.n}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0,
                        help="64-bit measurement sampling seed (default 0)")
    common.add_argument("--dense-cap", type=int, default=None,
                        help="override the dense qubit cap (also QPIR_DENSE_CAP)")

    parser = argparse.ArgumentParser(prog="qpir", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one protocol session")
    p.add_argument("database")
    p.add_argument("--index", type=int, required=True, help="1-based item index")
    p.add_argument("--backend", choices=BACKENDS, default="sparse")
    p.add_argument("--json", action="store_true", help="print the transcript as JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", parents=[common], help="correctness and privacy checks")
    p.add_argument("database", nargs="?")
    p.add_argument("--exhaustive", nargs=2, type=int, metavar=("R_MAX", "ELL_MAX"))
    p.add_argument("--backend", choices=(*BACKENDS, "both"), default="sparse")
    p.add_argument("--inject-fault", choices=[f.value for f in Fault], default=None,
                   help="corrupt the backend (negative control)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack", parents=[common], help="cheating-server demonstration")
    p.add_argument("database")
    p.add_argument("--index", type=int, required=True, help="1-based item index")
    p.add_argument("--backend", choices=BACKENDS, default="dense")
    p.add_argument("--honest", action="store_true", help="rejected; see documentation")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", parents=[common], help="communication/runtime sweep")
    p.add_argument("--sweep", action="append",
                   help="ell=VALUES or r=VALUES|ell; VALUES: N, A..B, 2^A..B or a,b,c")
    p.add_argument("--backend", choices=(*BACKENDS, "both"), default="both")
    p.add_argument("--csv", help="CSV output path (default stdout)")
    p.add_argument("--figure", help="figure path (default: next to the CSV, .png)")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--no-timing", action="store_true",
                   help="leave wall_ms empty for byte-stable output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("retrieve-bit", parents=[common], help="fetch one bit via blocks")
    p.add_argument("database", help="file holding one line over {0,1}")
    p.add_argument("--index", type=int, required=True, help="1-based bit index")
    p.add_argument("--backend", choices=BACKENDS, default="sparse")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_retrieve_bit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config(args)
    saved_cap = os.environ.get("QPIR_DENSE_CAP")
    if cfg.dense_cap is not None:
        os.environ["QPIR_DENSE_CAP"] = str(cfg.dense_cap)
    try:
        return args.func(cfg, args)
    except CapacityError as exc:
        print(f"qpir: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (QPIRError, OSError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"qpir: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if saved_cap is None:
            os.environ.pop("QPIR_DENSE_CAP", None)
        else:
            os.environ["QPIR_DENSE_CAP"] = saved_cap


if __name__ == "__main__":
    sys.exit(main())
