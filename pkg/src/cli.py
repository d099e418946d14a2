"""
Command-line front end.

    satr solve INSTANCE... [--json] [--trace] [--certificate OUT] [--jobs N]
    satr check INSTANCE CERTIFICATE
    satr oracle INSTANCE [--max-vertices N] [--max-darts N] [--max-rotations N] [--max-orderings N]
                       [--jobs N]
    satr gen-hardness --cnf FORMULA.dimacs --out INSTANCE.json
    satr gen-random [--count N] [--size N] [--seed N] [--mutation-rate P] [--out DIR]
    satr stats INSTANCE... [--json]

Exit codes: 0 YES (or success), 1 certificate rejected, 10 NO, 20 limit,
30 malformed input, 40 internal error.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from src.acp import solve
from src.atcore import (YES, ATGraph, Verdict, certificate_to_json, check_certificate, instance_to_json,
                        load_certificate, load_instance)
from src.errors import SATRError
from src.hardness import assemble, read_dimacs, self_check
from src.oracle import OracleLimits, brute_force_satr
from src.planted import DEFAULT_MUTATION_RATE, DEFAULT_SIZE, generate
from src.stats import instance_stats, stats_frame

logger = logging.getLogger(__name__)

EXIT_YES, EXIT_CHECK_FAILED, EXIT_NO = 0, 1, 10
EXIT_MALFORMED, EXIT_INTERNAL = 30, 40
LOG_LEVEL_ENV = "SATR_LOG_LEVEL"


def _read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _emit(data: Dict[str, Any]) -> None:
    print(json.dumps(data, sort_keys=True))


def verdict_to_json(v: Verdict, trace: bool = False) -> Dict[str, Any]:
    out: Dict[str, Any] = {"answer": v.answer, "reason": v.reason}
    if v.witness is not None:
        out["certificate"] = certificate_to_json(v.witness)
    if trace:
        out["trace"] = list(v.trace)
    return out


def _load(path: str) -> ATGraph:
    return load_instance(_read_json(path))


def _limits(args: argparse.Namespace) -> OracleLimits:
    return OracleLimits(args.max_vertices, args.max_darts, args.max_rotations, args.max_orderings)


# ---------------------------------------------------------------- commands

def solve_all(paths: Sequence[str], jobs: int = 1) -> List[Verdict]:
    """Verdicts in the order of `paths`, whatever the number of workers."""
    instances = [_load(p) for p in paths]
    if jobs <= 1 or len(instances) <= 1:
        return [solve(a) for a in instances]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(solve, instances))


def cmd_solve(args: argparse.Namespace) -> int:
    if args.certificate and len(args.instances) > 1:
        raise ValueError("--certificate takes a single instance")
    verdicts = solve_all(args.instances, args.jobs)
    for path, verdict in zip(args.instances, verdicts):
        data = verdict_to_json(verdict, args.trace)
        if args.certificate and verdict.witness is not None:
            _write_json(Path(args.certificate), data["certificate"])
        if len(args.instances) > 1:
            data["instance"] = path
        if args.json or args.trace:
            _emit(data)
        else:
            answer = verdict.answer if verdict.reason is None else f"{verdict.answer} ({verdict.reason})"
            print(answer if len(args.instances) == 1 else f"{path}: {answer}")
    return EXIT_YES if all(v.answer == YES for v in verdicts) else EXIT_NO


def cmd_check(args: argparse.Namespace) -> int:
    a = _load(args.instance)
    ok = check_certificate(a, load_certificate(_read_json(args.certificate)))
    if args.json:
        _emit({"valid": ok})
    else:
        print("valid" if ok else "invalid")
    return EXIT_YES if ok else EXIT_CHECK_FAILED


def cmd_oracle(args: argparse.Namespace) -> int:
    verdict = brute_force_satr(_load(args.instance), _limits(args), jobs=args.jobs)
    data = verdict_to_json(verdict)
    if args.json:
        _emit(data)
    else:
        print(verdict.answer if verdict.reason is None else f"{verdict.answer} ({verdict.reason})")
    return EXIT_YES if verdict.answer == YES else EXIT_NO


def cmd_gen_hardness(args: argparse.Namespace) -> int:
    gi = assemble(read_dimacs(args.cnf))
    report = self_check(gi)
    _write_json(Path(args.out), instance_to_json(gi.instance))
    _emit(report.to_json())
    return EXIT_YES if report.ok else EXIT_INTERNAL


def cmd_gen_random(args: argparse.Namespace) -> int:
    planted = generate(args.count, args.size, args.seed, args.mutation_rate)
    index: List[Dict[str, Any]] = []
    for i, p in enumerate(planted):
        name = f"planted_{i:04d}"
        entry: Dict[str, Any] = {"name": name, "label": p.label}
        if args.out:
            out = Path(args.out)
            _write_json(out / f"{name}.json", instance_to_json(p.instance))
            if p.certificate is not None:
                _write_json(out / f"{name}.cert.json", certificate_to_json(p.certificate))
        else:
            entry["instance"] = instance_to_json(p.instance)
            if p.certificate is not None:
                entry["certificate"] = certificate_to_json(p.certificate)
        index.append(entry)
    if args.out:
        _write_json(Path(args.out) / "index.json", index)
        print(f"wrote {len(index)} instances to {args.out}")
    else:
        for entry in index:
            _emit(entry)
    return EXIT_YES


def cmd_stats(args: argparse.Namespace) -> int:
    instances = {path: _load(path) for path in args.instances}
    if args.json:
        _emit({path: instance_stats(a) for path, a in instances.items()})
    else:
        with pd.option_context("display.width", 160, "display.max_columns", 40):
            print(stats_frame(instances).to_string())
    return EXIT_YES


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Emit JSON to stdout")
    common.add_argument("--verbose", action="store_true", help="Debug logging on stderr")

    parser = argparse.ArgumentParser(prog="satr", description="Simple realizability of AT-graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="Decide instances with lambda <= 3")
    p.add_argument("instances", nargs="+")
    p.add_argument("--trace", action="store_true", help="Include the lemma trace in the JSON output")
    p.add_argument("--certificate", help="Write the certificate of a YES instance here")
    p.add_argument("--jobs", type=int, default=1, help="Worker processes for several instances")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", parents=[common], help="Verify a planarization certificate")
    p.add_argument("instance")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_check)

    defaults = OracleLimits()
    p = sub.add_parser("oracle", parents=[common], help="Brute-force decision for small instances")
    p.add_argument("instance")
    p.add_argument("--max-vertices", type=int, default=defaults.max_planarization_vertices)
    p.add_argument("--max-darts", type=int, default=defaults.max_total_darts)
    p.add_argument("--max-rotations", type=int, default=defaults.max_rotation_systems)
    p.add_argument("--max-orderings", type=int, default=defaults.max_orderings)
    p.add_argument("--jobs", type=int, default=1, help="Worker processes for the planarity tests")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen-hardness", parents=[common], help="AT-graph of a planar 3-SAT formula")
    p.add_argument("--cnf", required=True, help="DIMACS formula")
    p.add_argument("--out", required=True, help="Instance JSON to write")
    p.set_defaults(func=cmd_gen_hardness)

    p = sub.add_parser("gen-random", parents=[common], help="Planted instances with lambda <= 3")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--size", type=int, default=DEFAULT_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mutation-rate", type=float, default=DEFAULT_MUTATION_RATE)
    p.add_argument("--out", help="Directory to write instances to (default: JSON lines on stdout)")
    p.set_defaults(func=cmd_gen_random)

    p = sub.add_parser("stats", parents=[common], help="Sizes, lambda and component histogram")
    p.add_argument("instances", nargs="+")
    p.set_defaults(func=cmd_stats)
    return parser


def _configure_logging(verbose: bool) -> None:
    level = os.environ.get(LOG_LEVEL_ENV) or ("DEBUG" if verbose else "WARNING")
    logging.basicConfig(level=level.upper(), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    for name in ("jobs", "count", "size"):
        if getattr(args, name, 1) < 1:
            print(f"--{name} must be positive", file=sys.stderr)
            return EXIT_MALFORMED
    try:
        return args.func(args)
    except SATRError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"Error reading input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except ValueError as exc:
        print(f"Invalid argument: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except Exception as exc:
        logger.exception("internal error")
        print(f"Internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
