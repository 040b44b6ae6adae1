"""Command-line driver.

Exit codes: 0 success (containment achieved for full runs), 1 containment not
achieved, 2 invalid scenario or violated assumption, 3 synthesis or assembly
failure, 4 divergence during simulation.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from .config import ToleranceConfig
from .errors import (AssemblyError, AssumptionError, ContainsimError, DivergenceError,
                     ScenarioError, SingularMatrixError, SynthesisError)
from .pipeline import STAGES, run_pipeline, validate_scenario
from .scenario import apply_k1_file, load_packaged, load_scenario, parse_json

log = logging.getLogger("containsim")

EXIT_OK, EXIT_NOT_CONTAINED, EXIT_VALIDATION, EXIT_SYNTHESIS, EXIT_DIVERGENCE = range(5)
PACKAGED_PREFIX = "@"


def exit_code_for(exc):
    if isinstance(exc, DivergenceError):
        return EXIT_DIVERGENCE
    if isinstance(exc, (SynthesisError, AssemblyError, SingularMatrixError)):
        return EXIT_SYNTHESIS
    if isinstance(exc, (ScenarioError, AssumptionError)):
        return EXIT_VALIDATION
    return EXIT_SYNTHESIS


def _configure_logging():
    level = os.environ.get("CONTAINSIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load(path, args):
    if path.startswith(PACKAGED_PREFIX):
        s = load_packaged(path[len(PACKAGED_PREFIX):])
    else:
        s = load_scenario(path)
    if args.seed is not None:
        s.seed = args.seed
    if args.k1_from_file:
        apply_k1_file(s, parse_json(Path(args.k1_from_file).read_text(), args.k1_from_file))
    overrides = {f.name: getattr(args, f"tol_{f.name}") for f in fields(ToleranceConfig)}
    s.tolerances = s.tolerances.override(**overrides)
    return s


def _run_one(path, args, stage, out):
    """Run one scenario; returns ``(exit code, message lines)``."""
    lines = []
    try:
        s = _load(path, args)
        res = run_pipeline(s, stop=stage, out_dir=out)
    except ContainsimError as exc:
        where = getattr(exc, "stage", "load")
        return exit_code_for(exc), [f"error [{where}] {path}: {exc}"]
    lines += [c.line() for c in res.report.checks]
    if not res.report.ok:
        return EXIT_VALIDATION, lines + [f"{path}: validation failed; later stages skipped"]
    if res.discovery is not None:
        lines.append(f"discovery converged after {res.discovery.rounds_used} rounds")
    if res.views is not None:
        for i, v in sorted(res.views.items()):
            weights = ", ".join(f"{s.original(l)}: {w:.6g}" for l, w in zip(v.leaders, v.phi))
            lines.append(f"follower {s.original(i)} leader weights {{{weights}}}")
    if res.closed_loop is not None:
        r1, r2 = res.closed_loop.residuals
        lines.append(f"closed-loop certificate residuals {r1:.3e}, {r2:.3e}")
    if res.summary is not None:
        for i, rec in res.summary["followers"].items():
            lines.append(f"follower {s.original(int(i))}: |e(T)| = "
                         f"{rec['terminal_containment_error']:.3e}, "
                         f"hull distance after t0 <= {rec['max_hull_distance_after']:.3e}")
        ok = res.summary["containment_achieved"]
        lines.append("containment achieved" if ok else "containment NOT achieved")
        return (EXIT_OK if ok else EXIT_NOT_CONTAINED), lines
    return EXIT_OK, lines


def _job(item):
    path, args, stage, out = item
    return path, _run_one(path, args, stage, out)


def cmd_validate(args):
    try:
        s = _load(args.scenario, args)
        rep = validate_scenario(s)
    except ContainsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    for c in rep.checks:
        print(c.line())
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "validation.json").write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_stage(args, stage):
    target = args.scenario
    out = Path(args.out)
    if not target.startswith(PACKAGED_PREFIX) and Path(target).is_dir():
        items = [(str(p), args, stage, out / p.stem) for p in sorted(Path(target).glob("*.json"))]
        if not items:
            print(f"error: no scenario files in {target}", file=sys.stderr)
            return EXIT_VALIDATION
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_job, items))
        else:
            results = [_job(it) for it in items]
    else:
        results = [(target, _run_one(target, args, stage, out))]
    worst = EXIT_OK
    for path, (code, lines) in results:
        stream = sys.stdout if code in (EXIT_OK, EXIT_NOT_CONTAINED) else sys.stderr
        for line in lines:
            print(line, file=stream)
        worst = max(worst, code)
    return worst


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario JSON file, a directory of them, "
                                         "or @four_followers for the bundled example")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=None, help="override the pole-placement seed")
    common.add_argument("--k1-from-file", default=None,
                        help="JSON object {follower id: K1 matrix} used instead of pole placement")
    common.add_argument("--jobs", type=int, default=1,
                        help="parallel workers when SCENARIO is a directory")
    for f in fields(ToleranceConfig):
        typ = int if f.type in (int, "int") else float
        common.add_argument(f"--tol-{f.name.replace('_', '-')}", dest=f"tol_{f.name}", type=typ,
                            default=None, help=f"override tolerance '{f.name}'")

    p = argparse.ArgumentParser(prog="containsim",
                                description="Distributed containment control pipeline")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check structural assumptions")
    sub.add_parser("discover", parents=[common], help="run discovery, write discovery.json")
    sub.add_parser("nli", parents=[common], help="also compute local leader weights (nli.json)")
    sub.add_parser("gains", parents=[common], help="also synthesize gains (gains.json)")
    run = sub.add_parser("run", parents=[common], help="full pipeline including simulation")
    run.add_argument("--stage", choices=STAGES, default="simulate",
                     help="stop after this stage (default: simulate)")
    return p


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    stage = args.stage if args.command == "run" else args.command
    return cmd_stage(args, stage)


if __name__ == "__main__":
    sys.exit(main())
