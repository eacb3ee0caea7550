"""``fermsim`` command line: run, sweep, check.

Exit codes: 0 success, 1 usage or I/O error, 2 model error,
3 numerical invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .checks import run_checks
from .evolver import EvolutionError, StepSizeError
from .model import ModelError, load_model
from .presets import PRESET_NAMES, PRESET_OBSERVABLES, preset
from .simulate import normalize_observables, observable_table, simulate

EXIT_OK, EXIT_USAGE, EXIT_MODEL, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return x


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fermsim", description="Fermionic open-system simulator (Jordan-Wigner Lindblad dynamics).")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="evolve one model and write an observable CSV")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path, help="model file")
    src.add_argument("--preset", choices=PRESET_NAMES)
    run.add_argument("--t-max", type=_positive, required=True)
    run.add_argument("--dt-out", type=_positive, required=True)
    run.add_argument("--method", choices=("expm", "rk4"), default="expm")
    run.add_argument("--h", type=_positive, help="rk4 step (default: the stability bound 0.4/||L||_1)")
    run.add_argument("--observables", help="comma list of occupations,cross_populations,concurrence,linear_entropy,diagnostics")
    run.add_argument("--up", type=float, help="override the probe coupling U_p (presets only)")
    run.add_argument("--gamma", type=float, help="override the probe lead rates (presets only)")
    run.add_argument("--out", type=Path, required=True)

    sw = sub.add_parser("sweep", help="run a preset for several probe couplings, one CSV each")
    sw.add_argument("--preset", choices=PRESET_NAMES, default="fig5_sweep")
    sw.add_argument("--up", type=_float_list, required=True, help="comma list of U_p values")
    sw.add_argument("--t-max", type=_positive, default=300.0)
    sw.add_argument("--dt-out", type=_positive, default=0.1)
    sw.add_argument("--method", choices=("expm", "rk4"), default="expm")
    sw.add_argument("--h", type=_positive, help="rk4 step")
    sw.add_argument("--observables")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out-dir", type=Path, required=True)

    sub.add_parser("check", help="run the invariant suite")
    return p


def _observables(arg: str | None, preset_name: str | None):
    if arg is None:
        return PRESET_OBSERVABLES[preset_name] if preset_name else None
    try:
        return normalize_observables([s.strip() for s in arg.split(",") if s.strip()])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _run_one(spec, t_max, dt_out, method, observables, out: Path, h=None) -> int:
    traj = simulate(spec, t_max, dt_out, method, h=h)
    table = observable_table(traj, observables)
    table.write_csv(out)
    problems = traj.health_violations()
    if problems:
        for msg in problems:
            print(f"fermsim: invariant violation in {out}: {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_run(args) -> int:
    if args.model is not None:
        if args.up is not None or args.gamma is not None:
            raise UsageError("--up/--gamma apply to presets only")
        if not args.model.is_file():
            print(f"fermsim: model file not found: {args.model}", file=sys.stderr)
            return EXIT_MODEL
        spec = load_model(args.model)
    else:
        spec = preset(args.preset, u_probe=args.up, gamma=args.gamma)
    observables = _observables(args.observables, args.preset)
    return _run_one(spec, args.t_max, args.dt_out, args.method, observables, args.out, args.h)


def sweep_filename(u: float) -> str:
    return f"up_{u:g}.csv"


def _sweep_point(job):
    name, u, t_max, dt_out, method, h, observables, out = job
    return _run_one(preset(name, u_probe=u), t_max, dt_out, method, observables, out, h)


def cmd_sweep(args) -> int:
    observables = _observables(args.observables, args.preset)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (args.preset, u, args.t_max, args.dt_out, args.method, args.h, observables, args.out_dir / sweep_filename(u))
        for u in args.up
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_sweep_point, jobs))
    else:
        codes = [_sweep_point(j) for j in jobs]
    for job, code in zip(jobs, codes):
        print(f"{job[-1]}  {'ok' if code == EXIT_OK else 'invariant violation'}")
    return max(codes)


def cmd_check(args) -> int:
    results = run_checks()
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "some checks FAILED")
    return EXIT_OK if ok else EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep, "check": cmd_check}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"fermsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"fermsim: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except StepSizeError as exc:
        print(f"fermsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EvolutionError as exc:
        print(f"fermsim: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"fermsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
