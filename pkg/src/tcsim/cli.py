"""Command-line front end: simulate, threshold, analytic, verify.

Numbers serialise with six significant digits and seeds as unsigned
decimals, so repeated runs diff cleanly. Exit codes: 0 success, 1 a
verification or threshold failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass

from tcsim.damage import Scheme
from tcsim.experiment import (
    SweepSpec,
    default_workers,
    estimate_threshold,
    fit_threshold_curve,
    percolation_limit_analytic,
    run_batch,
)

POINT_FIELDS = [
    "scheme",
    "d",
    "p_bond",
    "p_comp",
    "trials",
    "failures",
    "percolation_failures",
    "rate",
    "ci_low",
    "ci_high",
    "seed",
]

THRESHOLD_FIELDS = [
    "scheme",
    "p_bond",
    "p_th",
    "ci_low",
    "ci_high",
    "method",
]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _emit(records, fields, fmt, path):
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        if fmt == "csv":
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(fields)
            for r in records:
                writer.writerow([_fmt(getattr(r, f)) for f in fields])
        else:
            for r in records:
                json.dump(
                    {f: getattr(r, f) for f in fields},
                    out,
                    default=lambda v: None if v is None else v,
                )
                out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()


class UsageError(Exception):
    pass


def _parse_scheme(name: str) -> Scheme:
    try:
        return Scheme(name)
    except ValueError:
        raise UsageError(f"unknown scheme {name!r}") from None


def _check_probs(values, what):
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise UsageError(f"{what} must be inside [0, 1], got {v}")


def _parse_range(spec: str):
    """start:stop:count inclusive grid, or a single value."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise UsageError(f"bad range {spec!r}; expected start:stop:count")
    start, stop = float(parts[0]), float(parts[1])
    count = int(parts[2])
    if count < 1 or stop < start:
        raise UsageError(f"bad range {spec!r}")
    if count == 1:
        return [start]
    step = (stop - start) / (count - 1)
    return [start + i * step for i in range(count)]


def _load_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _common_simulation_args(p: argparse.ArgumentParser):
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=None)
    p.add_argument("--p-bond", type=float, nargs="+", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", default=None, help="file path or - for stdout")
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--config", default=None, help="key=value defaults file")
    p.add_argument("--quiet", action="store_true")


def _merged(args, config_defaults, key, fallback, cast):
    """Precedence: explicit flag > config file > built-in default."""
    v = getattr(args, key.replace("-", "_"), None)
    if v is not None:
        return v
    if key in config_defaults:
        raw = config_defaults[key]
        if cast is list_float:
            return list_float(raw)
        return cast(raw)
    return fallback


def list_float(raw):
    return [float(x) for x in str(raw).split(",")]


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    scheme = _parse_scheme(_merged(args, cfg, "scheme", "non-adaptive", str))
    distances = _merged(args, cfg, "distance", [5], list_float)
    p_bonds = _merged(args, cfg, "p-bond", [0.0], list_float)
    p_comps = _merged(args, cfg, "p-comp", [0.01], list_float)
    trials = int(_merged(args, cfg, "trials", 1000, int))
    seed = int(_merged(args, cfg, "seed", 0, int))
    workers = int(_merged(args, cfg, "workers", default_workers(), int))
    _check_probs(p_bonds, "--p-bond")
    _check_probs(p_comps, "--p-comp")
    if seed < 0:
        raise UsageError("--seed must be non-negative")
    spec = SweepSpec(
        scheme=scheme,
        distances=tuple(int(d) for d in distances),
        p_bonds=tuple(p_bonds),
        p_comps=tuple(p_comps),
        trials=trials,
        seed=seed,
        workers=workers,
    )
    progress = None
    if not args.quiet:
        def progress(pt):
            print(
                f"# d={pt.d} p_bond={_fmt(pt.p_bond)} p_comp={_fmt(pt.p_comp)} "
                f"rate={_fmt(pt.rate)} [{pt.failures}/{pt.trials}]",
                file=sys.stderr,
            )
    points = run_batch(spec, progress=progress)
    _emit(points, POINT_FIELDS, args.format or cfg.get("format", "csv"),
          args.output or cfg.get("output"))
    return 0


@dataclass
class _ThresholdRecord:
    scheme: str
    p_bond: float
    p_th: float | None
    ci_low: float | None
    ci_high: float | None
    method: str


def cmd_threshold(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    scheme = _parse_scheme(_merged(args, cfg, "scheme", "non-adaptive", str))
    distances = _merged(args, cfg, "distances", [5, 7, 9], list_float)
    p_bonds = _merged(args, cfg, "p-bond", [0.0], list_float)
    p_comps = _parse_range(args.p_comp_range) if args.p_comp_range else None
    if p_comps is None:
        p_comps = _merged(args, cfg, "p-comp-range", None, _parse_range)
    if p_comps is None:
        raise UsageError("--p-comp-range is required")
    trials = int(_merged(args, cfg, "trials", 2000, int))
    seed = int(_merged(args, cfg, "seed", 0, int))
    workers = int(_merged(args, cfg, "workers", default_workers(), int))
    _check_probs(p_bonds, "--p-bond")
    _check_probs(p_comps, "p_comp range")
    if len(p_comps) < 4:
        raise UsageError("p_comp range needs at least 4 points")
    if len(distances) < 3:
        raise UsageError("need at least 3 distances")

    records = []
    found_any = False
    for p_bond in p_bonds:
        spec = SweepSpec(
            scheme=scheme,
            distances=tuple(int(d) for d in distances),
            p_bonds=(p_bond,),
            p_comps=tuple(p_comps),
            trials=trials,
            seed=seed,
            workers=workers,
        )
        progress = None
        if not args.quiet:
            def progress(pt):
                print(
                    f"# d={pt.d} p_bond={_fmt(pt.p_bond)} "
                    f"p_comp={_fmt(pt.p_comp)} rate={_fmt(pt.rate)}",
                    file=sys.stderr,
                )
        points = run_batch(spec, progress=progress)
        est = estimate_threshold(points)
        found_any = found_any or est.p_th is not None
        records.append(
            _ThresholdRecord(
                scheme=est.scheme,
                p_bond=est.p_bond,
                p_th=est.p_th,
                ci_low=est.ci_low,
                ci_high=est.ci_high,
                method=est.method,
            )
        )
    _emit(records, THRESHOLD_FIELDS, args.format or cfg.get("format", "csv"),
          args.output or cfg.get("output"))
    return 0 if found_any else 1


def cmd_analytic(args) -> int:
    scheme = _parse_scheme(args.scheme)
    limit = percolation_limit_analytic(scheme)
    print(f"{scheme.value} percolation limit: p_bond = {_fmt(limit)}")
    return 0


def cmd_verify(args) -> int:
    from tcsim.oracle import verify_matching, verify_small_lattice

    suite = args.suite
    checks = []
    if suite in ("matching", "all"):
        checks.extend(
            verify_matching(
                n_instances=args.instances,
                seed=args.seed if args.seed is not None else 2024,
                fault_injection=args.inject_fault,
            )
        )
    if suite in ("small-lattice", "all"):
        checks.extend(
            verify_small_lattice(
                trials=args.trials,
                seed=args.seed if args.seed is not None else 99,
            )
        )
    width = max(len(c.name) for c in checks)
    for c in checks:
        status = "ok" if c.passed else "FAIL"
        print(f"{c.name:<{width}}  {status:<4}  {c.detail}")
    return 0 if all(c.passed for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tcsim",
        description=(
            "Monte Carlo fault tolerance of the 3D topological cluster "
            "state under heralded bond loss"
        ),
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="logical error rates on a grid")
    ps.add_argument("--distance", type=int, nargs="+", default=None)
    ps.add_argument("--p-comp", type=float, nargs="+", default=None)
    _common_simulation_args(ps)
    ps.set_defaults(func=cmd_simulate)

    pt = sub.add_parser("threshold", help="thresholds from curve crossings")
    pt.add_argument("--distances", type=int, nargs="+", default=None)
    pt.add_argument(
        "--p-comp-range", default=None, help="start:stop:count inclusive grid"
    )
    _common_simulation_args(pt)
    pt.set_defaults(func=cmd_threshold)

    pa = sub.add_parser("analytic", help="closed-form percolation limits")
    pa.add_argument("--scheme", required=True)
    pa.set_defaults(func=cmd_analytic)

    pv = sub.add_parser("verify", help="oracle cross-checks")
    pv.add_argument(
        "--suite", choices=["matching", "small-lattice", "all"], default="all"
    )
    pv.add_argument("--instances", type=int, default=500)
    pv.add_argument("--trials", type=int, default=200_000)
    pv.add_argument("--seed", type=int, default=None)
    pv.add_argument(
        "--inject-fault", type=float, default=0.0, help=argparse.SUPPRESS
    )
    pv.set_defaults(func=cmd_verify)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
