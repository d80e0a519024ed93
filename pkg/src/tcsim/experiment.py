"""Monte Carlo harness: trial batches, rate estimates, threshold location.

Trials are embarrassingly parallel and reproducible: every random draw in
trial t comes from a counter-based stream keyed by (seed, t, purpose), so
results are identical for any worker count or execution order. Thresholds
come from the crossing of logical-error-rate curves across code distances,
fitted with a quadratic finite-size-scaling ansatz in
(p_comp - p_th) * d^(1/nu), with a pairwise-crossing fallback.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
from scipy.optimize import least_squares

from tcsim.damage import NoiseParams, Scheme, sample_damage_partitions
from tcsim.decoder import FastDecoder, TrialOutcome, sample_measurement_mask
from tcsim.lattice import DUAL, PRIMAL, LatticeGeometry, build_lattice

# Per-qubit removal fraction at which supercheck formation stops working on
# the cubic lattice (percolation of the removed-qubit clusters).
LOSS_PERCOLATION_FRACTION = 0.249


@dataclass(frozen=True)
class SweepSpec:
    scheme: Scheme
    distances: tuple[int, ...]
    p_bonds: tuple[float, ...]
    p_comps: tuple[float, ...]
    trials: int
    seed: int
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for p in (*self.p_bonds, *self.p_comps):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability out of range: {p}")
        if any(d < 2 for d in self.distances):
            raise ValueError("distances must be >= 2")


@dataclass(frozen=True)
class PointEstimate:
    scheme: str
    d: int
    p_bond: float
    p_comp: float
    trials: int
    failures: int
    percolation_failures: int
    rate: float
    ci_low: float
    ci_high: float
    seed: int


@dataclass(frozen=True)
class ThresholdEstimate:
    scheme: str
    p_bond: float
    p_th: float | None
    ci_low: float | None
    ci_high: float | None
    method: str  # "scaling_fit" | "pairwise_crossings" | "no_crossing"
    diagnostics: dict = field(default_factory=dict)


def wilson_interval(failures: int, trials: int, z: float = 1.96):
    """95% Wilson score interval for a binomial rate."""
    if trials == 0:
        return 0.0, 1.0
    phat = failures / trials
    z2 = z * z
    denom = 1 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials**2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


class _TrialRunner:
    """Geometry plus both lattice decoders, reused across trials."""

    def __init__(self, g: LatticeGeometry):
        self.g = g
        self.primal = FastDecoder(g, PRIMAL)
        self.dual = FastDecoder(g, DUAL)

    def run(self, scheme: Scheme, n: NoiseParams) -> TrialOutcome:
        g = self.g
        if n.p_bond > 0.0:
            part_p, part_d = sample_damage_partitions(g, scheme, n)
            if part_p.percolates or part_d.percolates:
                return TrialOutcome(success=False, failure_class="percolation")
        else:
            part_p = part_d = None

        removed_p = None if part_p is None else part_p.removed_rows
        flips_p = sample_measurement_mask(g, PRIMAL, removed_p, n)
        if not self.primal.decode(flips_p, n.p_comp, part_p):
            return TrialOutcome(success=False, failure_class="logical_primal")

        removed_d = None if part_d is None else part_d.removed_rows
        flips_d = sample_measurement_mask(g, DUAL, removed_d, n)
        if not self.dual.decode(flips_d, n.p_comp, part_d):
            return TrialOutcome(success=False, failure_class="logical_dual")

        return TrialOutcome(success=True, failure_class="none")


_runner_cache: dict[int, _TrialRunner] = {}


def _runner_for(d: int) -> _TrialRunner:
    r = _runner_cache.get(d)
    if r is None:
        r = _TrialRunner(build_lattice(d))
        _runner_cache[d] = r
    return r


def run_trial(g: LatticeGeometry, scheme: Scheme, n: NoiseParams) -> TrialOutcome:
    """One end-to-end trial: damage, measurement errors, both decodes.

    Dual decoding is skipped when the primal lattice already failed; the
    per-purpose random streams make that shortcut invisible to every other
    draw in the trial.
    """
    runner = _runner_cache.get(g.d)
    if runner is None or runner.g is not g:
        runner = _TrialRunner(g)
    return runner.run(scheme, n)


def _run_chunk(args) -> tuple[int, int]:
    scheme_value, d, p_bond, p_comp, seed, start, count = args
    scheme = Scheme(scheme_value)
    runner = _runner_for(d)
    failures = 0
    percolations = 0
    for t in range(start, start + count):
        n = NoiseParams(p_bond=p_bond, p_comp=p_comp, seed=seed, trial_index=t)
        out = runner.run(scheme, n)
        if not out.success:
            failures += 1
            if out.failure_class == "percolation":
                percolations += 1
    return failures, percolations


def default_workers() -> int:
    env = os.environ.get("TCSIM_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_batch(spec: SweepSpec, progress=None) -> list[PointEstimate]:
    """Estimate the logical error rate on the full parameter grid.

    Trials at each grid point are indexed 0..trials-1 and split across
    workers; the counts merge commutatively, so estimates are identical for
    any worker count.
    """
    points = []
    grid = list(product(spec.distances, spec.p_bonds, spec.p_comps))
    workers = max(1, spec.workers)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for d, p_bond, p_comp in grid:
            chunk = (spec.trials + workers - 1) // workers
            tasks = []
            start = 0
            while start < spec.trials:
                count = min(chunk, spec.trials - start)
                tasks.append(
                    (spec.scheme.value, d, p_bond, p_comp, spec.seed, start, count)
                )
                start += count
            if pool is None:
                results = [_run_chunk(t) for t in tasks]
            else:
                results = list(pool.map(_run_chunk, tasks))
            failures = sum(r[0] for r in results)
            percolations = sum(r[1] for r in results)
            lo, hi = wilson_interval(failures, spec.trials)
            point = PointEstimate(
                scheme=spec.scheme.value,
                d=d,
                p_bond=p_bond,
                p_comp=p_comp,
                trials=spec.trials,
                failures=failures,
                percolation_failures=percolations,
                rate=failures / spec.trials,
                ci_low=lo,
                ci_high=hi,
                seed=spec.seed,
            )
            points.append(point)
            if progress is not None:
                progress(point)
    finally:
        if pool is not None:
            pool.shutdown()
    return points


# --- threshold estimation ----------------------------------------------------


def _ordering_flips(by_d: dict[int, list[tuple[float, float]]]) -> list[bool]:
    """Per distance pair: does the rate ordering flip across the swept range?

    Below threshold the larger distance has the lower logical rate; above it
    the ordering reverses. A pair only counts as crossing when both ends of
    the range show the expected orientations, which keeps mid-grid noise
    (or saturated percolation-dominated curves) from faking a crossing.
    """
    flips = []
    for d1, d2 in combinations(sorted(by_d), 2):
        c1 = dict(by_d[d1])
        c2 = dict(by_d[d2])
        ps = sorted(set(c1) & set(c2))
        dlo = c2[ps[0]] - c1[ps[0]]
        dhi = c2[ps[-1]] - c1[ps[-1]]
        flips.append(dlo < 0 < dhi)
    return flips


def _pairwise_crossings(by_d: dict[int, list[tuple[float, float]]]) -> list[float]:
    """Crossing points of linearly interpolated rate curves, per distance pair."""
    crossings = []
    for d1, d2 in combinations(sorted(by_d), 2):
        c1 = dict(by_d[d1])
        c2 = dict(by_d[d2])
        ps = sorted(set(c1) & set(c2))
        for pa, pb in zip(ps, ps[1:]):
            da = c2[pa] - c1[pa]
            db = c2[pb] - c1[pb]
            if da == db == 0:
                continue
            if da * db <= 0 and (da != 0 or db != 0):
                frac = da / (da - db) if da != db else 0.0
                crossings.append(pa + frac * (pb - pa))
    return crossings


def _scaling_residuals(theta, pts):
    p_th, nu, a, b, c = theta
    out = []
    for d, p, rate, sigma in pts:
        x = (p - p_th) * d ** (1.0 / nu)
        out.append((a + b * x + c * x * x - rate) / sigma)
    return out


def _fit_scaling(pts, p0):
    lo = [min(p for _, p, _, _ in pts), 0.4, 0.0, -np.inf, -np.inf]
    hi = [max(p for _, p, _, _ in pts), 3.0, 1.0, np.inf, np.inf]
    res = least_squares(
        _scaling_residuals, p0, args=(pts,), bounds=(lo, hi), max_nfev=2000
    )
    return res


def estimate_threshold(
    points: list[PointEstimate],
    n_bootstrap: int = 1000,
    rng_seed: int = 1234,
) -> ThresholdEstimate:
    """Locate the crossing of logical-error-rate curves across distances.

    Fits rate = A + B x + C x^2 with x = (p_comp - p_th) d^(1/nu); p_th and
    nu are free. Falls back to averaging pairwise curve crossings when the
    fit misbehaves, and reports "no_crossing" when the curves never
    intersect inside the swept range (e.g. beyond the percolation limit).
    """
    if not points:
        raise ValueError("no points given")
    schemes = {p.scheme for p in points}
    p_bonds = {p.p_bond for p in points}
    if len(schemes) != 1 or len(p_bonds) != 1:
        raise ValueError("points must share one scheme and one p_bond")
    scheme = schemes.pop()
    p_bond = p_bonds.pop()
    distances = sorted({p.d for p in points})
    p_comps = sorted({p.p_comp for p in points})
    if len(distances) < 3:
        raise ValueError("need at least 3 distances")
    if len(p_comps) < 4:
        raise ValueError("need at least 4 p_comp values")

    by_d: dict[int, list[tuple[float, float]]] = {d: [] for d in distances}
    for p in points:
        by_d[p.d].append((p.p_comp, p.rate))
    for d in by_d:
        by_d[d].sort()

    flips = _ordering_flips(by_d)
    crossings = _pairwise_crossings(by_d)
    if sum(flips) * 2 < len(flips) or not crossings:
        return ThresholdEstimate(
            scheme=scheme,
            p_bond=p_bond,
            p_th=None,
            ci_low=None,
            ci_high=None,
            method="no_crossing",
            diagnostics={
                "distances": distances,
                "p_comps": p_comps,
                "ordering_flips": flips,
            },
        )

    def sigma_of(p: PointEstimate) -> float:
        s = np.sqrt(max(p.rate * (1 - p.rate), 1e-9) / p.trials)
        return max(s, 1e-6)

    pts = [(p.d, p.p_comp, p.rate, sigma_of(p)) for p in points]
    p0 = [float(np.median(crossings)), 1.0, float(np.mean([r for *_, r, _ in pts])),
          1.0, 0.0]

    def fit_once(data):
        try:
            res = _fit_scaling(data, p0)
        except Exception:
            return None
        if not res.success and res.status <= 0:
            return None
        return res

    res = fit_once(pts)
    in_range = (
        res is not None and p_comps[0] <= res.x[0] <= p_comps[-1]
    )

    rng = np.random.default_rng(rng_seed)
    trials_of = {(p.d, p.p_comp): p.trials for p in points}

    if in_range:
        method = "scaling_fit"
        p_th = float(res.x[0])
        dof = max(1, len(pts) - 5)
        gof = float(np.sum(np.square(res.fun)) / dof)
        boot = []
        for _ in range(n_bootstrap):
            data = []
            for p in points:
                k = rng.binomial(p.trials, max(min(p.rate, 1.0), 0.0))
                rate = k / p.trials
                s = np.sqrt(max(rate * (1 - rate), 1e-9) / p.trials)
                data.append((p.d, p.p_comp, rate, max(s, 1e-6)))
            r = fit_once(data)
            if r is not None and p_comps[0] <= r.x[0] <= p_comps[-1]:
                boot.append(r.x[0])
        if len(boot) >= n_bootstrap // 2:
            ci_low, ci_high = np.percentile(boot, [2.5, 97.5])
        else:
            ci_low = ci_high = None
        diagnostics = {
            "nu": float(res.x[1]),
            "coefficients": [float(v) for v in res.x[2:]],
            "chi2_per_dof": gof,
            "n_bootstrap_ok": len(boot),
            "pairwise_crossings": crossings,
        }
    else:
        method = "pairwise_crossings"
        p_th = float(np.mean(crossings))
        boot = []
        for _ in range(n_bootstrap):
            res_by_d: dict[int, list[tuple[float, float]]] = {
                d: [] for d in distances
            }
            for p in points:
                k = rng.binomial(p.trials, max(min(p.rate, 1.0), 0.0))
                res_by_d[p.d].append((p.p_comp, k / p.trials))
            for d in res_by_d:
                res_by_d[d].sort()
            cs = _pairwise_crossings(res_by_d)
            if cs:
                boot.append(float(np.mean(cs)))
        if boot:
            ci_low, ci_high = np.percentile(boot, [2.5, 97.5])
        else:
            ci_low = ci_high = None
        diagnostics = {"pairwise_crossings": crossings}

    return ThresholdEstimate(
        scheme=scheme,
        p_bond=p_bond,
        p_th=p_th,
        ci_low=None if ci_low is None else float(ci_low),
        ci_high=None if ci_high is None else float(ci_high),
        method=method,
        diagnostics=diagnostics,
    )


def percolation_limit_analytic(scheme: Scheme) -> float:
    """Bond-failure rate at which removed qubits reach the known
    per-qubit percolation fraction.

    Non-adaptive: a bulk qubit survives only if all four incident bonds do,
    so 1 - (1 - p)^4 = f. Adaptive: each incident failed bond removes this
    qubit with probability 1/2, so 1 - (1 - p/2)^4 = f. The adaptive limit
    is exactly twice the non-adaptive one.
    """
    base = 1.0 - (1.0 - LOSS_PERCOLATION_FRACTION) ** 0.25
    if scheme is Scheme.NON_ADAPTIVE:
        return base
    if scheme is Scheme.ADAPTIVE:
        return 2.0 * base
    raise ValueError(f"unknown scheme {scheme!r}")


def fit_threshold_curve(
    p_bonds: list[float], p_ths: list[float]
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares quadratic p_th(p_bond); returns (coeffs, 1-sigma errors).

    Coefficients are ascending: p_th = c0 + c1 p + c2 p^2.
    """
    if len(p_bonds) != len(p_ths):
        raise ValueError("length mismatch")
    if len(p_bonds) < 4:
        raise ValueError("need at least 4 points for a quadratic fit")
    coeffs, cov = np.polyfit(p_bonds, p_ths, 2, cov=True)
    return coeffs[::-1], np.sqrt(np.diag(cov))[::-1]
