import numpy as np
import pytest

from tcsim.damage import NoiseParams, Scheme
from tcsim.experiment import (
    PointEstimate,
    SweepSpec,
    ThresholdEstimate,
    estimate_threshold,
    fit_threshold_curve,
    percolation_limit_analytic,
    run_batch,
    run_trial,
    wilson_interval,
)
from tcsim.lattice import build_lattice


@pytest.fixture(scope="module")
def g2():
    return build_lattice(2)


def test_trial_noiseless_succeeds(g2):
    out = run_trial(g2, Scheme.NON_ADAPTIVE, NoiseParams(0.0, 0.0, seed=1))
    assert out.success and out.failure_class == "none"


def test_trial_total_bond_failure_percolates(g2):
    out = run_trial(g2, Scheme.NON_ADAPTIVE, NoiseParams(1.0, 0.0, seed=1))
    assert not out.success and out.failure_class == "percolation"


def test_trial_deterministic(g2):
    n = NoiseParams(0.1, 0.03, seed=8, trial_index=17)
    a = run_trial(g2, Scheme.ADAPTIVE, n)
    b = run_trial(g2, Scheme.ADAPTIVE, n)
    assert a == b


def test_trial_failure_classes_observed(g2):
    seen = set()
    for t in range(400):
        out = run_trial(
            g2, Scheme.NON_ADAPTIVE, NoiseParams(0.05, 0.08, seed=3, trial_index=t)
        )
        seen.add(out.failure_class)
    assert "none" in seen
    assert "logical_primal" in seen or "logical_dual" in seen


def test_wilson_zero_failures():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0.0
    assert hi == pytest.approx(0.00383, abs=2e-5)


def test_wilson_shrinks_with_sqrt_n():
    lo1, hi1 = wilson_interval(50, 1000)
    lo2, hi2 = wilson_interval(100, 2000)
    assert (hi2 - lo2) == pytest.approx((hi1 - lo1) / np.sqrt(2), rel=0.05)


def test_wilson_bounds_in_unit_interval():
    for k, n in [(0, 1), (1, 1), (5, 10), (999, 1000)]:
        lo, hi = wilson_interval(k, n)
        assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_run_batch_deterministic_across_workers():
    spec1 = SweepSpec(
        scheme=Scheme.ADAPTIVE,
        distances=(2,),
        p_bonds=(0.0, 0.05),
        p_comps=(0.02, 0.05),
        trials=300,
        seed=21,
        workers=1,
    )
    spec2 = SweepSpec(**{**spec1.__dict__, "workers": 2})
    r1 = run_batch(spec1)
    r2 = run_batch(spec2)
    assert r1 == r2


def test_run_batch_schema_and_counts():
    spec = SweepSpec(
        scheme=Scheme.NON_ADAPTIVE,
        distances=(2,),
        p_bonds=(0.0,),
        p_comps=(0.0,),
        trials=50,
        seed=2,
        workers=1,
    )
    (pt,) = run_batch(spec)
    assert pt.failures == 0 and pt.rate == 0.0 and pt.ci_low == 0.0
    assert pt.trials == 50 and pt.scheme == "non-adaptive"
    assert pt.percolation_failures == 0


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(Scheme.ADAPTIVE, (2,), (0.0,), (1.5,), 10, 1)
    with pytest.raises(ValueError):
        SweepSpec(Scheme.ADAPTIVE, (1,), (0.0,), (0.5,), 10, 1)
    with pytest.raises(ValueError):
        SweepSpec(Scheme.ADAPTIVE, (2,), (0.0,), (0.5,), 0, 1)


def synthetic_points(p_th, nu, rates_fn, distances, p_comps, trials, seed):
    rng = np.random.default_rng(seed)
    pts = []
    for d in distances:
        for p in p_comps:
            x = (p - p_th) * d ** (1.0 / nu)
            mean = rates_fn(x)
            k = rng.binomial(trials, mean)
            lo, hi = wilson_interval(k, trials)
            pts.append(
                PointEstimate(
                    scheme="non-adaptive",
                    d=d,
                    p_bond=0.0,
                    p_comp=p,
                    trials=trials,
                    failures=int(k),
                    percolation_failures=0,
                    rate=k / trials,
                    ci_low=lo,
                    ci_high=hi,
                    seed=seed,
                )
            )
    return pts


def test_estimate_threshold_recovers_synthetic_crossing():
    p_th = 0.029
    pts = synthetic_points(
        p_th,
        nu=1.0,
        rates_fn=lambda x: np.clip(0.12 + 3.0 * x + 8.0 * x * x, 1e-4, 0.9),
        distances=(5, 7, 9),
        p_comps=(0.023, 0.026, 0.029, 0.032, 0.035),
        trials=20000,
        seed=5,
    )
    est = estimate_threshold(pts, n_bootstrap=120)
    assert est.method == "scaling_fit"
    assert est.p_th == pytest.approx(p_th, abs=0.002)
    assert est.ci_low is not None and est.ci_low <= est.p_th <= est.ci_high


def test_estimate_threshold_reports_no_crossing():
    # Rates increase with d everywhere: supercritical, no intersection.
    pts = synthetic_points(
        p_th=-0.05,
        nu=1.0,
        rates_fn=lambda x: np.clip(0.05 + 2.0 * x, 1e-4, 0.9),
        distances=(5, 7, 9),
        p_comps=(0.02, 0.03, 0.04, 0.05),
        trials=5000,
        seed=6,
    )
    est = estimate_threshold(pts, n_bootstrap=50)
    assert est.method == "no_crossing"
    assert est.p_th is None


def test_estimate_threshold_input_validation():
    pts = synthetic_points(
        0.03, 1.0, lambda x: 0.1, (5, 7), (0.02, 0.03, 0.04, 0.05), 100, 1
    )
    with pytest.raises(ValueError):
        estimate_threshold(pts)


def rate_of(d, scheme, p_bond, p_comp, trials, seed=77):
    spec = SweepSpec(
        scheme=scheme,
        distances=(d,),
        p_bonds=(p_bond,),
        p_comps=(p_comp,),
        trials=trials,
        seed=seed,
        workers=1,
    )
    (pt,) = run_batch(spec)
    return pt.rate


def test_rate_ordering_brackets_threshold():
    # Below threshold the logical rate falls with distance; above it rises.
    below = [rate_of(d, Scheme.NON_ADAPTIVE, 0.0, 0.01, 4000) for d in (3, 5, 7)]
    assert below[0] > below[1] > below[2]
    above = [rate_of(d, Scheme.NON_ADAPTIVE, 0.0, 0.05, 800) for d in (3, 5, 7)]
    assert above[0] < above[1] < above[2]


def test_adaptive_dominates_non_adaptive():
    non = rate_of(3, Scheme.NON_ADAPTIVE, 0.06, 0.01, 1500)
    ada = rate_of(3, Scheme.ADAPTIVE, 0.06, 0.01, 1500)
    sigma = np.sqrt(non * (1 - non) / 1500 + ada * (1 - ada) / 1500)
    assert ada <= non + 3 * sigma
    assert ada < non  # at 6% bond loss the gap is far beyond noise


def test_percolation_limits_match_closed_form():
    non = percolation_limit_analytic(Scheme.NON_ADAPTIVE)
    ada = percolation_limit_analytic(Scheme.ADAPTIVE)
    assert non == pytest.approx(0.069, abs=0.001)
    assert ada == pytest.approx(0.138, abs=0.001)
    assert ada == pytest.approx(2 * non, rel=1e-12)


def test_fit_threshold_curve_exact_recovery():
    xs = [0.0, 0.01, 0.02, 0.03, 0.05, 0.06]
    ys = [0.029 - 0.587 * x + 2.786 * x * x for x in xs]
    coeffs, errs = fit_threshold_curve(xs, ys)
    assert coeffs[0] == pytest.approx(0.029, abs=1e-6)
    assert coeffs[1] == pytest.approx(-0.587, abs=1e-6)
    assert coeffs[2] == pytest.approx(2.786, abs=1e-4)


def test_fit_threshold_curve_needs_four_points():
    with pytest.raises(ValueError):
        fit_threshold_curve([0.0, 0.01, 0.02], [0.029, 0.024, 0.019])
