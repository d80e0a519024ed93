import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcsim.damage import (
    CorrelationSurface,
    NoiseParams,
    PercolationError,
    Scheme,
    build_correlation_surface,
    form_superchecks,
    map_failures,
    sample_bond_failures,
    sample_bond_mask,
    sample_damage,
)
from tcsim.lattice import DUAL, PRIMAL, Bond, Site, build_lattice, site_lattice


@pytest.fixture(scope="module")
def g2():
    return build_lattice(2)


@pytest.fixture(scope="module")
def g3():
    return build_lattice(3)


def test_noise_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(p_bond=1.5, p_comp=0.0, seed=1)
    with pytest.raises(ValueError):
        NoiseParams(p_bond=0.0, p_comp=-0.1, seed=1)


def test_no_failures_at_zero_rate(g2):
    n = NoiseParams(p_bond=0.0, p_comp=0.0, seed=3)
    assert sample_bond_failures(g2, n) == set()


def test_all_unprotected_fail_at_unit_rate(g2):
    n = NoiseParams(p_bond=1.0, p_comp=0.0, seed=3)
    failed = sample_bond_failures(g2, n)
    unprotected = {b for i, b in enumerate(g2.bonds) if not g2.bond_protected[i]}
    assert failed == unprotected
    protected = set(g2.bonds) - unprotected
    assert failed.isdisjoint(protected)


def test_failure_fraction_within_binomial_bounds():
    g = build_lattice(7)
    p = 0.1
    draws = 0
    hits = 0
    trial = 0
    while draws < 100_000:
        n = NoiseParams(p_bond=p, p_comp=0.0, seed=11, trial_index=trial)
        mask = sample_bond_mask(g, n)
        draws += int((~g.bond_protected).sum())
        hits += int(mask.sum())
        trial += 1
    sigma = np.sqrt(draws * p * (1 - p))
    assert abs(hits - draws * p) < 5 * sigma


def test_sampling_deterministic(g2):
    a = sample_bond_failures(g2, NoiseParams(0.3, 0.0, seed=5, trial_index=9))
    b = sample_bond_failures(g2, NoiseParams(0.3, 0.0, seed=5, trial_index=9))
    c = sample_bond_failures(g2, NoiseParams(0.3, 0.0, seed=5, trial_index=10))
    assert a == b
    assert a != c


def bulk_bond(g):
    """An unprotected bond away from all boundaries."""
    for i, b in enumerate(g.bonds):
        if g.bond_protected[i]:
            continue
        if g.is_bulk(b.a) and g.is_bulk(b.b):
            return b
    raise AssertionError("no bulk bond found")


def test_non_adaptive_removes_both_endpoints(g3):
    b = bulk_bond(g3)
    n = NoiseParams(0.0, 0.0, seed=1)
    rp, rd = map_failures(g3, {b}, Scheme.NON_ADAPTIVE, n)
    assert len(rp) == 1 and len(rd) == 1
    (p,) = rp
    (q,) = rd
    assert {p, q} == {b.a, b.b}
    assert site_lattice(p) == PRIMAL and site_lattice(q) == DUAL


def test_adaptive_removes_exactly_one_endpoint(g3):
    b = bulk_bond(g3)
    seen = set()
    for seed in range(20):
        n = NoiseParams(0.0, 0.0, seed=seed)
        rp, rd = map_failures(g3, {b}, Scheme.ADAPTIVE, n)
        assert len(rp) + len(rd) == 1
        seen.add((len(rp), len(rd)))
    # The coin lands both ways across seeds.
    assert seen == {(1, 0), (0, 1)}


def test_adaptive_skips_bond_with_already_removed_endpoint(g3):
    # Two failed bonds sharing a primal endpoint p, processed in canonical
    # order. If the first bond's coin removes p, the second bond is fully
    # neutralised and removes nothing; otherwise the second bond tosses its
    # own coin. Exactly three outcomes are possible.
    p = bulk_bond(g3).a if site_lattice(bulk_bond(g3).a) == PRIMAL else bulk_bond(g3).b
    q1, q2 = sorted(g3.adjacency[p])[:2]
    b1 = Bond(*sorted((p, q1)))
    b2 = Bond(*sorted((p, q2)))
    outcomes = set()
    for seed in range(60):
        n = NoiseParams(0.0, 0.0, seed=seed)
        rp, rd = map_failures(g3, {b1, b2}, Scheme.ADAPTIVE, n)
        key = (frozenset(rp), frozenset(rd))
        outcomes.add(key)
        assert key in {
            (frozenset({p}), frozenset()),          # first coin hit p: b2 skipped
            (frozenset(), frozenset({q1, q2})),     # both coins hit dual side
            (frozenset({p}), frozenset({q1})),      # b1 removed q1, b2 removed p
        }
    assert (frozenset({p}), frozenset()) in outcomes
    assert len(outcomes) == 3


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_adaptive_damage_never_exceeds_non_adaptive(seed):
    g = build_lattice(2)
    n = NoiseParams(p_bond=0.15, p_comp=0.0, seed=seed)
    failed = sample_bond_failures(g, n)
    rp_n, rd_n = map_failures(g, failed, Scheme.NON_ADAPTIVE, n)
    rp_a, rd_a = map_failures(g, failed, Scheme.ADAPTIVE, n)
    assert len(rp_a) + len(rd_a) <= len(rp_n) + len(rd_n)


def full_cube(g, lattice, center):
    half = g.half(lattice)
    idx = half.cube_index[center]
    return idx, half.cube_face_rows[idx]


def test_supercheck_of_two_adjacent_cubes_has_ten_faces(g3):
    # Bulk cubes (3,1,5) and (3,3,5) share the face (3,2,5).
    shared = Site(3, 2, 5)
    part = form_superchecks(g3, {shared}, PRIMAL)
    rep = part.labels[g3.primal.cube_index[(3, 1, 5)]]
    assert part.labels[g3.primal.cube_index[(3, 3, 5)]] == rep
    faces = part.group_faces(g3, int(rep))
    assert len(faces) == 10
    assert shared not in faces


def test_supercheck_three_collinear_cubes_fourteen_faces(g3):
    removed = {Site(3, 1, 4), Site(3, 1, 6)}
    part = form_superchecks(g3, removed, PRIMAL)
    rep = int(part.labels[g3.primal.cube_index[(3, 1, 5)]])
    for c in ((3, 1, 3), (3, 1, 7)):
        assert part.labels[g3.primal.cube_index[c]] == rep
    faces = part.group_faces(g3, rep)
    assert len(faces) == 14
    assert removed.isdisjoint(faces)


def test_no_removal_gives_singleton_groups_with_six_faces(g3):
    part = form_superchecks(g3, set(), PRIMAL)
    assert not part.percolates
    idx = g3.primal.cube_index[(3, 1, 5)]
    assert part.labels[idx] == idx
    assert len(part.group_faces(g3, idx)) == 6


def test_form_superchecks_rejects_wrong_lattice_site(g3):
    dual_site = next(s for s in g3.sites if site_lattice(s) == DUAL)
    with pytest.raises(ValueError):
        form_superchecks(g3, {dual_site}, PRIMAL)


def flat_sheet(g, lattice):
    half = g.half(lattice)
    axis = half.rough_axis
    lo = (g.x_range, g.y_range)[axis][0]
    return {s for s in half.face_sites if s[axis] == lo}


def test_undamaged_surface_is_flat_terminal_sheet(g2):
    part = form_superchecks(g2, set(), PRIMAL)
    surf = build_correlation_surface(g2, part)
    assert surf.faces == flat_sheet(g2, PRIMAL)


def test_surface_avoids_removed_face_by_one_cube_deformation(g2):
    removed = {Site(1, 0, 3)}
    part = form_superchecks(g2, removed, PRIMAL)
    surf = build_correlation_surface(g2, part)
    assert Site(1, 0, 3) not in surf.faces
    cube_rows = g2.primal.cube_face_rows[g2.primal.cube_index[(1, 1, 3)]]
    cube_faces = {g2.primal.face_sites[r] for r in cube_rows}
    assert surf.faces == flat_sheet(g2, PRIMAL) ^ cube_faces


def test_percolating_chain_raises(g2):
    # One cube merged with both terminals spans the whole y extent at d=2.
    removed = {Site(1, 0, 3), Site(1, 2, 3)}
    part = form_superchecks(g2, removed, PRIMAL)
    assert part.percolates
    with pytest.raises(PercolationError):
        build_correlation_surface(g2, part)


def random_terminal_path(g, lattice, part, rng):
    """Random walk over cube-graph edges from terminal A to terminal B.

    Returns the list of face rows traversed.
    """
    half = g.half(lattice)
    nc = half.n_cubes
    adj: dict[int, list[tuple[int, int]]] = {}
    for row in range(half.n_faces):
        a = int(half.face_cube_a[row])
        b = int(half.face_cube_b[row])
        a = nc if a == -1 else (nc + 1 if a == -2 else a)
        b = nc if b == -1 else (nc + 1 if b == -2 else b)
        adj.setdefault(a, []).append((b, row))
        adj.setdefault(b, []).append((a, row))
    while True:
        node = nc
        rows = []
        for _ in range(2000):
            nxt, row = adj[node][rng.integers(len(adj[node]))]
            rows.append(row)
            node = nxt
            if node == nc + 1:
                return rows
        # Extremely unlikely on these small graphs; retry.


@pytest.mark.parametrize("lattice", [PRIMAL, DUAL])
def test_cut_validity_random_paths(lattice):
    g = build_lattice(2)
    rng = np.random.default_rng(17)
    for seed in range(4):
        n = NoiseParams(p_bond=0.12, p_comp=0.0, seed=seed)
        report = sample_damage(g, Scheme.NON_ADAPTIVE, n)
        part = (
            report.partition_primal if lattice == PRIMAL else report.partition_dual
        )
        if part.percolates:
            continue
        surf = build_correlation_surface(g, part)
        for _ in range(50):
            rows = random_terminal_path(g, lattice, part, rng)
            crossings = sum(surf.cut_rows[r] for r in rows)
            assert crossings % 2 == 1


def test_surface_contains_no_removed_face():
    g = build_lattice(3)
    for seed in range(6):
        n = NoiseParams(p_bond=0.1, p_comp=0.0, seed=seed)
        report = sample_damage(g, Scheme.NON_ADAPTIVE, n)
        for part, removed in (
            (report.partition_primal, report.removed_primal),
            (report.partition_dual, report.removed_dual),
        ):
            if part.percolates:
                continue
            surf = build_correlation_surface(g, part)
            assert surf.faces.isdisjoint(removed)


def test_removed_sets_never_touch_protected_faces():
    g = build_lattice(3)
    for seed in range(5):
        n = NoiseParams(p_bond=0.3, p_comp=0.0, seed=seed)
        report = sample_damage(g, Scheme.NON_ADAPTIVE, n)
        for s in report.removed_primal:
            assert g.primal.face_flippable[g.primal.face_row[s]]
        for s in report.removed_dual:
            assert g.dual.face_flippable[g.dual.face_row[s]]


def test_percolation_frequency_monotone_in_p_bond():
    g = build_lattice(3)
    freqs = []
    for pb in (0.03, 0.06, 0.09, 0.12):
        hits = 0
        trials = 500
        for t in range(trials):
            n = NoiseParams(p_bond=pb, p_comp=0.0, seed=13, trial_index=t)
            report = sample_damage(g, Scheme.NON_ADAPTIVE, n)
            hits += report.percolation_primal or report.percolation_dual
        freqs.append(hits / trials)
    # Non-decreasing up to binomial noise (3 sigma slack at 500 trials).
    for a, b in zip(freqs, freqs[1:]):
        slack = 3 * np.sqrt(max(a * (1 - a), 0.01) / 500)
        assert b >= a - slack
    assert freqs[-1] > freqs[0]


def test_sample_damage_matches_object_pipeline(g2):
    n = NoiseParams(p_bond=0.2, p_comp=0.0, seed=42, trial_index=3)
    report = sample_damage(g2, Scheme.ADAPTIVE, n)
    failed = sample_bond_failures(g2, n)
    assert report.failed_bonds == frozenset(failed)
    rp, rd = map_failures(g2, failed, Scheme.ADAPTIVE, n)
    assert report.removed_primal == frozenset(rp)
    assert report.removed_dual == frozenset(rd)
