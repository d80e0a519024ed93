import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcsim.damage import (
    NoiseParams,
    Scheme,
    build_correlation_surface,
    form_superchecks,
    sample_damage,
    sample_bond_failures,
    surface_cut_rows,
)
from tcsim.decoder import (
    FastDecoder,
    Matching,
    build_matching_graph,
    correction_rows,
    decode_lattice,
    edge_flip_probability,
    edge_weight,
    extract_syndrome,
    mwpm,
    sample_measurement_errors,
    sample_measurement_mask,
)
from tcsim.lattice import DUAL, PRIMAL, Site, build_lattice


@pytest.fixture(scope="module")
def g2():
    return build_lattice(2)


@pytest.fixture(scope="module")
def g3():
    return build_lattice(3)


def undamaged(g, lattice):
    part = form_superchecks(g, set(), lattice)
    surf = build_correlation_surface(g, part)
    return part, surf


# --- measurement sampling ---------------------------------------------------


def test_no_flips_at_zero_rate(g2):
    err = sample_measurement_errors(g2, set(), PRIMAL, NoiseParams(0, 0.0, seed=1))
    assert err.flipped == frozenset()


def test_all_eligible_flip_at_unit_rate(g2):
    err = sample_measurement_errors(g2, set(), DUAL, NoiseParams(0, 1.0, seed=1))
    half = g2.dual
    eligible = {
        half.face_sites[i] for i in range(half.n_faces) if half.face_flippable[i]
    }
    assert err.flipped == eligible
    protected = set(half.face_sites) - eligible
    assert protected and err.flipped.isdisjoint(protected)


def test_flip_fraction_binomial():
    g = build_lattice(5)
    p = 0.03
    draws = hits = 0
    t = 0
    while draws < 100_000:
        mask = sample_measurement_mask(
            g, PRIMAL, None, NoiseParams(0, p, seed=2, trial_index=t)
        )
        draws += int(g.primal.face_flippable.sum())
        hits += int(mask.sum())
        t += 1
    sigma = np.sqrt(draws * p * (1 - p))
    assert abs(hits - draws * p) < 5 * sigma


def test_flips_avoid_removed(g3):
    removed = {next(iter(g3.primal.face_sites))}
    err = sample_measurement_errors(
        g3, removed, PRIMAL, NoiseParams(0, 1.0, seed=0)
    )
    assert err.flipped.isdisjoint(removed)


def test_flips_on_survivors_independent_of_removal(g3):
    # Fixed stream: removing qubits must not change which surviving faces flip.
    n = NoiseParams(0, 0.25, seed=9)
    a = sample_measurement_mask(g3, PRIMAL, None, n)
    removed = np.zeros(g3.primal.n_faces, dtype=bool)
    removed[:40] = True
    b = sample_measurement_mask(g3, PRIMAL, removed, n)
    np.testing.assert_array_equal(a & ~removed, b)


# --- syndrome extraction ----------------------------------------------------


def test_no_flips_no_flags(g3):
    part, _ = undamaged(g3, PRIMAL)
    assert extract_syndrome(g3, part, frozenset()) == frozenset()


def test_single_bulk_flip_flags_both_cubes(g3):
    part, _ = undamaged(g3, PRIMAL)
    f = Site(3, 2, 5)  # shared by cubes (3,1,5) and (3,3,5)
    flagged = extract_syndrome(g3, part, {f})
    expect = {g3.primal.cube_index[(3, 1, 5)], g3.primal.cube_index[(3, 3, 5)]}
    assert flagged == expect


def test_two_flips_on_one_cube_flag_only_outer_neighbors(g3):
    part, _ = undamaged(g3, PRIMAL)
    # Two z-faces of cube (3,1,5): the cube's own parity is untouched.
    flips = {Site(3, 1, 4), Site(3, 1, 6)}
    flagged = extract_syndrome(g3, part, flips)
    expect = {g3.primal.cube_index[(3, 1, 3)], g3.primal.cube_index[(3, 1, 7)]}
    assert flagged == expect
    assert g3.primal.cube_index[(3, 1, 5)] not in flagged


def test_flag_parity_matches_terminal_flip_parity(g3):
    part, _ = undamaged(g3, PRIMAL)
    half = g3.primal
    rng = np.random.default_rng(5)
    terminal_rows = (half.face_cube_a < 0) | (half.face_cube_b < 0)
    for _ in range(20):
        rows = rng.random(half.n_faces) < 0.1
        rows &= half.face_flippable
        flips = {half.face_sites[i] for i in np.nonzero(rows)[0]}
        flagged = extract_syndrome(g3, part, flips)
        assert len(flagged) % 2 == int((rows & terminal_rows).sum()) % 2


def test_supercheck_flag_is_xor_of_member_flags(g3):
    rng = np.random.default_rng(11)
    half = g3.primal
    for seed in range(8):
        n = NoiseParams(p_bond=0.12, p_comp=0.0, seed=seed)
        report = sample_damage(g3, Scheme.NON_ADAPTIVE, n)
        part = report.partition_primal
        rows = rng.random(half.n_faces) < 0.08
        rows &= half.face_flippable & ~part.removed_rows
        flips = {half.face_sites[i] for i in np.nonzero(rows)[0]}
        flagged = extract_syndrome(g3, part, flips)
        a_label = part.labels[part.a_node]
        b_label = part.labels[part.b_node]
        for rep, members in part.groups().items():
            if rep in (a_label, b_label):
                continue
            xor = 0
            for node in members:
                if node >= part.n_cubes:
                    continue
                cnt = sum(
                    1
                    for r in half.cube_face_rows[node]
                    if rows[r] and not part.removed_rows[r]
                )
                xor ^= cnt & 1
            assert (rep in flagged) == bool(xor)


# --- matching graph ---------------------------------------------------------


def test_undamaged_graph_uniform_unit_superedges(g3):
    part, _ = undamaged(g3, PRIMAL)
    p = 0.05
    graph = build_matching_graph(g3, part, None, p)
    w1 = edge_weight(edge_flip_probability(p, 1))
    assert graph.edges
    for e in graph.edges.values():
        assert e.k == 1
        assert e.w == pytest.approx(w1)


def test_merged_pair_gives_k2_superedge_to_terminal(g3):
    # Cubes (3,1,3) and (3,1,5) merged: two parallel faces reach terminal A.
    part = form_superchecks(g3, {Site(3, 1, 4)}, PRIMAL)
    p = 0.07
    graph = build_matching_graph(g3, part, None, p)
    rep = int(part.labels[g3.primal.cube_index[(3, 1, 3)]])
    key = tuple(sorted((rep, graph.a_rep)))
    e = graph.edges[key]
    assert e.k == 2
    assert e.q == pytest.approx(2 * p * (1 - p))


def test_weight_decreases_with_k():
    p = 0.04
    ws = [edge_weight(edge_flip_probability(p, k)) for k in (1, 2, 3, 5)]
    assert all(a > b > 0 for a, b in zip(ws, ws[1:]))


def test_flag_count_parity_matches_boundary_usage(g3):
    part, surf = undamaged(g3, PRIMAL)
    half = g3.primal
    rng = np.random.default_rng(3)
    for _ in range(10):
        rows = (rng.random(half.n_faces) < 0.05) & half.face_flippable
        flips = frozenset(half.face_sites[i] for i in np.nonzero(rows)[0])
        flagged = extract_syndrome(g3, part, flips)
        if not flagged:
            continue
        graph = build_matching_graph(g3, part, None, 0.05, flagged)
        flags = list(graph.flagged)
        pair = np.full((len(flags), len(flags)), np.inf)
        bd = np.empty(len(flags))
        for i, fu in enumerate(flags):
            bd[i] = graph.boundary_distance(fu)
            for j, fv in enumerate(flags):
                if i != j:
                    pair[i, j] = graph.dist[fu].get(fv, np.inf)
        m = mwpm(flags, pair, bd)
        assert len(m.to_boundary) % 2 == len(flagged) % 2


# --- mwpm contract ----------------------------------------------------------


def test_mwpm_empty():
    m = mwpm([], np.zeros((0, 0)), np.zeros(0))
    assert m == Matching(pairs=(), to_boundary=(), total_weight=0.0)


def test_mwpm_two_flags_pair_or_boundary():
    pair = np.array([[np.inf, 3.0], [3.0, np.inf]])
    m = mwpm([10, 20], pair, np.array([5.0, 5.0]))
    assert m.pairs == ((10, 20),) and m.total_weight == 3.0
    m = mwpm([10, 20], pair, np.array([1.0, 1.0]))
    assert m.pairs == () and sorted(m.to_boundary) == [10, 20]
    assert m.total_weight == 2.0


def test_mwpm_odd_count_uses_boundary():
    pair = np.full((3, 3), 4.0)
    np.fill_diagonal(pair, np.inf)
    m = mwpm([1, 2, 3], pair, np.array([10.0, 1.0, 10.0]))
    assert len(m.pairs) == 1 and m.to_boundary == (2,)
    assert m.total_weight == 5.0


def test_mwpm_requires_finite_boundary():
    with pytest.raises(ValueError):
        mwpm([1], np.array([[np.inf]]), np.array([np.inf]))


# --- decoding ---------------------------------------------------------------


def test_decode_no_flips_success(g2):
    part, surf = undamaged(g2, PRIMAL)
    assert decode_lattice(g2, part, set(), frozenset(), surf, 0.01)


def test_decode_single_bulk_flip_success(g3):
    part, surf = undamaged(g3, PRIMAL)
    assert decode_lattice(g3, part, set(), {Site(3, 2, 5)}, surf, 0.01)
    assert decode_lattice(
        g3, part, set(), {Site(3, 2, 5)}, surf, 0.01, realize=True
    )


def test_decode_spanning_chain_fails(g2):
    # Both terminal faces of the single y-column flipped: an undetectable
    # string spanning terminal to terminal. The decoder must fail.
    part, surf = undamaged(g2, PRIMAL)
    flips = {Site(1, 0, 3), Site(1, 2, 3)}
    assert extract_syndrome(g2, part, flips) == frozenset()
    assert not decode_lattice(g2, part, set(), flips, surf, 0.01)


def test_decode_half_distance_error_mis_corrects(g2):
    # At d=2 a single error is half a logical string; the deterministic
    # tie-break sends the flag to terminal A, so an error on the B side is
    # mis-corrected while the A-side twin is healed.
    part, surf = undamaged(g2, PRIMAL)
    assert decode_lattice(g2, part, set(), {Site(1, 0, 3)}, surf, 0.01)
    assert not decode_lattice(g2, part, set(), {Site(1, 2, 3)}, surf, 0.01)


def test_realized_and_parity_verdicts_agree(g3):
    rng = np.random.default_rng(23)
    half = g3.primal
    part, surf = undamaged(g3, PRIMAL)
    for _ in range(25):
        rows = (rng.random(half.n_faces) < 0.04) & half.face_flippable
        flips = frozenset(half.face_sites[i] for i in np.nonzero(rows)[0])
        a = decode_lattice(g3, part, set(), flips, surf, 0.03)
        b = decode_lattice(g3, part, set(), flips, surf, 0.03, realize=True)
        assert a == b


def test_realized_correction_clears_syndrome(g3):
    rng = np.random.default_rng(29)
    half = g3.primal
    part, surf = undamaged(g3, PRIMAL)
    for _ in range(10):
        rows = (rng.random(half.n_faces) < 0.05) & half.face_flippable
        flips = frozenset(half.face_sites[i] for i in np.nonzero(rows)[0])
        flagged = extract_syndrome(g3, part, flips)
        if not flagged:
            continue
        graph = build_matching_graph(g3, part, None, 0.03, flagged)
        flags = list(graph.flagged)
        pair = np.full((len(flags), len(flags)), np.inf)
        bd = np.empty(len(flags))
        for i, fu in enumerate(flags):
            bd[i] = graph.boundary_distance(fu)
            for j, fv in enumerate(flags):
                if i != j:
                    pair[i, j] = graph.dist[fu].get(fv, np.inf)
        m = mwpm(flags, pair, bd)
        corr = correction_rows(g3, part, graph, m)
        residual_rows = np.zeros(half.n_faces, dtype=bool)
        for s in flips:
            residual_rows[half.face_row[s]] = True
        residual_rows ^= corr
        flips2 = frozenset(half.face_sites[i] for i in np.nonzero(residual_rows)[0])
        assert extract_syndrome(g3, part, flips2) == frozenset()


def test_verdict_invariant_under_surface_deformation(g3):
    # Multiplying the surface by any supercheck leaves every verdict alone.
    from tcsim.damage import CorrelationSurface

    rng = np.random.default_rng(31)
    half = g3.primal
    for seed in range(6):
        n = NoiseParams(p_bond=0.08, p_comp=0.0, seed=seed)
        report = sample_damage(g3, Scheme.NON_ADAPTIVE, n)
        part = report.partition_primal
        if part.percolates:
            continue
        surf = build_correlation_surface(g3, part)
        rows = (rng.random(half.n_faces) < 0.04)
        rows &= half.face_flippable & ~part.removed_rows
        flips = frozenset(half.face_sites[i] for i in np.nonzero(rows)[0])
        base = decode_lattice(g3, part, None, flips, surf, 0.03)
        a_label = part.labels[part.a_node]
        b_label = part.labels[part.b_node]
        reps = [
            r for r in part.groups() if r not in (a_label, b_label)
        ]
        for rep in rng.choice(reps, size=4, replace=False):
            cut2 = surf.cut_rows.copy()
            for s in part.group_faces(g3, int(rep)):
                cut2[half.face_row[s]] ^= True
            surf2 = CorrelationSurface(
                lattice=PRIMAL,
                faces=frozenset(
                    half.face_sites[i] for i in np.nonzero(cut2)[0]
                ),
                cut_rows=cut2,
            )
            assert decode_lattice(g3, part, None, flips, surf2, 0.03) == base


def test_fast_decoder_matches_slow_path_undamaged(g3):
    rng = np.random.default_rng(37)
    for lattice in (PRIMAL, DUAL):
        half = g3.half(lattice)
        part, surf = undamaged(g3, lattice)
        fast = FastDecoder(g3, lattice)
        for _ in range(40):
            rows = (rng.random(half.n_faces) < 0.05) & half.face_flippable
            flips = frozenset(half.face_sites[i] for i in np.nonzero(rows)[0])
            slow = decode_lattice(g3, part, set(), flips, surf, 0.03)
            assert fast.decode(rows, 0.03) == slow


def test_fast_decoder_matches_slow_path_damaged():
    g = build_lattice(3)
    rng = np.random.default_rng(41)
    fastp = FastDecoder(g, PRIMAL)
    fastd = FastDecoder(g, DUAL)
    checked = 0
    for seed in range(60):
        n = NoiseParams(p_bond=0.07, p_comp=0.0, seed=seed)
        report = sample_damage(g, Scheme.ADAPTIVE, n)
        for lattice, part, fast in (
            (PRIMAL, report.partition_primal, fastp),
            (DUAL, report.partition_dual, fastd),
        ):
            if part.percolates:
                continue
            half = g.half(lattice)
            surf = build_correlation_surface(g, part)
            rows = rng.random(half.n_faces) < 0.05
            rows &= half.face_flippable & ~part.removed_rows
            flips = frozenset(half.face_sites[i] for i in np.nonzero(rows)[0])
            slow = decode_lattice(g, part, None, flips, surf, 0.03)
            slow_r = decode_lattice(g, part, None, flips, surf, 0.03, realize=True)
            fastv = fast.decode(rows, 0.03, part)
            assert slow == slow_r == fastv
            checked += 1
    assert checked > 50


def test_decoder_success_floor_under_fixed_damage():
    g = build_lattice(3)
    n0 = NoiseParams(p_bond=0.05, p_comp=0.0, seed=123)
    report = sample_damage(g, Scheme.NON_ADAPTIVE, n0)
    part = report.partition_primal
    assert not part.percolates
    fast = FastDecoder(g, PRIMAL)
    ok = 0
    trials = 300
    for t in range(trials):
        n = NoiseParams(p_bond=0.0, p_comp=1e-3, seed=77, trial_index=t)
        rows = sample_measurement_mask(g, PRIMAL, part.removed_rows, n)
        ok += fast.decode(rows, 1e-3, part)
    assert ok / trials > 0.98
