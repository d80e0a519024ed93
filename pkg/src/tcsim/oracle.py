"""Brute-force references validating the production decoder on small instances.

Two oracles: an exhaustive perfect-matching enumerator (checks the blossom
matcher), and an exact logical failure probability for small lattices
obtained by enumerating every measurement-error pattern. Both are shipped,
not test-only, so the CLI verify subcommand can run them anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tcsim.damage import (
    DamageReport,
    NoiseParams,
    Partition,
    Scheme,
    form_superchecks_mask,
    sample_damage,
    surface_cut_rows,
)
from tcsim.decoder import FastDecoder, _face_nodes, mwpm
from tcsim.lattice import DUAL, PRIMAL, LatticeGeometry, build_lattice


@dataclass(frozen=True)
class OracleConfig:
    """Hard caps keeping the enumerations tractable."""

    max_nodes: int = 12
    max_flips: int = 24


def exhaustive_mwpm(
    weights: np.ndarray, config: OracleConfig = OracleConfig()
) -> tuple[tuple[tuple[int, int], ...], float]:
    """Minimum-weight perfect matching by enumerating all matchings.

    weights: symmetric (n, n) matrix, np.inf where no edge, n even
    (boundary twins, if any, already expanded into the table).
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n):
        raise ValueError("weights must be square")
    if n % 2:
        raise ValueError("perfect matching needs an even node count")
    if n > config.max_nodes:
        raise ValueError(f"{n} nodes exceeds the oracle cap {config.max_nodes}")
    if n == 0:
        return (), 0.0

    best_weight = np.inf
    best: list[tuple[int, int]] | None = None
    pairs: list[tuple[int, int]] = []

    nodes = list(range(n))

    def recurse(remaining: list[int], acc: float):
        nonlocal best_weight, best
        if not remaining:
            if acc < best_weight:
                best_weight = acc
                best = list(pairs)
            return
        if acc >= best_weight:
            return
        u = remaining[0]
        for idx in range(1, len(remaining)):
            v = remaining[idx]
            if not np.isfinite(w[u, v]):
                continue
            pairs.append((u, v))
            rest = remaining[1:idx] + remaining[idx + 1 :]
            recurse(rest, acc + w[u, v])
            pairs.pop()

    recurse(nodes, 0.0)
    if best is None:
        raise ValueError("no perfect matching exists")
    return tuple(best), float(best_weight)


def twin_expand(pair_dist: np.ndarray, boundary_dist: np.ndarray) -> np.ndarray:
    """Boundary-twin table: flags 0..F-1, twin of i at F+i.

    Twin edges cost the flag's boundary distance; twins interconnect freely
    at zero cost so any number of flags may terminate on the boundary.
    """
    F = len(boundary_dist)
    n = 2 * F
    w = np.full((n, n), np.inf)
    w[:F, :F] = pair_dist
    for i in range(F):
        w[i, F + i] = w[F + i, i] = boundary_dist[i]
    w[F:, F:] = 0.0
    np.fill_diagonal(w, np.inf)
    return w


def _subset_tables(face_masks, face_cut, face_fail_extra=None):
    """Syndrome, cut parity and weight for every subset, by doubling."""
    synd = np.zeros(1, dtype=np.uint64)
    cut = np.zeros(1, dtype=np.uint8)
    weight = np.zeros(1, dtype=np.uint8)
    for mask, bit in zip(face_masks, face_cut):
        synd = np.concatenate([synd, synd ^ np.uint64(mask)])
        cut = np.concatenate([cut, cut ^ np.uint8(bit)])
        weight = np.concatenate([weight, weight + np.uint8(1)])
    return synd, cut, weight


def exact_lattice_failure_weights(
    g: LatticeGeometry,
    lattice: str,
    partition: Partition | None = None,
    p_weight_ref: float = 0.05,
    config: OracleConfig = OracleConfig(),
) -> tuple[int, np.ndarray]:
    """Failure count per error weight, over all flip patterns of one lattice.

    Returns (m, fails) where m is the number of flippable faces and
    fails[w] counts weight-w flip sets the decoder turns into a logical
    error. Exact: the verdict of a flip set depends only on its syndrome
    and its surface-crossing parity, so all 2^m sets are classified after
    decoding each distinct syndrome once. Matching weights are evaluated at
    p_weight_ref; for an undamaged lattice every superedge has the same
    weight, so the verdict table is independent of that choice.
    """
    half = g.half(lattice)
    if partition is None:
        removed = np.zeros(half.n_faces, dtype=bool)
        partition = form_superchecks_mask(g, removed, lattice)
    if partition.percolates:
        raise ValueError("lattice percolates; failure probability is 1")
    labels = partition.labels
    a_label = labels[partition.a_node]
    b_label = labels[partition.b_node]

    rows = np.nonzero(half.face_flippable & ~partition.removed_rows)[0]
    m = len(rows)
    if m > config.max_flips:
        raise ValueError(f"{m} flippable faces exceeds the oracle cap "
                         f"{config.max_flips}")

    # Bit index per flaggable supercheck representative.
    reps = [
        int(r)
        for r in np.unique(labels)
        if r != a_label and r != b_label
    ]
    if len(reps) > 63:
        raise ValueError("too many superchecks for the bitmask enumeration")
    bit_of = {rep: i for i, rep in enumerate(reps)}

    fa, fb = _face_nodes(half)
    cut_rows = surface_cut_rows(g, partition)
    face_masks = []
    face_cut = []
    for r in rows:
        mask = 0
        for node in (int(labels[fa[r]]), int(labels[fb[r]])):
            if node in bit_of:
                mask ^= 1 << bit_of[node]
        face_masks.append(mask)
        face_cut.append(bool(cut_rows[r]))

    synd, cutpar, weight = _subset_tables(face_masks, face_cut)

    decoder = FastDecoder(g, lattice)
    part_arg = None if partition.removed_rows.sum() == 0 else partition
    uniq = np.unique(synd)
    corr = np.empty(len(uniq), dtype=np.uint8)
    for i, sv in enumerate(uniq):
        sv = int(sv)
        flags = np.array(
            [reps[b] for b in range(len(reps)) if sv >> b & 1], dtype=np.int64
        )
        corr[i] = decoder.correction_parity(flags, p_weight_ref, part_arg)
    fail = (cutpar ^ corr[np.searchsorted(uniq, synd)]).astype(bool)
    fails = np.bincount(weight[fail], minlength=m + 1).astype(np.int64)
    return m, fails


def failure_probability_from_weights(m: int, fails: np.ndarray, p: float) -> float:
    """Sum of p^w (1-p)^(m-w) over the failing flip sets."""
    w = np.arange(m + 1)
    with np.errstate(divide="ignore"):
        terms = fails * np.exp(
            w * np.log(max(p, 1e-300)) + (m - w) * np.log(max(1 - p, 1e-300))
        )
    return float(terms.sum())


def exact_small_logical_rate(
    g: LatticeGeometry,
    damage: DamageReport | None,
    p_comp: float,
    config: OracleConfig = OracleConfig(),
) -> float:
    """Exact probability that a trial with this damage decodes wrongly.

    Measurement errors on the two lattices are independent, so the trial
    failure probability combines the per-lattice exact rates. Percolation
    on either lattice makes the trial fail outright.
    """
    parts = {
        PRIMAL: None if damage is None else damage.partition_primal,
        DUAL: None if damage is None else damage.partition_dual,
    }
    if any(p is not None and p.percolates for p in parts.values()):
        return 1.0
    rate = 1.0
    for lattice, part in parts.items():
        m, fails = exact_lattice_failure_weights(g, lattice, part, config=config)
        rate *= 1.0 - failure_probability_from_weights(m, fails, p_comp)
    return 1.0 - rate


# --- verification suites (CLI `verify`) -------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_matching_instance(rng):
    F = int(rng.integers(2, 5))
    pair = rng.integers(1, 101, size=(F, F)).astype(float)
    pair = np.triu(pair, 1)
    pair = pair + pair.T
    np.fill_diagonal(pair, np.inf)
    if rng.random() < 0.5:
        boundary = rng.integers(1, 101, size=F).astype(float)
    else:
        # Boundary effectively unused: forces pure pairwise matching.
        boundary = np.full(F, 1000.0)
        if F % 2:
            boundary[int(rng.integers(F))] = float(rng.integers(1, 101))
    return pair, boundary


def verify_matching(
    n_instances: int = 500,
    seed: int = 2024,
    fault_injection: float = 0.0,
) -> list[CheckResult]:
    """Blossom matcher vs exhaustive enumeration on random small instances.

    fault_injection scales one pairwise distance seen by the matcher only;
    any nonzero value must make the suite fail (self-test hook).
    """
    rng = np.random.default_rng(seed)
    results = []
    for i in range(n_instances):
        pair, boundary = _random_matching_instance(rng)
        pair_for_mwpm = pair.copy()
        if fault_injection:
            off = ~np.isinf(pair_for_mwpm)
            pair_for_mwpm[off] = pair_for_mwpm[off] * fault_injection + 1.0
        m = mwpm(list(range(len(boundary))), pair_for_mwpm, boundary)
        _, ref_weight = exhaustive_mwpm(twin_expand(pair, boundary))
        ok = abs(m.total_weight - ref_weight) < 1e-6
        if not ok:
            results.append(
                CheckResult(
                    name=f"matching[{i}]",
                    passed=False,
                    detail=(
                        f"seed={seed} instance={i}: mwpm weight "
                        f"{m.total_weight:.6f} != exhaustive {ref_weight:.6f}"
                    ),
                )
            )
    results.append(
        CheckResult(
            name="matching-suite",
            passed=not any(not r.passed for r in results),
            detail=f"{n_instances} random instances vs exhaustive enumeration",
        )
    )
    return results


def verify_small_lattice(
    trials: int = 200_000,
    seed: int = 99,
    p_comps: tuple[float, ...] = (0.02, 0.05, 0.10),
) -> list[CheckResult]:
    """Monte Carlo at d=2 vs the exact enumeration, 4 sigma tolerance."""
    from tcsim.experiment import run_trial  # local import; no module cycle

    g = build_lattice(2)
    results = []
    for p in p_comps:
        exact = exact_small_logical_rate(g, None, p)
        fails = 0
        for t in range(trials):
            n = NoiseParams(p_bond=0.0, p_comp=p, seed=seed, trial_index=t)
            out = run_trial(g, Scheme.NON_ADAPTIVE, n)
            fails += not out.success
        mc = fails / trials
        sigma = np.sqrt(exact * (1 - exact) / trials)
        ok = abs(mc - exact) < 4 * sigma
        results.append(
            CheckResult(
                name=f"small-lattice[p_comp={p}]",
                passed=bool(ok),
                detail=f"exact={exact:.6f} mc={mc:.6f} sigma={sigma:.2e}",
            )
        )
    return results
