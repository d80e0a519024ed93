"""Heralded bond failures and their effect on the check structure.

A failed entangling bond is mapped onto removed face qubits: both endpoints
under the non-adaptive scheme, a random single endpoint under the adaptive
scheme (a qubit measured in Z drops out of its lattice). Checks that share
a removed face merge into superchecks; the merged cluster attached to a
boundary terminal determines both percolation and the correlation surface,
which is constructed as the cut between that cluster and the rest of the
cube graph.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from tcsim._graphops import union_find_labels
from tcsim.lattice import (
    DUAL,
    PRIMAL,
    TERMINAL_A,
    TERMINAL_B,
    Bond,
    LatticeGeometry,
    Site,
    site_lattice,
)

# Substream ids; every random draw in a trial comes from a stream keyed by
# (seed, trial_index, purpose), so trials are reproducible under any
# scheduling and any subset of the pipeline may be skipped without
# perturbing the rest.
_PURPOSE_BONDS = 0
_PURPOSE_ADAPTIVE = 1
_PURPOSE_FLIPS_PRIMAL = 2
_PURPOSE_FLIPS_DUAL = 3


class Scheme(enum.Enum):
    """How failed bonds are mapped onto removed qubits."""

    NON_ADAPTIVE = "non-adaptive"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class NoiseParams:
    """Noise strengths plus the per-trial random-stream key."""

    p_bond: float
    p_comp: float
    seed: int
    trial_index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_bond <= 1.0:
            raise ValueError(f"p_bond out of range: {self.p_bond}")
        if not 0.0 <= self.p_comp <= 1.0:
            raise ValueError(f"p_comp out of range: {self.p_comp}")
        if self.seed < 0 or self.trial_index < 0:
            raise ValueError("seed and trial_index must be non-negative")

    def stream(self, purpose: int) -> np.random.Generator:
        """Counter-based generator for one purpose within this trial."""
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.trial_index, purpose)
        )
        return np.random.Generator(np.random.Philox(ss))


class PercolationError(Exception):
    """Removed qubits connect the two boundary terminals: no correlation
    surface exists and the trial is an unconditional logical failure."""

    def __init__(self, lattice: str):
        self.lattice = lattice
        super().__init__(f"damage percolates the {lattice} lattice")




@dataclass(frozen=True, eq=False)
class Partition:
    """Supercheck partition of one lattice's cubes, terminals included.

    Node ids: cube indices, then n_cubes for terminal A and n_cubes + 1 for
    terminal B. ``labels[i]`` is the group representative of node i.
    """

    lattice: str
    n_cubes: int
    labels: np.ndarray
    removed_rows: np.ndarray  # bool per face row of this lattice

    @property
    def a_node(self) -> int:
        return self.n_cubes

    @property
    def b_node(self) -> int:
        return self.n_cubes + 1

    @property
    def percolates(self) -> bool:
        return self.labels[self.a_node] == self.labels[self.b_node]

    def groups(self) -> dict[int, list[int]]:
        """Group representative -> member node ids (terminals included)."""
        out: dict[int, list[int]] = {}
        for i, lab in enumerate(self.labels):
            out.setdefault(int(lab), []).append(i)
        return out

    def group_faces(self, g: LatticeGeometry, rep: int) -> list[Site]:
        """Intact faces of one supercheck: member faces minus shared ones."""
        half = g.half(self.lattice)
        seen: dict[int, int] = {}
        for node in np.nonzero(self.labels[: self.n_cubes] == rep)[0]:
            for row in half.cube_face_rows[node]:
                seen[row] = seen.get(row, 0) + 1
        return [
            half.face_sites[row]
            for row, cnt in sorted(seen.items())
            if cnt == 1 and not self.removed_rows[row]
        ]


@dataclass(frozen=True)
class DamageReport:
    """Everything a trial needs to know about one bond-failure sample."""

    failed_bonds: frozenset[Bond]
    removed_primal: frozenset[Site]
    removed_dual: frozenset[Site]
    partition_primal: Partition
    partition_dual: Partition

    @property
    def percolation_primal(self) -> bool:
        return self.partition_primal.percolates

    @property
    def percolation_dual(self) -> bool:
        return self.partition_dual.percolates


@dataclass(frozen=True, eq=False)
class CorrelationSurface:
    """Sheet of intact faces separating the two boundary terminals."""

    lattice: str
    faces: frozenset[Site]
    cut_rows: np.ndarray = field(repr=False)  # bool per face row


def _node_of(c: int, n_cubes: int) -> int:
    if c == TERMINAL_A:
        return n_cubes
    if c == TERMINAL_B:
        return n_cubes + 1
    return c


def sample_bond_mask(g: LatticeGeometry, n: NoiseParams) -> np.ndarray:
    """Bool mask over g.bonds: which unprotected bonds failed this trial."""
    rng = n.stream(_PURPOSE_BONDS)
    u = rng.random(len(g.bonds))
    return (u < n.p_bond) & ~g.bond_protected


def sample_bond_failures(g: LatticeGeometry, n: NoiseParams) -> set[Bond]:
    """Independent heralded failures; bonds in the perfect end layers never fail."""
    mask = sample_bond_mask(g, n)
    return {g.bonds[i] for i in np.nonzero(mask)[0]}


def map_failures_masks(
    g: LatticeGeometry,
    failed_mask: np.ndarray,
    scheme: Scheme,
    n: NoiseParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Removed-face masks (per universe row) for the primal and dual lattices.

    Non-adaptive: both endpoints of every failed bond are removed. Adaptive:
    failed bonds are visited in canonical order; a bond whose endpoints are
    both still present loses one endpoint, chosen by a fair coin.
    """
    removed_p = np.zeros(g.primal.n_faces, dtype=bool)
    removed_d = np.zeros(g.dual.n_faces, dtype=bool)
    idx = np.nonzero(failed_mask)[0]
    if scheme is Scheme.NON_ADAPTIVE:
        rows = g.bond_face_rows[idx]
        removed_p[rows[:, 0]] = True
        removed_d[rows[:, 1]] = True
    elif scheme is Scheme.ADAPTIVE:
        coins = n.stream(_PURPOSE_ADAPTIVE).random(len(idx)) < 0.5
        for k, i in enumerate(idx):
            rp, rd = g.bond_face_rows[i]
            if removed_p[rp] or removed_d[rd]:
                continue
            if coins[k]:
                removed_p[rp] = True
            else:
                removed_d[rd] = True
    else:  # pragma: no cover
        raise ValueError(f"unknown scheme {scheme!r}")
    return removed_p, removed_d


def map_failures(
    g: LatticeGeometry,
    failed: set[Bond],
    scheme: Scheme,
    n: NoiseParams,
) -> tuple[set[Site], set[Site]]:
    """Removed qubits per lattice for a set of failed bonds."""
    bond_index = {b: i for i, b in enumerate(g.bonds)}
    mask = np.zeros(len(g.bonds), dtype=bool)
    for b in failed:
        b = Bond(Site(*b.a), Site(*b.b))
        if b not in bond_index:
            b = Bond(b.b, b.a)
        mask[bond_index[b]] = True
    removed_p, removed_d = map_failures_masks(g, mask, scheme, n)
    prim = {g.primal.face_sites[i] for i in np.nonzero(removed_p)[0]}
    dual = {g.dual.face_sites[i] for i in np.nonzero(removed_d)[0]}
    return prim, dual


def form_superchecks_mask(
    g: LatticeGeometry, removed_rows: np.ndarray, lattice: str
) -> Partition:
    """Merge cubes that share a removed face, terminals included.

    Union-find over cube ids plus the two terminal pseudo-nodes; each
    node's label is its set's root.
    """
    half = g.half(lattice)
    nc = half.n_cubes
    idx = np.nonzero(removed_rows)[0]
    ua = half.face_cube_a[idx].astype(np.int64)
    ub = half.face_cube_b[idx].astype(np.int64)
    ua = np.where(ua == TERMINAL_A, nc, np.where(ua == TERMINAL_B, nc + 1, ua))
    ub = np.where(ub == TERMINAL_A, nc, np.where(ub == TERMINAL_B, nc + 1, ub))
    labels = union_find_labels(nc + 2, ua.astype(np.int32), ub.astype(np.int32))
    removed = removed_rows.copy()
    removed.setflags(write=False)
    labels.setflags(write=False)
    return Partition(lattice=lattice, n_cubes=nc, labels=labels, removed_rows=removed)


def form_superchecks(
    g: LatticeGeometry, removed: set[Site], lattice: str
) -> Partition:
    """Partition of the lattice's cubes for a removed-qubit set."""
    half = g.half(lattice)
    rows = np.zeros(half.n_faces, dtype=bool)
    for s in removed:
        s = Site(*s)
        if site_lattice(s) != lattice:
            raise ValueError(f"{s} is not a {lattice} face qubit")
        rows[half.face_row[s]] = True
    return form_superchecks_mask(g, rows, lattice)


def surface_cut_rows(g: LatticeGeometry, partition: Partition) -> np.ndarray:
    """Bool mask of faces with exactly one side in terminal A's cluster."""
    half = g.half(partition.lattice)
    nc = half.n_cubes
    labels = partition.labels
    a_label = labels[partition.a_node]
    ga = labels[np.where(half.face_cube_a >= 0, half.face_cube_a, nc)]
    ga = np.where(half.face_cube_a == TERMINAL_B, labels[nc + 1], ga)
    gb = labels[np.where(half.face_cube_b >= 0, half.face_cube_b, nc)]
    gb = np.where(half.face_cube_b == TERMINAL_B, labels[nc + 1], gb)
    return (ga == a_label) != (gb == a_label)


def build_correlation_surface(
    g: LatticeGeometry,
    partition: Partition,
    removed: set[Site] | np.ndarray | None = None,
    lattice: str | None = None,
) -> CorrelationSurface:
    """Cut between terminal A's damage cluster and the rest of the lattice.

    Raises PercolationError when the cluster reaches terminal B. The removed
    and lattice arguments are accepted for call-shape symmetry with the rest
    of the pipeline; the partition already carries both.
    """
    if lattice is not None and lattice != partition.lattice:
        raise ValueError("partition belongs to a different lattice")
    if partition.percolates:
        raise PercolationError(partition.lattice)
    cut = surface_cut_rows(g, partition)
    half = g.half(partition.lattice)
    faces = frozenset(half.face_sites[i] for i in np.nonzero(cut)[0])
    cut.setflags(write=False)
    return CorrelationSurface(lattice=partition.lattice, faces=faces, cut_rows=cut)


def sample_damage_partitions(
    g: LatticeGeometry, scheme: Scheme, n: NoiseParams
) -> tuple[Partition, Partition]:
    """Damage stage without the site-level report (per-trial hot path)."""
    mask = sample_bond_mask(g, n)
    removed_p, removed_d = map_failures_masks(g, mask, scheme, n)
    return (
        form_superchecks_mask(g, removed_p, PRIMAL),
        form_superchecks_mask(g, removed_d, DUAL),
    )


def sample_damage(
    g: LatticeGeometry, scheme: Scheme, n: NoiseParams
) -> DamageReport:
    """Full damage stage: sample failures, map them, form superchecks."""
    mask = sample_bond_mask(g, n)
    removed_p, removed_d = map_failures_masks(g, mask, scheme, n)
    part_p = form_superchecks_mask(g, removed_p, PRIMAL)
    part_d = form_superchecks_mask(g, removed_d, DUAL)
    return DamageReport(
        failed_bonds=frozenset(g.bonds[i] for i in np.nonzero(mask)[0]),
        removed_primal=frozenset(
            g.primal.face_sites[i] for i in np.nonzero(removed_p)[0]
        ),
        removed_dual=frozenset(
            g.dual.face_sites[i] for i in np.nonzero(removed_d)[0]
        ),
        partition_primal=part_p,
        partition_dual=part_d,
    )
