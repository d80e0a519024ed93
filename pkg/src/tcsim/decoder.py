"""Syndrome extraction and minimum-weight perfect matching decoding.

Flagged superchecks are paired up (or matched to a boundary terminal) at
minimum total weight, where a superedge aggregating k intact faces between
two superchecks flips with probability q = (1 - (1 - 2 p)^k) / 2 and
carries weight ln((1 - q) / q). The correction succeeds when the residual
error (actual flips xor correction chain) crosses the correlation surface
an even number of times.

The boundary is handled without explicit twin nodes: matching flags i, j
costs d_ij while leaving a flag unmatched costs its boundary distance b_i,
so maximising sum of max(0, b_i + b_j - d_ij) over a plain matching is
exactly the twin construction's optimum. Edge weights are quantised to
integers (the blossom core is exact integer arithmetic) with a tiny
deterministic per-edge jitter so that degenerate optima resolve the same
way on every code path.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from tcsim._blossom import max_weight_matching
from tcsim._graphops import dijkstra_multisource, transform_edges
from tcsim.damage import (
    CorrelationSurface,
    NoiseParams,
    Partition,
    _PURPOSE_FLIPS_DUAL,
    _PURPOSE_FLIPS_PRIMAL,
    surface_cut_rows,
)
from tcsim.lattice import (
    DUAL,
    PRIMAL,
    TERMINAL_A,
    TERMINAL_B,
    LatticeGeometry,
    Site,
)

# Floor keeping weights finite when p_comp is 0 or 1 exactly.
WEIGHT_EPS = 1e-9

# Weight quantisation: value scale, then room for the tie-break jitter.
_WSCALE = float(1 << 16)
_JITTER_SPAN = 1 << 17


def _clamp_p(p: float) -> float:
    return min(max(p, WEIGHT_EPS), 0.5 - WEIGHT_EPS)


def edge_flip_probability(p_comp: float, k: int | np.ndarray):
    """Net flip probability of a parity check edge carrying k faces."""
    p = _clamp_p(p_comp)
    return (1.0 - (1.0 - 2.0 * p) ** k) / 2.0


def edge_weight(q: float | np.ndarray):
    return np.log((1.0 - q) / q)


@dataclass(frozen=True)
class MeasurementErrors:
    """Face qubits whose X-measurement outcome came out wrong."""

    lattice: str
    flipped: frozenset[Site]


@dataclass(frozen=True)
class SuperEdge:
    k: int
    q: float
    w: float


@dataclass(frozen=True, eq=False)
class SyndromeGraph:
    """Weighted graph of superchecks for one lattice instance.

    Nodes are supercheck representatives (partition labels); the two
    terminal clusters appear as the virtual boundary nodes a_rep / b_rep.
    dist[f] maps every reachable node to its Dijkstra distance from flag f.
    """

    lattice: str
    nodes: tuple[int, ...]
    a_rep: int
    b_rep: int
    edges: dict[tuple[int, int], SuperEdge]
    flagged: tuple[int, ...]
    dist: dict[int, dict[int, float]] = field(repr=False)
    paths: dict[int, dict[int, int]] = field(repr=False)  # predecessor maps

    def boundary_distance(self, f: int) -> float:
        d = self.dist[f]
        return min(d.get(self.a_rep, np.inf), d.get(self.b_rep, np.inf))

    def nearer_terminal_is_a(self, f: int) -> bool:
        d = self.dist[f]
        return d.get(self.a_rep, np.inf) <= d.get(self.b_rep, np.inf)


@dataclass(frozen=True)
class Matching:
    """MWPM result: flag pairs, flags routed to the boundary, total weight."""

    pairs: tuple[tuple[int, int], ...]
    to_boundary: tuple[int, ...]
    total_weight: float


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    failure_class: str  # "none" | "logical_primal" | "logical_dual" | "percolation"

    def __post_init__(self):
        assert self.success == (self.failure_class == "none")


def sample_measurement_mask(
    g: LatticeGeometry,
    lattice: str,
    removed_rows: np.ndarray | None,
    n: NoiseParams,
) -> np.ndarray:
    """Flip mask over the lattice's face rows.

    One uniform draw per face row regardless of damage, so the flip pattern
    on surviving qubits does not depend on which qubits were removed.
    """
    half = g.half(lattice)
    purpose = _PURPOSE_FLIPS_PRIMAL if lattice == PRIMAL else _PURPOSE_FLIPS_DUAL
    u = n.stream(purpose).random(half.n_faces)
    mask = (u < n.p_comp) & half.face_flippable
    if removed_rows is not None:
        mask &= ~removed_rows
    return mask


def sample_measurement_errors(
    g: LatticeGeometry,
    removed: set[Site] | frozenset[Site],
    lattice: str,
    n: NoiseParams,
) -> MeasurementErrors:
    half = g.half(lattice)
    removed_rows = np.zeros(half.n_faces, dtype=bool)
    for s in removed:
        removed_rows[half.face_row[Site(*s)]] = True
    mask = sample_measurement_mask(g, lattice, removed_rows, n)
    return MeasurementErrors(
        lattice=lattice,
        flipped=frozenset(half.face_sites[i] for i in np.nonzero(mask)[0]),
    )


def _face_nodes(half) -> tuple[np.ndarray, np.ndarray]:
    nc = half.n_cubes
    fa = np.where(
        half.face_cube_a == TERMINAL_A,
        nc,
        np.where(half.face_cube_a == TERMINAL_B, nc + 1, half.face_cube_a),
    )
    fb = np.where(
        half.face_cube_b == TERMINAL_A,
        nc,
        np.where(half.face_cube_b == TERMINAL_B, nc + 1, half.face_cube_b),
    )
    return fa.astype(np.int64), fb.astype(np.int64)


def extract_syndrome_reps(
    g: LatticeGeometry, partition: Partition, flip_rows: np.ndarray
) -> np.ndarray:
    """Representatives of superchecks with odd flipped-face parity.

    Faces internal to one group toggle it twice and cancel; terminal
    clusters carry no check and are never flagged.
    """
    half = g.half(partition.lattice)
    labels = partition.labels
    fa, fb = _face_nodes(half)
    counts = np.zeros(half.n_cubes + 2, dtype=np.int64)
    idx = np.nonzero(flip_rows)[0]
    np.add.at(counts, labels[fa[idx]], 1)
    np.add.at(counts, labels[fb[idx]], 1)
    odd = np.nonzero(counts & 1)[0]
    a_label = labels[partition.a_node]
    b_label = labels[partition.b_node]
    return odd[(odd != a_label) & (odd != b_label)]


def extract_syndrome(
    g: LatticeGeometry, partition: Partition, flipped: frozenset[Site] | set[Site]
) -> frozenset[int]:
    half = g.half(partition.lattice)
    rows = np.zeros(half.n_faces, dtype=bool)
    for s in flipped:
        rows[half.face_row[Site(*s)]] = True
    return frozenset(int(r) for r in extract_syndrome_reps(g, partition, rows))


def _superedge_arrays(g, partition, p_comp):
    """Canonical (u, v, k, q, w) arrays over supercheck pairs.

    u, v are partition labels; faces inside one group and faces joining the
    two terminal clusters carry no matching edge. Only flippable intact
    faces contribute to k.
    """
    half = g.half(partition.lattice)
    labels = partition.labels
    fa, fb = _face_nodes(half)
    ga = labels[fa]
    gb = labels[fb]
    a_label = labels[partition.a_node]
    b_label = labels[partition.b_node]
    valid = half.face_flippable & ~partition.removed_rows & (ga != gb)
    both_terminal = np.isin(ga, (a_label, b_label)) & np.isin(
        gb, (a_label, b_label)
    )
    valid &= ~both_terminal
    lo = np.minimum(ga, gb)[valid]
    hi = np.maximum(ga, gb)[valid]
    base = half.n_cubes + 2
    keys, k = np.unique(lo * base + hi, return_counts=True)
    u = (keys // base).astype(np.int64)
    v = (keys % base).astype(np.int64)
    q = edge_flip_probability(p_comp, k)
    w = edge_weight(q)
    return u, v, k, q, w


def build_matching_graph(
    g: LatticeGeometry,
    partition: Partition,
    removed=None,
    p_comp: float = 0.01,
    flagged: frozenset[int] | None = None,
) -> SyndromeGraph:
    """Supercheck graph with Barrett-Stace style superedge weights.

    Pairwise distances from every flagged node (to the other flags and to
    both terminals) are computed by Dijkstra with deterministic tie-breaking
    by node id. ``removed`` is accepted for pipeline symmetry; the partition
    already records it.
    """
    u, v, k, q, w = _superedge_arrays(g, partition, p_comp)
    labels = partition.labels
    a_rep = int(labels[partition.a_node])
    b_rep = int(labels[partition.b_node])
    node_set = set(int(x) for x in np.unique(labels))
    edges = {
        (int(uu), int(vv)): SuperEdge(int(kk), float(qq), float(ww))
        for uu, vv, kk, qq, ww in zip(u, v, k, q, w)
    }

    adj: dict[int, list[tuple[int, float]]] = {n_: [] for n_ in node_set}
    for (uu, vv), e in edges.items():
        adj[uu].append((vv, e.w))
        adj[vv].append((uu, e.w))
    for lst in adj.values():
        lst.sort()

    if flagged is None:
        flagged = frozenset()
    dist: dict[int, dict[int, float]] = {}
    paths: dict[int, dict[int, int]] = {}
    for f in sorted(flagged):
        d, pred = _dijkstra(adj, f)
        dist[f] = d
        paths[f] = pred

    return SyndromeGraph(
        lattice=partition.lattice,
        nodes=tuple(sorted(node_set)),
        a_rep=a_rep,
        b_rep=b_rep,
        edges=edges,
        flagged=tuple(sorted(int(x) for x in flagged)),
        dist=dist,
        paths=paths,
    )


def _dijkstra(adj, source):
    """Shortest paths with ties broken toward smaller node ids."""
    dist = {source: 0.0}
    pred = {source: -1}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj[u]:
            nd = d + w
            if v not in dist or nd < dist[v] - 1e-15:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _transformed_edges(flag_ids, pair_dist, boundary_dist):
    """Integer max-weight edges encoding the boundary-twin construction.

    flag_ids: stable ids used only for the tie-break jitter; pair_dist:
    (F, F) float matrix; boundary_dist: (F,) float. Edge weight is
    max(0, b_i + b_j - d_ij) quantised; pairs that do not beat two boundary
    matches are dropped.
    """
    return transform_edges(
        np.asarray(flag_ids, dtype=np.int64),
        np.ascontiguousarray(pair_dist, dtype=np.float64),
        np.ascontiguousarray(boundary_dist, dtype=np.float64),
        _WSCALE,
        _JITTER_SPAN,
    )


def mwpm(
    flagged: list[int] | tuple[int, ...],
    pair_dist: np.ndarray,
    boundary_dist: np.ndarray,
) -> Matching:
    """Minimum-weight perfect matching of flags, boundary allowed.

    Equivalent to matching on flags plus one zero-interconnected boundary
    twin per flag: flags pair up at their table distance or terminate on
    the boundary at their boundary distance. Exact, not greedy.
    """
    flagged = [int(f) for f in flagged]
    F = len(flagged)
    pair_dist = np.asarray(pair_dist, dtype=float)
    boundary_dist = np.asarray(boundary_dist, dtype=float)
    if pair_dist.shape != (F, F) or boundary_dist.shape != (F,):
        raise ValueError("distance table shapes do not match flag count")
    if F == 0:
        return Matching(pairs=(), to_boundary=(), total_weight=0.0)
    if not np.all(np.isfinite(boundary_dist)):
        raise ValueError("every flag needs a finite boundary distance")
    edges = _transformed_edges(flagged, pair_dist, boundary_dist)
    mate = max_weight_matching(F, edges, maxcardinality=False)
    pairs = []
    to_boundary = []
    total = 0.0
    for i in range(F):
        if mate[i] < 0:
            to_boundary.append(flagged[i])
            total += float(boundary_dist[i])
        elif i < mate[i]:
            pairs.append((flagged[i], flagged[int(mate[i])]))
            total += float(pair_dist[i, mate[i]])
    return Matching(
        pairs=tuple(pairs), to_boundary=tuple(to_boundary), total_weight=total
    )


def _walk(pred: dict[int, int], target: int) -> list[int]:
    """Node sequence source..target from a predecessor map."""
    seq = [target]
    while pred[seq[-1]] != -1:
        seq.append(pred[seq[-1]])
    seq.reverse()
    return seq


def _canonical_face(g, partition, u, v):
    """Smallest intact flippable face row joining supercheck u and v."""
    half = g.half(partition.lattice)
    labels = partition.labels
    fa, fb = _face_nodes(half)
    ga, gb = labels[fa], labels[fb]
    rows = np.nonzero(
        half.face_flippable
        & ~partition.removed_rows
        & (((ga == u) & (gb == v)) | ((ga == v) & (gb == u)))
    )[0]
    return int(rows[0])


def correction_rows(
    g: LatticeGeometry, partition: Partition, graph: SyndromeGraph, m: Matching
) -> np.ndarray:
    """Realise a matching as a face set: xor of the matched shortest paths."""
    half = g.half(partition.lattice)
    corr = np.zeros(half.n_faces, dtype=bool)

    def apply_path(f, target):
        seq = _walk(graph.paths[f], target)
        for a, b in zip(seq, seq[1:]):
            corr[_canonical_face(g, partition, a, b)] ^= True

    for fu, fv in m.pairs:
        apply_path(fu, fv)
    for f in m.to_boundary:
        target = graph.a_rep if graph.nearer_terminal_is_a(f) else graph.b_rep
        apply_path(f, target)
    return corr


def _side_parities(
    g: LatticeGeometry, partition: Partition, graph: SyndromeGraph, cut_rows
) -> dict[int, int]:
    """Cut-crossing parity from terminal A to every supercheck node.

    Valid for any surface that is a cut of the cube graph (the canonical
    surface or any stabilizer deformation of it): every cycle then crosses
    the surface evenly, so the parity is path-independent.
    """
    adj: dict[int, list[tuple[int, int]]] = {n_: [] for n_ in graph.nodes}
    for (u, v) in graph.edges:
        bit = int(cut_rows[_canonical_face(g, partition, u, v)])
        adj[u].append((v, bit))
        adj[v].append((u, bit))
    side = {graph.a_rep: 0}
    stack = [graph.a_rep]
    while stack:
        u = stack.pop()
        for v, bit in adj[u]:
            if v not in side:
                side[v] = side[u] ^ bit
                stack.append(v)
    return side


def decode_lattice(
    g: LatticeGeometry,
    partition: Partition,
    removed,
    flipped: frozenset[Site] | set[Site],
    surface: CorrelationSurface,
    p_comp: float,
    realize: bool = False,
) -> bool:
    """Full decode of one lattice: syndrome, matching, homology verdict.

    Success iff the residual (flips xor correction) crosses the correlation
    surface evenly. With realize=True the correction chain is materialised
    face by face; otherwise each matched path contributes the crossing
    parity of its endpoints' sides of the cut. Both routes give identical
    verdicts for a given matching.
    """
    if partition.percolates:
        raise ValueError("cannot decode a percolated lattice")
    half = g.half(partition.lattice)
    flip_rows = np.zeros(half.n_faces, dtype=bool)
    for s in flipped:
        flip_rows[half.face_row[Site(*s)]] = True

    flagged = frozenset(int(x) for x in extract_syndrome_reps(g, partition, flip_rows))
    flips_parity = int(np.count_nonzero(flip_rows & surface.cut_rows)) & 1
    if not flagged:
        return flips_parity == 0

    graph = build_matching_graph(g, partition, removed, p_comp, flagged)
    flags = list(graph.flagged)
    F = len(flags)
    pair = np.full((F, F), np.inf)
    bdist = np.empty(F)
    for i, fu in enumerate(flags):
        bdist[i] = graph.boundary_distance(fu)
        for j, fv in enumerate(flags):
            if i != j:
                pair[i, j] = graph.dist[fu].get(fv, np.inf)
    m = mwpm(flags, pair, bdist)

    if realize:
        corr = correction_rows(g, partition, graph, m)
        residual = flip_rows ^ corr
        return int(np.count_nonzero(residual & surface.cut_rows)) % 2 == 0

    side = _side_parities(g, partition, graph, surface.cut_rows)
    corr_parity = 0
    for fu, fv in m.pairs:
        corr_parity ^= side[fu] ^ side[fv]
    for f in m.to_boundary:
        t = graph.a_rep if graph.nearer_terminal_is_a(f) else graph.b_rep
        corr_parity ^= side[f] ^ side[t]
    return (flips_parity ^ corr_parity) == 0


class FastDecoder:
    """Array-path decoder for one lattice of one geometry, reused per trial.

    For undamaged lattices (no bond failures) the supercheck graph is the
    static cube graph, so hop-count distance tables are precomputed once.
    Damaged trials rebuild the superedge graph and run a multi-source
    sparse Dijkstra.
    """

    def __init__(self, g: LatticeGeometry, lattice: str):
        self.g = g
        self.lattice = lattice
        self.half = g.half(lattice)
        self.nc = self.half.n_cubes
        self.fa, self.fb = _face_nodes(self.half)
        self.flippable = self.half.face_flippable
        # Static cut (no damage): the sheet of terminal-A faces.
        self.static_cut = (self.fa == self.nc) | (self.fb == self.nc)
        self._hops = None  # lazy undamaged hop-count table

    def _undamaged_hops(self) -> np.ndarray:
        if self._hops is None:
            nn = self.nc + 2
            rows = np.nonzero(self.flippable)[0]
            u, v = self.fa[rows], self.fb[rows]
            data = np.ones(len(rows))
            m = csr_matrix(
                (np.concatenate([data, data]),
                 (np.concatenate([u, v]), np.concatenate([v, u]))),
                shape=(nn, nn),
            )
            h = _csgraph_dijkstra(m, directed=False, unweighted=True)
            self._hops = h.astype(np.int32)
        return self._hops

    def decode(
        self,
        flip_rows: np.ndarray,
        p_comp: float,
        partition: Partition | None = None,
    ) -> bool:
        """Verdict for one trial; partition=None means an undamaged lattice."""
        if partition is None:
            idx = np.nonzero(flip_rows)[0]
            counts = np.zeros(self.nc + 2, dtype=np.int64)
            np.add.at(counts, self.fa[idx], 1)
            np.add.at(counts, self.fb[idx], 1)
            odd = np.nonzero(counts & 1)[0]
            flags = odd[odd < self.nc]
            flips_parity = int(np.count_nonzero(flip_rows & self.static_cut)) & 1
        else:
            flip_rows = flip_rows & ~partition.removed_rows
            flags = extract_syndrome_reps(self.g, partition, flip_rows)
            cut = surface_cut_rows(self.g, partition)
            flips_parity = int(np.count_nonzero(flip_rows & cut)) & 1
        corr = self.correction_parity(flags, p_comp, partition)
        return (flips_parity ^ corr) == 0

    def _match_parity(self, flag_ids, pair, bdist, side_a):
        edges = _transformed_edges(flag_ids, pair, bdist)
        mate = max_weight_matching(len(flag_ids), edges, maxcardinality=False)
        corr_parity = 0
        for i in range(len(flag_ids)):
            if mate[i] < 0 and side_a[i]:
                corr_parity ^= 1
        return corr_parity

    def correction_parity(
        self,
        flags: np.ndarray,
        p_comp: float,
        partition: Partition | None = None,
    ) -> int:
        """Crossing parity of the minimum-weight correction for a flag set.

        Depends only on the syndrome: 1 when the correction chains cross the
        canonical correlation surface an odd number of times.
        """
        flags = np.asarray(flags, dtype=np.int64)
        if len(flags) == 0:
            return 0
        if partition is None:
            hops = self._undamaged_hops()
            w1 = float(edge_weight(edge_flip_probability(p_comp, 1)))
            pair = hops[np.ix_(flags, flags)] * w1
            da = hops[flags, self.nc] * w1
            db = hops[flags, self.nc + 1] * w1
        else:
            labels = partition.labels
            u, v, k, q, w = _superedge_arrays(self.g, partition, p_comp)
            reps = np.unique(labels)
            nn = len(reps)
            ui = np.searchsorted(reps, u)
            vi = np.searchsorted(reps, v)
            src = np.concatenate([ui, vi]).astype(np.int32)
            dst = np.concatenate([vi, ui]).astype(np.int32)
            wdup = np.concatenate([w, w])
            order = np.argsort(src, kind="stable")
            nbr = dst[order]
            wts = wdup[order]
            indptr = np.zeros(nn + 1, dtype=np.int64)
            np.cumsum(np.bincount(src, minlength=nn), out=indptr[1:])
            flag_idx = np.searchsorted(reps, flags).astype(np.int32)
            a_idx = int(np.searchsorted(reps, labels[partition.a_node]))
            b_idx = int(np.searchsorted(reps, labels[partition.b_node]))
            # Boundary distances first (two unbounded searches), then
            # flag-to-flag distances pruned at b_i + max(b): farther pairs
            # can never beat two boundary matches.
            term = dijkstra_multisource(
                indptr,
                nbr,
                wts,
                np.array([a_idx, b_idx], dtype=np.int32),
                np.array([np.inf, np.inf]),
            )
            da = term[0, flag_idx]
            db = term[1, flag_idx]
            b = np.minimum(da, db)
            if not np.all(np.isfinite(b)):
                raise RuntimeError("flagged supercheck disconnected from boundary")
            limits = b + b.max() + 1e-9
            dmat = dijkstra_multisource(indptr, nbr, wts, flag_idx, limits)
            pair = dmat[:, flag_idx]
        bdist = np.minimum(da, db)
        side_a = da <= db
        pair = np.asarray(pair, dtype=float).copy()
        np.fill_diagonal(pair, np.inf)
        return self._match_parity([int(x) for x in flags], pair, bdist, side_a)
