"""Geometry of the cubic topological cluster state on a finite slab.

Qubits sit on the faces and edges of a cubic lattice. In the integer
coordinate convention used throughout, a point is a qubit site iff it has
exactly one or exactly two odd coordinates: two odd coordinates make a
primal face qubit, one odd coordinate a dual face qubit (equivalently a
primal edge qubit). Primal parity-check cubes have all-odd centers and
all-even corners; dual cubes have all-even centers.

The slab extents are fixed so that both lattices realise code distance d:
x in [1, 2d-1] (dual terminals on the x faces), y in [0, 2d-2] (primal
terminals on the y faces), z in [0, 4d-2] (4d-1 measurement layers, the
first and last acting as input/output surface code layers).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

PRIMAL = "primal"
DUAL = "dual"

# Sentinel cube ids for the two virtual boundary terminals of a lattice.
TERMINAL_A = -1
TERMINAL_B = -2


class Site(NamedTuple):
    """Integer lattice coordinates of one qubit."""

    x: int
    y: int
    z: int


class Bond(NamedTuple):
    """Entangling link between two adjacent qubits (a < b lexicographically)."""

    a: Site
    b: Site


def _odd_count(x: int, y: int, z: int) -> int:
    return (x & 1) + (y & 1) + (z & 1)


def is_qubit_site(x: int, y: int, z: int) -> bool:
    """A point hosts a qubit iff it has exactly one or two odd coordinates."""
    return _odd_count(x, y, z) in (1, 2)


def site_lattice(s: Site) -> str:
    """Which lattice a face qubit belongs to (primal: two odd coords)."""
    n = _odd_count(*s)
    if n == 2:
        return PRIMAL
    if n == 1:
        return DUAL
    raise ValueError(f"{s} is not a qubit site")


@dataclass(frozen=True)
class Cube:
    """One parity-check cell: a cube with up to six face qubits."""

    center: tuple[int, int, int]
    lattice: str
    faces: tuple[Site, ...]


@dataclass(frozen=True, eq=False)
class _LatticeHalf:
    """Check structure of one of the two interleaved lattices.

    The face arrays describe the error-correction universe: every face that
    can carry syndrome information, as an edge of the cube graph. Faces
    whose second cube falls outside the slab attach to a virtual terminal
    on the rough boundary axis; dangling faces on other axes (the perfect
    input/output data qubits of the primal lattice) are excluded.
    """

    name: str
    rough_axis: int                      # 0 = x, 1 = y
    cube_centers: np.ndarray             # (nc, 3) int
    cube_index: dict[tuple[int, int, int], int]
    cubes: tuple[Cube, ...]              # physical cubes, truncated at boundaries
    face_sites: tuple[Site, ...]         # universe faces, sorted
    face_row: dict[Site, int]
    face_cube_a: np.ndarray              # (nf,) cube id, or TERMINAL_A / TERMINAL_B
    face_cube_b: np.ndarray
    face_flippable: np.ndarray           # (nf,) bool; False on perfect-measurement faces
    cube_face_rows: tuple[tuple[int, ...], ...]  # universe faces per cube

    @property
    def n_cubes(self) -> int:
        return len(self.cube_centers)

    @property
    def n_faces(self) -> int:
        return len(self.face_sites)


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    """Immutable description of the full cluster: sites, bonds, both check lattices."""

    d: int
    x_range: tuple[int, int]
    y_range: tuple[int, int]
    z_range: tuple[int, int]
    sites: tuple[Site, ...]
    site_index: dict[Site, int]
    bonds: tuple[Bond, ...]
    adjacency: dict[Site, frozenset[Site]]
    bond_protected: np.ndarray           # (nb,) bool; first/last two layers
    bond_face_rows: np.ndarray           # (nb, 2) universe rows of (primal, dual) endpoint, -1 if none
    primal: _LatticeHalf = field(repr=False)
    dual: _LatticeHalf = field(repr=False)

    def half(self, which: str) -> _LatticeHalf:
        if which == PRIMAL:
            return self.primal
        if which == DUAL:
            return self.dual
        raise ValueError(f"unknown lattice {which!r}")

    @property
    def n_layers(self) -> int:
        return self.z_range[1] - self.z_range[0] + 1

    def is_bulk(self, s: Site) -> bool:
        """True when s lies strictly inside the slab on every axis."""
        return (
            self.x_range[0] < s.x < self.x_range[1]
            and self.y_range[0] < s.y < self.y_range[1]
            and self.z_range[0] < s.z < self.z_range[1]
        )


def _site_in_range(s, xr, yr, zr) -> bool:
    return xr[0] <= s[0] <= xr[1] and yr[0] <= s[1] <= yr[1] and zr[0] <= s[2] <= zr[1]


def _perfect_site(s: Site, which: str, zr: tuple[int, int]) -> bool:
    # Measurements that are ideal by construction: primal faces in the first
    # and final layers, dual faces in the second and penultimate layers.
    if which == PRIMAL:
        return s.z in (zr[0], zr[1])
    return s.z in (zr[0] + 1, zr[1] - 1)


def _build_half(name, rough_axis, parity, xr, yr, zr, site_set) -> _LatticeHalf:
    """Assemble cubes and the face universe for one lattice.

    parity: remainder mod 2 of cube-center coordinates (1 primal, 0 dual).
    """
    ranges = (xr, yr, zr)
    centers = []
    for cx in range(xr[0], xr[1] + 1):
        if cx & 1 != parity:
            continue
        for cy in range(yr[0], yr[1] + 1):
            if cy & 1 != parity:
                continue
            for cz in range(zr[0], zr[1] + 1):
                if cz & 1 != parity:
                    continue
                centers.append((cx, cy, cz))
    centers.sort()
    cube_index = {c: i for i, c in enumerate(centers)}

    cubes = []
    for c in centers:
        faces = []
        for axis in range(3):
            for delta in (-1, 1):
                f = list(c)
                f[axis] += delta
                f = Site(*f)
                if f in site_set:
                    faces.append(f)
        cubes.append(Cube(center=c, lattice=name, faces=tuple(faces)))

    # Face universe: sites of this lattice that act as edges of the cube graph.
    face_sites = []
    sides = []
    for s in sorted(site_set):
        if site_lattice(s) != name:
            continue
        # Normal axis: the unique even axis for primal faces, odd for dual.
        want = 0 if name == PRIMAL else 1
        axis = next(i for i in range(3) if s[i] & 1 == want)
        pair = []
        for delta in (-1, 1):
            c = list(s)
            c[axis] += delta
            c = tuple(c)
            if c in cube_index:
                pair.append(cube_index[c])
            elif axis == rough_axis:
                pair.append(TERMINAL_A if delta == -1 else TERMINAL_B)
            else:
                pair.append(None)
        if None in pair:
            # Dangling face on a smooth or input/output boundary: not part of
            # the error-correction universe.
            if pair[0] is None and pair[1] is None:
                raise ValueError(f"face {s} touches no cube; extents too small")
            continue
        face_sites.append(s)
        sides.append(pair)

    face_row = {s: i for i, s in enumerate(face_sites)}
    face_cube_a = np.array([p[0] for p in sides], dtype=np.int32)
    face_cube_b = np.array([p[1] for p in sides], dtype=np.int32)
    face_flippable = np.array(
        [not _perfect_site(s, name, zr) for s in face_sites], dtype=bool
    )

    cube_face_rows = [[] for _ in centers]
    for row, pair in enumerate(sides):
        for c in pair:
            if c >= 0:
                cube_face_rows[c].append(row)

    for arr in (face_cube_a, face_cube_b, face_flippable):
        arr.setflags(write=False)

    return _LatticeHalf(
        name=name,
        rough_axis=rough_axis,
        cube_centers=np.array(centers, dtype=np.int32),
        cube_index=cube_index,
        cubes=tuple(cubes),
        face_sites=tuple(face_sites),
        face_row=face_row,
        face_cube_a=face_cube_a,
        face_cube_b=face_cube_b,
        face_flippable=face_flippable,
        cube_face_rows=tuple(tuple(r) for r in cube_face_rows),
    )


def _build(xr, yr, zr, d) -> LatticeGeometry:
    site_list = []
    for x in range(xr[0], xr[1] + 1):
        for y in range(yr[0], yr[1] + 1):
            for z in range(zr[0], zr[1] + 1):
                if is_qubit_site(x, y, z):
                    site_list.append(Site(x, y, z))
    site_list.sort()
    site_set = set(site_list)
    site_index = {s: i for i, s in enumerate(site_list)}

    bonds = []
    adjacency: dict[Site, set[Site]] = {s: set() for s in site_list}
    for s in site_list:
        for axis in range(3):
            t = list(s)
            t[axis] += 1
            t = Site(*t)
            if t in site_set:
                bonds.append(Bond(s, t))
                adjacency[s].add(t)
                adjacency[t].add(s)
    bonds.sort()

    z0, z1 = zr
    prot = np.array(
        [
            (b.a.z in (z0, z0 + 1) and b.b.z in (z0, z0 + 1))
            or (b.a.z in (z1 - 1, z1) and b.b.z in (z1 - 1, z1))
            for b in bonds
        ],
        dtype=bool,
    )

    primal = _build_half(PRIMAL, 1, 1, xr, yr, zr, site_set)
    dual = _build_half(DUAL, 0, 0, xr, yr, zr, site_set)

    bond_face_rows = np.full((len(bonds), 2), -1, dtype=np.int32)
    for i, b in enumerate(bonds):
        p, q = (b.a, b.b) if site_lattice(b.a) == PRIMAL else (b.b, b.a)
        bond_face_rows[i, 0] = primal.face_row.get(p, -1)
        bond_face_rows[i, 1] = dual.face_row.get(q, -1)

    prot.setflags(write=False)
    bond_face_rows.setflags(write=False)

    return LatticeGeometry(
        d=d,
        x_range=xr,
        y_range=yr,
        z_range=zr,
        sites=tuple(site_list),
        site_index=site_index,
        bonds=tuple(bonds),
        adjacency={s: frozenset(a) for s, a in adjacency.items()},
        bond_protected=prot,
        bond_face_rows=bond_face_rows,
        primal=primal,
        dual=dual,
    )


def build_lattice(d: int) -> LatticeGeometry:
    """Build the distance-d slab: 4d-1 layers, code distance d on both lattices."""
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise ValueError(f"code distance must be an integer >= 2, got {d!r}")
    d = int(d)
    return _build((1, 2 * d - 1), (0, 2 * d - 2), (0, 4 * d - 2), d)


def neighbors(g: LatticeGeometry, s: Site) -> frozenset[Site]:
    """Bond-adjacent qubits of s; size 4 for bulk sites."""
    s = Site(*s)
    try:
        return g.adjacency[s]
    except KeyError:
        raise ValueError(f"{s} is not a qubit site of this geometry") from None


def code_distance(g: LatticeGeometry, which: str) -> int:
    """Fewest faces on an undetectable error string spanning terminal to terminal.

    Breadth-first search over the cube graph of the chosen lattice, where
    each face is one step.
    """
    half = g.half(which)
    nc = half.n_cubes
    # Nodes: cubes, plus both terminals mapped to nc (A) and nc + 1 (B).
    adj: list[list[int]] = [[] for _ in range(nc + 2)]

    def node(c: int) -> int:
        if c == TERMINAL_A:
            return nc
        if c == TERMINAL_B:
            return nc + 1
        return c

    for a, b in zip(half.face_cube_a, half.face_cube_b):
        u, v = node(int(a)), node(int(b))
        adj[u].append(v)
        adj[v].append(u)

    dist = [-1] * (nc + 2)
    dist[nc] = 0
    q = deque([nc])
    while q:
        u = q.popleft()
        if u == nc + 1:
            return dist[u]
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    raise ValueError(f"no spanning path on the {which} lattice")
