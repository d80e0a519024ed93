"""JIT graph kernels for the per-trial decode path.

A trial needs: supercheck labels from a union-find over removed faces,
shortest paths from every flagged node (to the other flags and the two
terminals), and the boundary-transformed integer matching edges. All three
are tight loops over small arrays, so they live here as numba kernels with
plain-python fallbacks (selected via TCSIM_DISABLE_NUMBA) that keep the
exact same semantics.
"""

from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("TCSIM_DISABLE_NUMBA"):
        raise ImportError
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via TCSIM_DISABLE_NUMBA
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def union_find_labels(n_nodes, ua, ub):
    """Labels after merging node pairs (ua[i], ub[i]); roots as labels."""
    parent = np.arange(n_nodes, dtype=np.int32)
    size = np.ones(n_nodes, dtype=np.int32)
    for i in range(ua.shape[0]):
        a = ua[i]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ub[i]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    labels = np.empty(n_nodes, dtype=np.int32)
    for v in range(n_nodes):
        r = v
        while parent[r] != r:
            r = parent[r]
        x = v
        while parent[x] != r:
            parent[x], x = r, parent[x]
        labels[v] = r
    return labels


@njit(cache=True)
def dijkstra_multisource(indptr, nbr, wts, sources, limits):
    """Shortest paths from each source; entries beyond its limit stay inf.

    CSR graph over n nodes (symmetric arcs expected). Returns a dense
    (len(sources), n) float64 matrix. Uses a version-stamped distance
    array so per-source reset cost is O(touched), not O(n).
    """
    n = indptr.shape[0] - 1
    S = sources.shape[0]
    out = np.full((S, n), np.inf)
    dist = np.empty(n, np.float64)
    stamp = np.full(n, -1, np.int32)
    done = np.full(n, -1, np.int32)
    cap = 4 * wts.shape[0] + 2 * n + 16
    heap_d = np.empty(cap, np.float64)
    heap_v = np.empty(cap, np.int32)

    for si in range(S):
        src = sources[si]
        limit = limits[si]
        hn = 0
        # push (0, src)
        heap_d[0] = 0.0
        heap_v[0] = src
        hn = 1
        dist[src] = 0.0
        stamp[src] = si
        while hn > 0:
            # pop-min
            d0 = heap_d[0]
            v0 = heap_v[0]
            hn -= 1
            heap_d[0] = heap_d[hn]
            heap_v[0] = heap_v[hn]
            i = 0
            while True:
                l = 2 * i + 1
                r = l + 1
                m = i
                if l < hn and heap_d[l] < heap_d[m]:
                    m = l
                if r < hn and heap_d[r] < heap_d[m]:
                    m = r
                if m == i:
                    break
                heap_d[i], heap_d[m] = heap_d[m], heap_d[i]
                heap_v[i], heap_v[m] = heap_v[m], heap_v[i]
                i = m
            if done[v0] == si:
                continue
            if stamp[v0] != si or d0 > dist[v0]:
                continue
            done[v0] = si
            out[si, v0] = d0
            for e in range(indptr[v0], indptr[v0 + 1]):
                w = nbr[e]
                nd = d0 + wts[e]
                if nd > limit:
                    continue
                if stamp[w] != si or nd < dist[w]:
                    dist[w] = nd
                    stamp[w] = si
                    # push
                    j = hn
                    heap_d[j] = nd
                    heap_v[j] = w
                    hn += 1
                    while j > 0:
                        p = (j - 1) // 2
                        if heap_d[p] <= heap_d[j]:
                            break
                        heap_d[p], heap_d[j] = heap_d[j], heap_d[p]
                        heap_v[p], heap_v[j] = heap_v[j], heap_v[p]
                        j = p
    return out


@njit(cache=True)
def transform_edges(flag_ids, pair, bdist, wscale, jitter_span):
    """Integer matching edges: max(0, b_i + b_j - d_ij), quantised + jitter."""
    F = bdist.shape[0]
    cap = F * (F - 1) // 2
    eu = np.empty(cap, np.int64)
    ev = np.empty(cap, np.int64)
    ew = np.empty(cap, np.int64)
    m = 0
    for i in range(F):
        bi = bdist[i]
        for j in range(i + 1, F):
            t = bi + bdist[j] - pair[i, j]
            if t > 0.0 and np.isfinite(t):
                ti = np.int64(round(t * wscale))
                if ti <= 0:
                    continue
                a = flag_ids[i]
                b = flag_ids[j]
                if a > b:
                    a, b = b, a
                h = (a * 2654435761 + b * 40503) & 0xFFFFFFFF
                eu[m] = i
                ev[m] = j
                ew[m] = ti * jitter_span + ((h >> 13) & 0xFF)
                m += 1
    out = np.empty((m, 3), np.int64)
    for e in range(m):
        out[e, 0] = eu[e]
        out[e, 1] = ev[e]
        out[e, 2] = ew[e]
    return out
