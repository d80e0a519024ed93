"""Exact maximum-weight matching on general graphs, JIT-compiled.

Array port of the classic primal-dual blossom method (Edmonds; the
O(n^3) formulation described in Galil's 1986 survey, widely circulated
as van Rantwijk's mwmatching). Integer edge weights only, so all dual
arithmetic is exact. The port keeps the reference structure: stages of
alternating-tree growth with S/T labels, blossom shrinking/expansion,
and the four-way dual delta update.

Vertices are 0..n-1; non-trivial blossoms occupy ids n..2n-1. All state
lives in flat numpy arrays so the core compiles under numba; when numba
is unavailable the same core runs as plain Python (slow but correct).
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

_FREE, _S, _T = 0, 1, 2
_BREADCRUMB = 5  # S-label with the trace bit set; tested via label & 4


@njit(cache=True)
def _mwm_core(n, eu, ev, ew, adj_off, adj_arc, maxcardinality):  # noqa: C901
    m = eu.shape[0]
    nslot = 2 * n

    maxweight = np.int64(0)
    for e in range(m):
        if ew[e] > maxweight:
            maxweight = ew[e]

    mate = np.full(n, -1, np.int32)
    label = np.zeros(nslot, np.int8)
    labeledge_v = np.full(nslot, -1, np.int32)
    labeledge_w = np.full(nslot, -1, np.int32)
    labeledge_e = np.full(nslot, -1, np.int32)
    inblossom = np.arange(n).astype(np.int32)
    blossomparent = np.full(nslot, -1, np.int32)
    blossombase = np.full(nslot, -1, np.int32)
    for v in range(n):
        blossombase[v] = v
    bestedge_e = np.full(nslot, -1, np.int32)
    bestedge_sv = np.full(nslot, -1, np.int32)
    dualvar = np.full(n, maxweight, np.int64)
    blossomdual = np.zeros(n, np.int64)  # indexed by slot - n
    allowedge = np.zeros(m, np.uint8)

    cap = n + 2
    childs = np.full((n, cap), -1, np.int32)
    childs_len = np.zeros(n, np.int32)
    cedge_e = np.full((n, cap), -1, np.int32)
    cedge_v = np.full((n, cap), -1, np.int32)
    cedge_w = np.full((n, cap), -1, np.int32)
    mybest_e = np.full((n, n), -1, np.int32)
    mybest_sv = np.full((n, n), -1, np.int32)
    mybest_len = np.full(n, -1, np.int32)  # -1: not computed

    free_slots = np.empty(n, np.int32)
    for i in range(n):
        free_slots[i] = nslot - 1 - i  # allocate low slots first
    n_free = np.int64(n)

    qcap = 16 * n + 256
    queue = np.empty(qcap, np.int32)
    qn = np.int64(0)

    leafbuf = np.empty(n, np.int32)
    leafstack = np.empty(nslot, np.int32)
    path_buf = np.empty(nslot, np.int32)
    tmp_child = np.empty(cap, np.int32)
    tmp_ee = np.empty(cap, np.int32)
    tmp_ev = np.empty(cap, np.int32)
    tmp_ew_ = np.empty(cap, np.int32)
    besteto_e = np.full(nslot, -1, np.int32)
    besteto_sv = np.full(nslot, -1, np.int32)
    work_b = np.empty(2 * n, np.int32)
    work_v = np.empty(2 * n, np.int32)
    stack_buf = np.empty(nslot, np.int32)

    status = 0  # nonzero: internal capacity exceeded

    def slack(e):
        return dualvar[eu[e]] + dualvar[ev[e]] - 2 * ew[e]

    def slot(b):
        return b - n

    def collect_leaves(b):
        # Write the leaf vertices of (possibly trivial) blossom b into
        # leafbuf, returning the count.
        if b < n:
            leafbuf[0] = b
            return 1
        cnt = 0
        sp = 0
        leafstack[sp] = b
        sp += 1
        while sp > 0:
            sp -= 1
            t = leafstack[sp]
            if t < n:
                leafbuf[cnt] = t
                cnt += 1
            else:
                s = slot(t)
                for i in range(childs_len[s]):
                    leafstack[sp] = childs[s, i]
                    sp += 1
        return cnt

    # Assign label t to the top-level blossom containing vertex w, reached
    # through vertex v via edge e (v, e = -1 when w's base is single).
    # Labeling a T-blossom immediately S-labels its mate, hence the loop.
    # Returns the updated queue length.
    def assign_label(w0, t0, v0, e0, qn0):
        qn_l = qn0
        w, t, v, e = w0, t0, v0, e0
        while True:
            b = inblossom[w]
            label[w] = t
            label[b] = t
            labeledge_v[w] = v
            labeledge_w[w] = w
            labeledge_e[w] = e
            labeledge_v[b] = v
            labeledge_w[b] = w
            labeledge_e[b] = e
            if v < 0:
                labeledge_v[w] = -1
                labeledge_w[w] = -1
                labeledge_e[w] = -1
                labeledge_v[b] = -1
                labeledge_w[b] = -1
                labeledge_e[b] = -1
            bestedge_e[w] = -1
            bestedge_sv[w] = -1
            bestedge_e[b] = -1
            bestedge_sv[b] = -1
            if t == 1:
                cnt = collect_leaves(b)
                for i in range(cnt):
                    queue[qn_l] = leafbuf[i]
                    qn_l += 1
                return qn_l
            # t == 2: continue by S-labeling the mate of b's base through
            # their matched edge.
            base = blossombase[b]
            w, t, v, e = mate[base], 1, base, -1
            for ai in range(adj_off[w], adj_off[w + 1]):
                ee = adj_arc[ai]
                other = eu[ee] + ev[ee] - w
                if other == v:
                    e = ee
                    break

    # Trace back from v and w to find either a new blossom's base vertex
    # (returned) or an augmenting path (returns -1).
    def scan_blossom(v0, w0):
        v, w = v0, w0
        np_ = 0
        base = -1
        while v >= 0:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            path_buf[np_] = b
            np_ += 1
            label[b] = _BREADCRUMB
            if labeledge_v[b] < 0:
                v = -1  # base of b is single; stop this trail
            else:
                v = labeledge_v[b]
                b = inblossom[v]
                v = labeledge_v[b]
            if w >= 0:
                v, w = w, v
        for i in range(np_):
            label[path_buf[i]] = _S
        return base

    def expand_endstage(b0, nf0):
        # Dissolve b0 and, recursively, any zero-dual sub-blossoms.
        # Returns the number of slots freed; they are pushed at nf0.
        freed = 0
        sp = 0
        stack_buf[sp] = b0
        sp += 1
        while sp > 0:
            sp -= 1
            b = stack_buf[sp]
            s = slot(b)
            for i in range(childs_len[s]):
                c = childs[s, i]
                blossomparent[c] = -1
                if c < n:
                    inblossom[c] = c
                elif blossomdual[slot(c)] == 0:
                    stack_buf[sp] = c
                    sp += 1
                else:
                    cnt = collect_leaves(c)
                    for k in range(cnt):
                        inblossom[leafbuf[k]] = c
            label[b] = _FREE
            labeledge_v[b] = -1
            labeledge_w[b] = -1
            labeledge_e[b] = -1
            bestedge_e[b] = -1
            blossombase[b] = -1
            childs_len[s] = 0
            mybest_len[s] = -1
            free_slots[nf0 + freed] = b
            freed += 1
        return freed

    # --- main loop over stages -------------------------------------------
    while True:
        label[:] = _FREE
        labeledge_v[:] = -1
        labeledge_w[:] = -1
        labeledge_e[:] = -1
        bestedge_e[:] = -1
        bestedge_sv[:] = -1
        mybest_len[:] = -1
        allowedge[:] = 0
        qn = 0

        for v in range(n):
            if mate[v] < 0 and label[inblossom[v]] == _FREE:
                qn = assign_label(v, _S, -1, -1, qn)

        augmented = False
        while True:
            while qn > 0 and not augmented:
                qn -= 1
                v = queue[qn]
                for ai in range(adj_off[v], adj_off[v + 1]):
                    e = adj_arc[ai]
                    w = eu[e] + ev[e] - v
                    bv = inblossom[v]
                    bw = inblossom[w]
                    if bv == bw:
                        continue
                    kslack = np.int64(0)
                    if not allowedge[e]:
                        kslack = slack(e)
                        if kslack <= 0:
                            allowedge[e] = 1
                    if allowedge[e]:
                        if label[bw] == _FREE:
                            qn = assign_label(w, _T, v, e, qn)
                        elif label[bw] == _S:
                            base = scan_blossom(v, w)
                            if base >= 0:
                                # ---- addBlossom(base, v, w, e) ----
                                if n_free == 0:
                                    status = 1
                                    return mate, status
                                n_free -= 1
                                b = free_slots[n_free]
                                s = slot(b)
                                bb = inblossom[base]
                                blossombase[b] = base
                                blossomparent[b] = -1
                                blossomparent[bb] = b
                                # Collect the v-side path from v toward base.
                                bv2 = inblossom[v]
                                vv = v
                                n_v = 0
                                while bv2 != bb:
                                    blossomparent[bv2] = b
                                    tmp_child[n_v] = bv2
                                    tmp_ee[n_v] = labeledge_e[bv2]
                                    tmp_ev[n_v] = labeledge_v[bv2]
                                    tmp_ew_[n_v] = labeledge_w[bv2]
                                    n_v += 1
                                    vv = labeledge_v[bv2]
                                    bv2 = inblossom[vv]
                                # Cycle layout: childs = [bb, v-path reversed,
                                # w-path]; cedge[i] joins childs[i] to
                                # childs[i+1 mod len], oriented so its first
                                # vertex lies in childs[i].
                                childs[s, 0] = bb
                                idx = 1
                                for i in range(n_v - 1, -1, -1):
                                    childs[s, idx] = tmp_child[i]
                                    cedge_e[s, idx - 1] = tmp_ee[i]
                                    cedge_v[s, idx - 1] = tmp_ev[i]
                                    cedge_w[s, idx - 1] = tmp_ew_[i]
                                    idx += 1
                                cedge_e[s, idx - 1] = e
                                cedge_v[s, idx - 1] = v
                                cedge_w[s, idx - 1] = w
                                bw2 = inblossom[w]
                                ww = w
                                while bw2 != bb:
                                    blossomparent[bw2] = b
                                    childs[s, idx] = bw2
                                    cedge_e[s, idx] = labeledge_e[bw2]
                                    cedge_v[s, idx] = labeledge_w[bw2]
                                    cedge_w[s, idx] = labeledge_v[bw2]
                                    idx += 1
                                    ww = labeledge_v[bw2]
                                    bw2 = inblossom[ww]
                                childs_len[s] = idx
                                label[b] = _S
                                labeledge_v[b] = labeledge_v[bb]
                                labeledge_w[b] = labeledge_w[bb]
                                labeledge_e[b] = labeledge_e[bb]
                                blossomdual[s] = 0
                                cnt = collect_leaves(b)
                                for i in range(cnt):
                                    lv = leafbuf[i]
                                    if label[inblossom[lv]] == _T:
                                        queue[qn] = lv
                                        qn += 1
                                    inblossom[lv] = b
                                # Least-slack edges to other S-blossoms.
                                for i in range(childs_len[s]):
                                    cb = childs[s, i]
                                    if cb < n:
                                        lo, hi = cb, cb + 1
                                        use_mybest = False
                                    elif mybest_len[slot(cb)] >= 0:
                                        use_mybest = True
                                    else:
                                        use_mybest = False
                                        lo, hi = 0, 0
                                    if use_mybest:
                                        cs = slot(cb)
                                        for k in range(mybest_len[cs]):
                                            ee = mybest_e[cs, k]
                                            iv = mybest_sv[cs, k]
                                            jv = eu[ee] + ev[ee] - iv
                                            if inblossom[jv] == b:
                                                iv, jv = jv, iv
                                            bj = inblossom[jv]
                                            if (
                                                bj != b
                                                and label[bj] == _S
                                                and (
                                                    besteto_e[bj] < 0
                                                    or slack(ee)
                                                    < slack(besteto_e[bj])
                                                )
                                            ):
                                                besteto_e[bj] = ee
                                                besteto_sv[bj] = iv
                                        mybest_len[cs] = -1
                                    else:
                                        lcnt = collect_leaves(cb)
                                        for li in range(lcnt):
                                            lv = leafbuf[li]
                                            for aj in range(
                                                adj_off[lv], adj_off[lv + 1]
                                            ):
                                                ee = adj_arc[aj]
                                                jv = eu[ee] + ev[ee] - lv
                                                if jv == lv:
                                                    continue
                                                bj = inblossom[jv]
                                                if (
                                                    bj != b
                                                    and label[bj] == _S
                                                    and (
                                                        besteto_e[bj] < 0
                                                        or slack(ee)
                                                        < slack(besteto_e[bj])
                                                    )
                                                ):
                                                    besteto_e[bj] = ee
                                                    besteto_sv[bj] = lv
                                    bestedge_e[cb] = -1
                                    bestedge_sv[cb] = -1
                                nmb = 0
                                for bj in range(nslot):
                                    if besteto_e[bj] >= 0:
                                        mybest_e[s, nmb] = besteto_e[bj]
                                        mybest_sv[s, nmb] = besteto_sv[bj]
                                        nmb += 1
                                        besteto_e[bj] = -1
                                        besteto_sv[bj] = -1
                                mybest_len[s] = nmb
                                bestedge_e[b] = -1
                                bestedge_sv[b] = -1
                                for k in range(nmb):
                                    ee = mybest_e[s, k]
                                    if bestedge_e[b] < 0 or slack(ee) < slack(
                                        bestedge_e[b]
                                    ):
                                        bestedge_e[b] = ee
                                        bestedge_sv[b] = mybest_sv[s, k]
                                # ---- end addBlossom ----
                            else:
                                # ---- augmentMatching(v, w) ----
                                for side in range(2):
                                    if side == 0:
                                        ss, jj = v, w
                                    else:
                                        ss, jj = w, v
                                    while True:
                                        bs = inblossom[ss]
                                        if bs >= n:
                                            # augment through blossom bs to ss
                                            nwork = 1
                                            work_b[0] = bs
                                            work_v[0] = ss
                                            wi = 0
                                            while wi < nwork:
                                                wb = work_b[wi]
                                                wv = work_v[wi]
                                                wi += 1
                                                t = wv
                                                while blossomparent[t] != wb:
                                                    t = blossomparent[t]
                                                if t >= n:
                                                    work_b[nwork] = t
                                                    work_v[nwork] = wv
                                                    nwork += 1
                                                sB = slot(wb)
                                                clen = childs_len[sB]
                                                i0 = 0
                                                for ci in range(clen):
                                                    if childs[sB, ci] == t:
                                                        i0 = ci
                                                        break
                                                j = i0
                                                if i0 & 1:
                                                    j -= clen
                                                    jstep = 1
                                                else:
                                                    jstep = -1
                                                while j != 0:
                                                    j += jstep
                                                    tt = childs[sB, j % clen]
                                                    if jstep == 1:
                                                        pw = cedge_v[sB, j % clen]
                                                        px = cedge_w[sB, j % clen]
                                                    else:
                                                        px = cedge_v[
                                                            sB, (j - 1) % clen
                                                        ]
                                                        pw = cedge_w[
                                                            sB, (j - 1) % clen
                                                        ]
                                                    if tt >= n:
                                                        work_b[nwork] = tt
                                                        work_v[nwork] = pw
                                                        nwork += 1
                                                    j += jstep
                                                    tt = childs[sB, j % clen]
                                                    if tt >= n:
                                                        work_b[nwork] = tt
                                                        work_v[nwork] = px
                                                        nwork += 1
                                                    mate[pw] = px
                                                    mate[px] = pw
                                                # rotate childs so entry child
                                                # becomes the base
                                                if i0 > 0:
                                                    for ci in range(clen):
                                                        tmp_child[ci] = childs[
                                                            sB, (i0 + ci) % clen
                                                        ]
                                                        tmp_ee[ci] = cedge_e[
                                                            sB, (i0 + ci) % clen
                                                        ]
                                                        tmp_ev[ci] = cedge_v[
                                                            sB, (i0 + ci) % clen
                                                        ]
                                                        tmp_ew_[ci] = cedge_w[
                                                            sB, (i0 + ci) % clen
                                                        ]
                                                    for ci in range(clen):
                                                        childs[sB, ci] = tmp_child[
                                                            ci
                                                        ]
                                                        cedge_e[sB, ci] = tmp_ee[ci]
                                                        cedge_v[sB, ci] = tmp_ev[ci]
                                                        cedge_w[sB, ci] = tmp_ew_[
                                                            ci
                                                        ]
                                                blossombase[wb] = wv
                                        mate[ss] = jj
                                        if labeledge_v[bs] < 0:
                                            break
                                        tq = labeledge_v[bs]
                                        bt = inblossom[tq]
                                        ss2 = labeledge_v[bt]
                                        jj2 = labeledge_w[bt]
                                        if bt >= n:
                                            # augment through T-blossom to jj2
                                            nwork = 1
                                            work_b[0] = bt
                                            work_v[0] = jj2
                                            wi = 0
                                            while wi < nwork:
                                                wb = work_b[wi]
                                                wv = work_v[wi]
                                                wi += 1
                                                t = wv
                                                while blossomparent[t] != wb:
                                                    t = blossomparent[t]
                                                if t >= n:
                                                    work_b[nwork] = t
                                                    work_v[nwork] = wv
                                                    nwork += 1
                                                sB = slot(wb)
                                                clen = childs_len[sB]
                                                i0 = 0
                                                for ci in range(clen):
                                                    if childs[sB, ci] == t:
                                                        i0 = ci
                                                        break
                                                j = i0
                                                if i0 & 1:
                                                    j -= clen
                                                    jstep = 1
                                                else:
                                                    jstep = -1
                                                while j != 0:
                                                    j += jstep
                                                    tt = childs[sB, j % clen]
                                                    if jstep == 1:
                                                        pw = cedge_v[sB, j % clen]
                                                        px = cedge_w[sB, j % clen]
                                                    else:
                                                        px = cedge_v[
                                                            sB, (j - 1) % clen
                                                        ]
                                                        pw = cedge_w[
                                                            sB, (j - 1) % clen
                                                        ]
                                                    if tt >= n:
                                                        work_b[nwork] = tt
                                                        work_v[nwork] = pw
                                                        nwork += 1
                                                    j += jstep
                                                    tt = childs[sB, j % clen]
                                                    if tt >= n:
                                                        work_b[nwork] = tt
                                                        work_v[nwork] = px
                                                        nwork += 1
                                                    mate[pw] = px
                                                    mate[px] = pw
                                                if i0 > 0:
                                                    for ci in range(clen):
                                                        tmp_child[ci] = childs[
                                                            sB, (i0 + ci) % clen
                                                        ]
                                                        tmp_ee[ci] = cedge_e[
                                                            sB, (i0 + ci) % clen
                                                        ]
                                                        tmp_ev[ci] = cedge_v[
                                                            sB, (i0 + ci) % clen
                                                        ]
                                                        tmp_ew_[ci] = cedge_w[
                                                            sB, (i0 + ci) % clen
                                                        ]
                                                    for ci in range(clen):
                                                        childs[sB, ci] = tmp_child[
                                                            ci
                                                        ]
                                                        cedge_e[sB, ci] = tmp_ee[ci]
                                                        cedge_v[sB, ci] = tmp_ev[ci]
                                                        cedge_w[sB, ci] = tmp_ew_[
                                                            ci
                                                        ]
                                                blossombase[wb] = wv
                                        mate[jj2] = ss2
                                        ss, jj = ss2, jj2
                                # ---- end augmentMatching ----
                                augmented = True
                                break
                        elif label[w] == _FREE:
                            label[w] = _T
                            labeledge_v[w] = v
                            labeledge_w[w] = w
                            labeledge_e[w] = e
                    elif label[bw] == _S:
                        if bestedge_e[bv] < 0 or kslack < slack(bestedge_e[bv]):
                            bestedge_e[bv] = e
                            bestedge_sv[bv] = v
                    elif label[w] == _FREE:
                        if bestedge_e[w] < 0 or kslack < slack(bestedge_e[w]):
                            bestedge_e[w] = e
                            bestedge_sv[w] = v

            if augmented:
                break

            # Dual updates: pick the binding constraint among the four deltas.
            deltatype = -1
            delta = np.int64(0)
            deltaedge = -1
            deltaedge_sv = -1
            deltablossom = -1

            if not maxcardinality:
                deltatype = 1
                delta = dualvar[0]
                for v in range(n):
                    if dualvar[v] < delta:
                        delta = dualvar[v]

            for v in range(n):
                if label[inblossom[v]] == _FREE and bestedge_e[v] >= 0:
                    d = slack(bestedge_e[v])
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge = bestedge_e[v]
                        deltaedge_sv = bestedge_sv[v]

            for b in range(nslot):
                if b >= n and blossombase[b] < 0:
                    continue
                if (
                    blossomparent[b] == -1
                    and label[b] == _S
                    and bestedge_e[b] >= 0
                ):
                    d = slack(bestedge_e[b]) // 2
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge = bestedge_e[b]
                        deltaedge_sv = bestedge_sv[b]

            for b in range(n, nslot):
                if blossombase[b] < 0:
                    continue
                if blossomparent[b] == -1 and label[b] == _T:
                    d = blossomdual[slot(b)]
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 4
                        deltablossom = b

            if deltatype == -1:
                # Max-cardinality optimum; final clamp to make duals legal.
                deltatype = 1
                delta = dualvar[0]
                for v in range(n):
                    if dualvar[v] < delta:
                        delta = dualvar[v]
                if delta < 0:
                    delta = 0

            for v in range(n):
                lb = label[inblossom[v]]
                if lb == _S:
                    dualvar[v] -= delta
                elif lb == _T:
                    dualvar[v] += delta
            for b in range(n, nslot):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == _S:
                        blossomdual[slot(b)] += delta
                    elif label[b] == _T:
                        blossomdual[slot(b)] -= delta

            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = 1
                queue[qn] = deltaedge_sv
                qn += 1
            elif deltatype == 3:
                allowedge[deltaedge] = 1
                queue[qn] = deltaedge_sv
                qn += 1
            elif deltatype == 4:
                # ---- expandBlossom(deltablossom, endstage=False) ----
                b = deltablossom
                s = slot(b)
                clen = childs_len[s]
                for ci in range(clen):
                    c = childs[s, ci]
                    blossomparent[c] = -1
                    if c < n:
                        inblossom[c] = c
                    else:
                        cnt = collect_leaves(c)
                        for k in range(cnt):
                            inblossom[leafbuf[k]] = c
                if label[b] == _T:
                    entrychild = inblossom[labeledge_w[b]]
                    i0 = 0
                    for ci in range(clen):
                        if childs[s, ci] == entrychild:
                            i0 = ci
                            break
                    j = i0
                    if i0 & 1:
                        j -= clen
                        jstep = 1
                    else:
                        jstep = -1
                    vv = labeledge_v[b]
                    ww = labeledge_w[b]
                    ee = labeledge_e[b]
                    while j != 0:
                        if jstep == 1:
                            pq_e = cedge_e[s, j % clen]
                            pp = cedge_v[s, j % clen]
                            qq = cedge_w[s, j % clen]
                        else:
                            pq_e = cedge_e[s, (j - 1) % clen]
                            qq = cedge_v[s, (j - 1) % clen]
                            pp = cedge_w[s, (j - 1) % clen]
                        label[ww] = _FREE
                        label[qq] = _FREE
                        qn = assign_label(ww, _T, vv, ee, qn)
                        allowedge[pq_e] = 1
                        j += jstep
                        if jstep == 1:
                            ee = cedge_e[s, j % clen]
                            vv = cedge_v[s, j % clen]
                            ww = cedge_w[s, j % clen]
                        else:
                            ee = cedge_e[s, (j - 1) % clen]
                            ww = cedge_v[s, (j - 1) % clen]
                            vv = cedge_w[s, (j - 1) % clen]
                        allowedge[ee] = 1
                        j += jstep
                    bw_ = childs[s, j % clen]
                    label[ww] = _T
                    label[bw_] = _T
                    labeledge_v[ww] = vv
                    labeledge_w[ww] = ww
                    labeledge_e[ww] = ee
                    labeledge_v[bw_] = vv
                    labeledge_w[bw_] = ww
                    labeledge_e[bw_] = ee
                    bestedge_e[bw_] = -1
                    bestedge_sv[bw_] = -1
                    j += jstep
                    while childs[s, j % clen] != entrychild:
                        bv_ = childs[s, j % clen]
                        if label[bv_] == _S:
                            j += jstep
                            continue
                        reach_v = -1
                        if bv_ < n:
                            if label[bv_] != _FREE:
                                reach_v = bv_
                        else:
                            cnt = collect_leaves(bv_)
                            for k in range(cnt):
                                if label[leafbuf[k]] != _FREE:
                                    reach_v = leafbuf[k]
                                    break
                        if reach_v >= 0:
                            label[reach_v] = _FREE
                            label[mate[blossombase[bv_]]] = _FREE
                            qn = assign_label(
                                reach_v,
                                _T,
                                labeledge_v[reach_v],
                                labeledge_e[reach_v],
                                qn,
                            )
                        j += jstep
                # Free the expanded slot.
                label[b] = _FREE
                labeledge_v[b] = -1
                labeledge_w[b] = -1
                labeledge_e[b] = -1
                bestedge_e[b] = -1
                bestedge_sv[b] = -1
                blossombase[b] = -1
                childs_len[s] = 0
                mybest_len[s] = -1
                free_slots[n_free] = b
                n_free += 1
                # ---- end expandBlossom ----

        if not augmented:
            break

        # End of stage: dissolve S-blossoms whose dual fell to zero.
        for b in range(n, nslot):
            if (
                blossombase[b] >= 0
                and blossomparent[b] == -1
                and label[b] == _S
                and blossomdual[slot(b)] == 0
            ):
                n_free += expand_endstage(b, n_free)

    return mate, status


def _build_csr(n, eu, ev):
    m = len(eu)
    deg = np.zeros(n + 1, dtype=np.int64)
    for e in range(m):
        deg[eu[e] + 1] += 1
        deg[ev[e] + 1] += 1
    off = np.cumsum(deg)
    arc = np.empty(2 * m, dtype=np.int32)
    fill = off[:-1].copy()
    for e in range(m):
        arc[fill[eu[e]]] = e
        fill[eu[e]] += 1
        arc[fill[ev[e]]] = e
        fill[ev[e]] += 1
    return off, arc


if _HAVE_NUMBA:

    @njit(cache=True)
    def _build_csr_jit(n, eu, ev):
        m = eu.shape[0]
        deg = np.zeros(n + 1, dtype=np.int64)
        for e in range(m):
            deg[eu[e] + 1] += 1
            deg[ev[e] + 1] += 1
        off = np.cumsum(deg)
        arc = np.empty(2 * m, dtype=np.int32)
        fill = off[:-1].copy()
        for e in range(m):
            arc[fill[eu[e]]] = e
            fill[eu[e]] += 1
            arc[fill[ev[e]]] = e
            fill[ev[e]] += 1
        return off, arc


def max_weight_matching(
    n: int, edges: np.ndarray, maxcardinality: bool = False
) -> np.ndarray:
    """Exact maximum-weight matching.

    edges is an integer array of shape (m, 3): rows (u, v, w) with
    0 <= u != v < n and integer weight w. At most one edge per vertex
    pair. Returns mate[v] = matched partner of v, or -1.
    """
    edges = np.asarray(edges, dtype=np.int64)
    if edges.ndim != 2 or (len(edges) and edges.shape[1] != 3):
        raise ValueError("edges must have shape (m, 3)")
    if len(edges) == 0:
        return np.full(n, -1, dtype=np.int32)
    eu = edges[:, 0].astype(np.int32)
    ev = edges[:, 1].astype(np.int32)
    ew = edges[:, 2].astype(np.int64)
    if eu.min() < 0 or ev.min() < 0 or max(eu.max(), ev.max()) >= n:
        raise ValueError("edge endpoint out of range")
    if np.any(eu == ev):
        raise ValueError("self-loops are not allowed")

    if _HAVE_NUMBA:
        off, arc = _build_csr_jit(n, eu, ev)
    else:
        off, arc = _build_csr(n, eu, ev)
    mate, status = _mwm_core(n, eu, ev, ew, off, arc, maxcardinality)
    if status != 0:
        raise RuntimeError("matching workspace exhausted (internal error)")
    return mate


def mate_to_pairs(mate: np.ndarray) -> list[tuple[int, int]]:
    """Matched (u, v) pairs with u < v."""
    out = []
    for v, w in enumerate(mate):
        if w >= 0 and v < w:
            out.append((v, int(w)))
    return out
