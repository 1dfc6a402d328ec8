"""Edmonds' weighted blossom algorithm, compiled with numba.

Array-based port of the O(n**3) primal-dual formulation of Galil (1986) as
laid out in Van Rantwijk's ``mwmatching``. Weights are int64 so every dual
update is exact; recursion is replaced by explicit stacks.

Blossom bookkeeping per blossom id ``b`` in ``[n, 2n)``:
``childs[b, :nchild[b]]`` are the sub-blossoms in cycle order starting at the
base, ``endps[b, i]`` is the edge endpoint joining child ``i`` to ``i + 1``.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def max_weight_matching(nvertex, edge_u, edge_v, edge_w, maxcardinality):
    """Return ``mate`` with ``mate[v]`` the partner of ``v`` or -1.

    With ``maxcardinality`` the result maximises weight among matchings of
    maximum cardinality.
    """
    nedge = edge_u.shape[0]
    mate = np.full(nvertex, -1, np.int64)
    if nedge == 0 or nvertex == 0:
        return mate

    n2 = 2 * nvertex
    maxweight = 0
    for k in range(nedge):
        if edge_w[k] > maxweight:
            maxweight = edge_w[k]

    endpoint = np.empty(2 * nedge, np.int64)
    for k in range(nedge):
        endpoint[2 * k] = edge_u[k]
        endpoint[2 * k + 1] = edge_v[k]

    # neighbour endpoints in CSR form, in edge order
    deg = np.zeros(nvertex + 1, np.int64)
    for k in range(nedge):
        deg[edge_u[k] + 1] += 1
        deg[edge_v[k] + 1] += 1
    nb_ptr = np.cumsum(deg)
    fill = nb_ptr[:-1].copy()
    neighbend = np.empty(2 * nedge, np.int64)
    for k in range(nedge):
        neighbend[fill[edge_u[k]]] = 2 * k + 1
        fill[edge_u[k]] += 1
        neighbend[fill[edge_v[k]]] = 2 * k
        fill[edge_v[k]] += 1

    label = np.zeros(n2, np.int64)
    labelend = np.full(n2, -1, np.int64)
    inblossom = np.arange(nvertex)
    blossomparent = np.full(n2, -1, np.int64)
    childs = np.full((n2, nvertex + 1), -1, np.int64)
    endps = np.full((n2, nvertex + 1), -1, np.int64)
    nchild = np.zeros(n2, np.int64)
    blossombase = np.full(n2, -1, np.int64)
    blossombase[:nvertex] = np.arange(nvertex)
    bestedge = np.full(n2, -1, np.int64)
    bbedges = np.full((n2, n2), -1, np.int64)
    nbbedges = np.full(n2, -1, np.int64)  # -1 means "no list"
    unused = np.empty(nvertex, np.int64)
    for i in range(nvertex):
        unused[i] = nvertex + i
    nunused = np.array([nvertex], np.int64)
    dualvar = np.zeros(n2, np.int64)
    dualvar[:nvertex] = maxweight
    allowedge = np.zeros(nedge, np.bool_)

    queue = np.empty(2 * nvertex + 4, np.int64)
    qlen = np.zeros(1, np.int64)

    leafbuf = np.empty(nvertex, np.int64)
    leafstack = np.empty(n2, np.int64)
    tmp = np.empty(nvertex + 1, np.int64)
    bestedgeto = np.full(n2, -1, np.int64)
    scanpath = np.empty(n2, np.int64)
    workb = np.empty(n2 * 2, np.int64)
    workv = np.empty(n2 * 2, np.int64)

    def slack(k):
        return dualvar[edge_u[k]] + dualvar[edge_v[k]] - 2 * edge_w[k]

    def blossom_leaves(b, out):
        # depth-first, children in cycle order
        if b < nvertex:
            out[0] = b
            return 1
        cnt = 0
        sp = 0
        leafstack[sp] = b
        sp += 1
        while sp > 0:
            sp -= 1
            t = leafstack[sp]
            if t < nvertex:
                out[cnt] = t
                cnt += 1
            else:
                for i in range(nchild[t] - 1, -1, -1):
                    leafstack[sp] = childs[t, i]
                    sp += 1
        return cnt

    def push(v):
        queue[qlen[0]] = v
        qlen[0] += 1

    def assign_label(w, t, p):
        while True:
            b = inblossom[w]
            label[w] = t
            label[b] = t
            labelend[w] = p
            labelend[b] = p
            bestedge[w] = -1
            bestedge[b] = -1
            if t == 1:
                cnt = blossom_leaves(b, leafbuf)
                for i in range(cnt):
                    push(leafbuf[i])
                return
            base = blossombase[b]
            mb = mate[base]
            w = endpoint[mb]
            t = 1
            p = mb ^ 1

    def scan_blossom(v, w):
        npath = 0
        base = -1
        while v != -1 or w != -1:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            scanpath[npath] = b
            npath += 1
            label[b] = 5
            if labelend[b] == -1:
                v = -1
            else:
                v = endpoint[labelend[b]]
                b = inblossom[v]
                v = endpoint[labelend[b]]
            if w != -1:
                v, w = w, v
        for i in range(npath):
            label[scanpath[i]] = 1
        return base

    def _consider_edge(kk, b):
        i = edge_u[kk]
        j = edge_v[kk]
        if inblossom[j] == b:
            i, j = j, i
        bj = inblossom[j]
        if bj != b and label[bj] == 1 and (bestedgeto[bj] == -1 or slack(kk) < slack(bestedgeto[bj])):
            bestedgeto[bj] = kk

    def add_blossom(base, k):
        v = edge_u[k]
        w = edge_v[k]
        bb = inblossom[base]
        bv = inblossom[v]
        bw = inblossom[w]
        nunused[0] -= 1
        b = unused[nunused[0]]
        blossombase[b] = base
        blossomparent[b] = -1
        blossomparent[bb] = b
        # trace back from v to base (collected in reverse)
        m = 0
        while bv != bb:
            blossomparent[bv] = b
            childs[b, m] = bv
            endps[b, m] = labelend[bv]
            m += 1
            v = endpoint[labelend[bv]]
            bv = inblossom[v]
        childs[b, m] = bb
        m += 1
        # reverse childs[0:m] and endps[0:m-1]
        for i in range(m // 2):
            a = childs[b, i]
            childs[b, i] = childs[b, m - 1 - i]
            childs[b, m - 1 - i] = a
        ne = m - 1
        for i in range(ne // 2):
            a = endps[b, i]
            endps[b, i] = endps[b, ne - 1 - i]
            endps[b, ne - 1 - i] = a
        endps[b, ne] = 2 * k
        ne += 1
        while bw != bb:
            blossomparent[bw] = b
            childs[b, m] = bw
            m += 1
            endps[b, ne] = labelend[bw] ^ 1
            ne += 1
            w = endpoint[labelend[bw]]
            bw = inblossom[w]
        nchild[b] = m
        label[b] = 1
        labelend[b] = labelend[bb]
        dualvar[b] = 0
        cnt = blossom_leaves(b, leafbuf)
        for i in range(cnt):
            lv = leafbuf[i]
            if label[inblossom[lv]] == 2:
                push(lv)
            inblossom[lv] = b
        # least-slack edges to neighbouring S-blossoms
        for i in range(n2):
            bestedgeto[i] = -1
        for ci in range(m):
            sub = childs[b, ci]
            if nbbedges[sub] < 0:
                cnt = blossom_leaves(sub, leafbuf)
                for li in range(cnt):
                    lv = leafbuf[li]
                    for q in range(nb_ptr[lv], nb_ptr[lv + 1]):
                        kk = neighbend[q] // 2
                        _consider_edge(kk, b)
            else:
                for q in range(nbbedges[sub]):
                    _consider_edge(bbedges[sub, q], b)
            nbbedges[sub] = -1
            bestedge[sub] = -1
        cntb = 0
        for i in range(n2):
            if bestedgeto[i] != -1:
                bbedges[b, cntb] = bestedgeto[i]
                cntb += 1
        nbbedges[b] = cntb
        bestedge[b] = -1
        for q in range(cntb):
            kk = bbedges[b, q]
            if bestedge[b] == -1 or slack(kk) < slack(bestedge[b]):
                bestedge[b] = kk

    def child_index(b, t):
        for i in range(nchild[b]):
            if childs[b, i] == t:
                return i
        return -1

    def recycle(b):
        label[b] = -1
        labelend[b] = -1
        nchild[b] = 0
        blossombase[b] = -1
        nbbedges[b] = -1
        bestedge[b] = -1
        unused[nunused[0]] = b
        nunused[0] += 1

    def expand_endstage(b0):
        # recursive expansion of zero-dual blossoms at the end of a stage
        sp = 0
        workb[sp] = b0
        sp += 1
        while sp > 0:
            sp -= 1
            b = workb[sp]
            for ci in range(nchild[b]):
                s = childs[b, ci]
                blossomparent[s] = -1
                if s < nvertex:
                    inblossom[s] = s
                elif dualvar[s] == 0:
                    workb[sp] = s
                    sp += 1
                else:
                    cnt = blossom_leaves(s, leafbuf)
                    for i in range(cnt):
                        inblossom[leafbuf[i]] = s
            recycle(b)

    def expand_t_blossom(b):
        # expansion of a T-blossom during a stage
        for ci in range(nchild[b]):
            s = childs[b, ci]
            blossomparent[s] = -1
            if s < nvertex:
                inblossom[s] = s
            else:
                cnt = blossom_leaves(s, leafbuf)
                for i in range(cnt):
                    inblossom[leafbuf[i]] = s
        if label[b] == 2:
            nc = nchild[b]
            entrychild = inblossom[endpoint[labelend[b] ^ 1]]
            j = child_index(b, entrychild)
            if j & 1:
                j -= nc
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = labelend[b]
            while j != 0:
                label[endpoint[p ^ 1]] = 0
                label[endpoint[endps[b, (j - endptrick) % nc] ^ endptrick ^ 1]] = 0
                assign_label(endpoint[p ^ 1], 2, p)
                allowedge[endps[b, (j - endptrick) % nc] // 2] = True
                j += jstep
                p = endps[b, (j - endptrick) % nc] ^ endptrick
                allowedge[p // 2] = True
                j += jstep
            bv = childs[b, j % nc]
            label[endpoint[p ^ 1]] = 2
            label[bv] = 2
            labelend[endpoint[p ^ 1]] = p
            labelend[bv] = p
            bestedge[bv] = -1
            j += jstep
            while childs[b, j % nc] != entrychild:
                bv = childs[b, j % nc]
                if label[bv] == 1:
                    j += jstep
                    continue
                cnt = blossom_leaves(bv, leafbuf)
                found = -1
                for i in range(cnt):
                    if label[leafbuf[i]] != 0:
                        found = leafbuf[i]
                        break
                if found >= 0:
                    label[found] = 0
                    label[endpoint[mate[blossombase[bv]]]] = 0
                    assign_label(found, 2, labelend[found])
                j += jstep
        recycle(b)

    def augment_blossom(b0, v0):
        # sub-blossom augmentations touch disjoint state, so a stack suffices
        sp = 0
        workb[sp] = b0
        workv[sp] = v0
        sp += 1
        while sp > 0:
            sp -= 1
            b = workb[sp]
            v = workv[sp]
            t = v
            while blossomparent[t] != b:
                t = blossomparent[t]
            if t >= nvertex:
                workb[sp] = t
                workv[sp] = v
                sp += 1
            nc = nchild[b]
            i = child_index(b, t)
            j = i
            if i & 1:
                j -= nc
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            while j != 0:
                j += jstep
                t = childs[b, j % nc]
                p = endps[b, (j - endptrick) % nc] ^ endptrick
                if t >= nvertex:
                    workb[sp] = t
                    workv[sp] = endpoint[p]
                    sp += 1
                j += jstep
                t = childs[b, j % nc]
                if t >= nvertex:
                    workb[sp] = t
                    workv[sp] = endpoint[p ^ 1]
                    sp += 1
                mate[endpoint[p]] = p ^ 1
                mate[endpoint[p ^ 1]] = p
            # rotate so the new base comes first
            for q in range(nc):
                tmp[q] = childs[b, (q + i) % nc]
            for q in range(nc):
                childs[b, q] = tmp[q]
            for q in range(nc):
                tmp[q] = endps[b, (q + i) % nc]
            for q in range(nc):
                endps[b, q] = tmp[q]
            # children are augmented lazily, so read the base from v itself
            blossombase[b] = v

    def augment_matching(k):
        for side in range(2):
            if side == 0:
                s = edge_u[k]
                p = 2 * k + 1
            else:
                s = edge_v[k]
                p = 2 * k
            while True:
                bs = inblossom[s]
                if bs >= nvertex:
                    augment_blossom(bs, s)
                mate[s] = p
                if labelend[bs] == -1:
                    break
                t = endpoint[labelend[bs]]
                bt = inblossom[t]
                s = endpoint[labelend[bt]]
                jv = endpoint[labelend[bt] ^ 1]
                if bt >= nvertex:
                    augment_blossom(bt, jv)
                mate[jv] = labelend[bt]
                p = labelend[bt] ^ 1

    for _stage in range(nvertex):
        label[:] = 0
        bestedge[:] = -1
        nbbedges[nvertex:] = -1
        allowedge[:] = False
        qlen[0] = 0
        for v in range(nvertex):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                assign_label(v, 1, -1)
        augmented = False
        while True:
            while qlen[0] > 0 and not augmented:
                qlen[0] -= 1
                v = queue[qlen[0]]
                for q in range(nb_ptr[v], nb_ptr[v + 1]):
                    p = neighbend[q]
                    k = p // 2
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    kslack = 0
                    if not allowedge[k]:
                        kslack = slack(k)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            assign_label(w, 2, p ^ 1)
                        elif label[inblossom[w]] == 1:
                            base = scan_blossom(v, w)
                            if base >= 0:
                                add_blossom(base, k)
                            else:
                                augment_matching(k)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < slack(bestedge[b]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < slack(bestedge[w]):
                            bestedge[w] = k
            if augmented:
                break

            # dual adjustment (all quantities pre-multiplied by two)
            deltatype = -1
            delta = 0
            deltaedge = -1
            deltablossom = -1
            if not maxcardinality:
                deltatype = 1
                delta = dualvar[0]
                for v in range(1, nvertex):
                    if dualvar[v] < delta:
                        delta = dualvar[v]
            for v in range(nvertex):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    d = slack(bestedge[v])
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge = bestedge[v]
            for b in range(n2):
                if blossomparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    d = slack(bestedge[b]) // 2
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge = bestedge[b]
            for b in range(nvertex, n2):
                if (blossombase[b] >= 0 and blossomparent[b] == -1 and label[b] == 2
                        and (deltatype == -1 or dualvar[b] < delta)):
                    delta = dualvar[b]
                    deltatype = 4
                    deltablossom = b
            if deltatype == -1:
                deltatype = 1
                delta = dualvar[0]
                for v in range(1, nvertex):
                    if dualvar[v] < delta:
                        delta = dualvar[v]
                if delta < 0:
                    delta = 0

            for v in range(nvertex):
                lb = label[inblossom[v]]
                if lb == 1:
                    dualvar[v] -= delta
                elif lb == 2:
                    dualvar[v] += delta
            for b in range(nvertex, n2):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta

            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = True
                i = edge_u[deltaedge]
                if label[inblossom[i]] == 0:
                    i = edge_v[deltaedge]
                push(i)
            elif deltatype == 3:
                allowedge[deltaedge] = True
                push(edge_u[deltaedge])
            else:
                expand_t_blossom(deltablossom)

        if not augmented:
            break

        for b in range(nvertex, n2):
            if blossomparent[b] == -1 and blossombase[b] >= 0 and label[b] == 1 and dualvar[b] == 0:
                expand_endstage(b)

    for v in range(nvertex):
        if mate[v] >= 0:
            mate[v] = endpoint[mate[v]]
    return mate


@njit(cache=True)
def min_weight_perfect_matching_int(nvertex, edge_u, edge_v, edge_w):
    """Minimum-weight perfect matching on a graph that admits one."""
    nedge = edge_u.shape[0]
    top = 0
    for k in range(nedge):
        if edge_w[k] > top:
            top = edge_w[k]
    flipped = np.empty(nedge, np.int64)
    for k in range(nedge):
        flipped[k] = top - edge_w[k]
    return max_weight_matching(nvertex, edge_u, edge_v, flipped, True)
