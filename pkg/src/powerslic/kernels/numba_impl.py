"""Numba-compiled implementations of the hot loops.

Each function mirrors its twin in ``numpy_impl`` operation for operation:
identical float64 expression trees (no fastmath), identical strict
less-than updates, identical tie-breaking. The test suite asserts bitwise
equality of the two backends on random inputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND = "numba"

_BIG = np.int64(1) << np.int64(62)


@njit(cache=True, nogil=True)
def _slic_assign(lab, centers, h, m, labels, dists):
    height, width = labels.shape
    hw = int(np.ceil(h)) - 1
    w = (h * h) / (m * m)
    k = centers.shape[0]
    for i in range(k):
        cx = centers[i, 0]
        cy = centers[i, 1]
        cl = centers[i, 2]
        ca = centers[i, 3]
        cb = centers[i, 4]
        cxr = int(np.floor(cx + 0.5))
        cyr = int(np.floor(cy + 0.5))
        x0 = max(cxr - hw, 0)
        x1 = min(cxr + hw, width - 1)
        y0 = max(cyr - hw, 0)
        y1 = min(cyr + hw, height - 1)
        for y in range(y0, y1 + 1):
            dy = y - cy
            for x in range(x0, x1 + 1):
                dx = x - cx
                dl = lab[y, x, 0] - cl
                da = lab[y, x, 1] - ca
                db = lab[y, x, 2] - cb
                d = (dx * dx + dy * dy) + w * ((dl * dl + da * da) + db * db)
                if d < dists[y, x]:
                    dists[y, x] = d
                    labels[y, x] = i
    return labels, dists


def slic_assign_pass(lab, centers, h, m, labels, dists):
    return _slic_assign(lab, centers, float(h), float(m), labels, dists)


@njit(cache=True, nogil=True)
def _power_assign(sites, mats, mus, use_offset, h, labels, dists):
    height, width = labels.shape
    hw = int(np.ceil(h)) - 1
    k = sites.shape[0]
    for i in range(k):
        cx = sites[i, 0]
        cy = sites[i, 1]
        a = mats[i, 0]
        b2 = 2.0 * mats[i, 1]
        c = mats[i, 2]
        mu = mus[i]
        cxr = int(np.floor(cx + 0.5))
        cyr = int(np.floor(cy + 0.5))
        x0 = max(cxr - hw, 0)
        x1 = min(cxr + hw, width - 1)
        y0 = max(cyr - hw, 0)
        y1 = min(cyr + hw, height - 1)
        for y in range(y0, y1 + 1):
            dy = y - cy
            for x in range(x0, x1 + 1):
                dx = x - cx
                d = a * dx * dx + b2 * (dx * dy) + c * dy * dy
                if use_offset:
                    d = d - mu
                if d < dists[y, x]:
                    dists[y, x] = d
                    labels[y, x] = i
    return labels, dists


def power_assign_pass(lab_unused, sites, mats, mus, use_offset, h, labels, dists):
    return _power_assign(sites, mats, mus, bool(use_offset), float(h), labels, dists)


@njit(cache=True, nogil=True)
def _locate_many(px, py, sites, mats, mus):
    n = px.shape[0]
    k = sites.shape[0]
    best = np.full(n, np.inf, dtype=np.float64)
    idx = np.full(n, -1, dtype=np.int32)
    for i in range(k):
        sx = sites[i, 0]
        sy = sites[i, 1]
        a = mats[i, 0]
        b2 = 2.0 * mats[i, 1]
        c = mats[i, 2]
        mu = mus[i]
        for t in range(n):
            dx = px[t] - sx
            dy = py[t] - sy
            d = (a * dx * dx + b2 * (dx * dy) + c * dy * dy) - mu
            if d < best[t]:
                best[t] = d
                idx[t] = i
    return idx, best


def locate_many(px, py, sites, mats, mus):
    return _locate_many(px, py, sites, mats, mus)


@njit(cache=True, nogil=True)
def _label_components(labels, width, height):
    n = width * height
    comp = np.full(n, -1, dtype=np.int32)
    stack = np.empty(n, dtype=np.int64)
    nc = 0
    for p in range(n):
        if comp[p] >= 0:
            continue
        lbl = labels[p]
        comp[p] = nc
        stack[0] = p
        sp = 1
        while sp > 0:
            sp -= 1
            q = stack[sp]
            x = q % width
            if x > 0 and comp[q - 1] < 0 and labels[q - 1] == lbl:
                comp[q - 1] = nc
                stack[sp] = q - 1
                sp += 1
            if x < width - 1 and comp[q + 1] < 0 and labels[q + 1] == lbl:
                comp[q + 1] = nc
                stack[sp] = q + 1
                sp += 1
            if q - width >= 0 and comp[q - width] < 0 and labels[q - width] == lbl:
                comp[q - width] = nc
                stack[sp] = q - width
                sp += 1
            if q + width < n and comp[q + width] < 0 and labels[q + width] == lbl:
                comp[q + width] = nc
                stack[sp] = q + width
                sp += 1
        nc += 1
    return comp, nc


def label_components(labels):
    height, width = labels.shape
    flat = np.ascontiguousarray(labels.ravel())
    comp, nc = _label_components(flat, width, height)
    return comp.reshape(height, width), int(nc)


@njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def _merge_small(comp, width, comp_label, comp_size, csr_start, csr_pix, thr):
    n = comp.shape[0]
    m = comp_label.shape[0]
    parent = np.arange(m, dtype=np.int64)
    root_label = comp_label.astype(np.int64)
    root_disc = np.arange(m, dtype=np.int64)
    root_size = comp_size.astype(np.int64)
    head = np.arange(m, dtype=np.int64)
    tail = np.arange(m, dtype=np.int64)
    nxt = np.full(m, -1, dtype=np.int64)

    counts = np.zeros(m, dtype=np.int64)
    touched = np.empty(m, dtype=np.int64)
    absorb = np.empty(m, dtype=np.int64)
    queue = np.empty(2 * m, dtype=np.int64)
    for c in range(m):
        queue[c] = c
    qlen = m
    qi = 0
    while qi < qlen:
        r = _find(parent, queue[qi])
        qi += 1
        if root_size[r] > thr:
            continue
        ntouch = 0
        mc = head[r]
        while mc != -1:
            for e in range(csr_start[mc], csr_start[mc + 1]):
                q = csr_pix[e]
                x = q % width
                if x > 0:
                    nr = _find(parent, comp[q - 1])
                    if nr != r:
                        if counts[nr] == 0:
                            touched[ntouch] = nr
                            ntouch += 1
                        counts[nr] += 1
                if x < width - 1:
                    nr = _find(parent, comp[q + 1])
                    if nr != r:
                        if counts[nr] == 0:
                            touched[ntouch] = nr
                            ntouch += 1
                        counts[nr] += 1
                if q - width >= 0:
                    nr = _find(parent, comp[q - width])
                    if nr != r:
                        if counts[nr] == 0:
                            touched[ntouch] = nr
                            ntouch += 1
                        counts[nr] += 1
                if q + width < n:
                    nr = _find(parent, comp[q + width])
                    if nr != r:
                        if counts[nr] == 0:
                            touched[ntouch] = nr
                            ntouch += 1
                        counts[nr] += 1
            mc = nxt[mc]
        if ntouch == 0:
            continue
        best = touched[0]
        for t in range(1, ntouch):
            nr = touched[t]
            if counts[nr] > counts[best]:
                best = nr
            elif counts[nr] == counts[best]:
                if root_label[nr] < root_label[best] or (
                    root_label[nr] == root_label[best]
                    and root_disc[nr] < root_disc[best]
                ):
                    best = nr
        nab = 0
        absorb[nab] = r
        nab += 1
        for t in range(ntouch):
            nr = touched[t]
            if nr != best and root_label[nr] == root_label[best]:
                absorb[nab] = nr
                nab += 1
        for t in range(ntouch):
            counts[touched[t]] = 0
        for t in range(nab):
            src = absorb[t]
            parent[src] = best
            root_size[best] += root_size[src]
            if root_disc[src] < root_disc[best]:
                root_disc[best] = root_disc[src]
            nxt[tail[best]] = head[src]
            tail[best] = tail[src]
        if root_size[best] <= thr:
            queue[qlen] = best
            qlen += 1

    out = np.empty(n, dtype=np.int32)
    cache = np.empty(m, dtype=np.int32)
    for c in range(m):
        cache[c] = np.int32(root_label[_find(parent, c)])
    for q in range(n):
        out[q] = cache[comp[q]]
    return out


def merge_small(comp, width, comp_label, comp_size, csr_start, csr_pix, thr):
    return _merge_small(
        comp, width, comp_label, comp_size, csr_start, csr_pix, float(thr)
    )


@njit(cache=True, nogil=True)
def _heap_less(hd, hn, a, b):
    return hd[a] < hd[b] or (hd[a] == hd[b] and hn[a] < hn[b])


@njit(cache=True, nogil=True)
def _heap_push(hd, hn, size, d, node):
    hd[size] = d
    hn[size] = node
    i = size
    while i > 0:
        p = (i - 1) >> 1
        if _heap_less(hd, hn, i, p):
            hd[i], hd[p] = hd[p], hd[i]
            hn[i], hn[p] = hn[p], hn[i]
            i = p
        else:
            break
    return size + 1


@njit(cache=True, nogil=True)
def _heap_pop(hd, hn, size):
    d = hd[0]
    node = hn[0]
    size -= 1
    hd[0] = hd[size]
    hn[0] = hn[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        r = l + 1
        if r < size and _heap_less(hd, hn, r, l):
            c = r
        if _heap_less(hd, hn, c, i):
            hd[i], hd[c] = hd[c], hd[i]
            hn[i], hn[c] = hn[c], hn[i]
            i = c
        else:
            break
    return d, node, size


@njit(cache=True, nogil=True)
def _arc_of(indptr, arc_site, j, s):
    for e in range(indptr[j], indptr[j + 1]):
        if arc_site[e] == s:
            return e
    return np.int64(-1)


@njit(cache=True, nogil=True)
def _ssp_solve(indptr, arc_site, arc_cost, supplies):
    k = supplies.shape[0]
    n = indptr.shape[0] - 1
    nv = k + n
    nnz = arc_site.shape[0]
    cap_rem = supplies.copy()
    assign = np.full(n, -1, dtype=np.int32)
    pot = np.zeros(nv, dtype=np.int64)
    site_head = np.full(k, -1, dtype=np.int64)
    pix_next = np.full(n, -1, dtype=np.int64)
    pix_prev = np.full(n, -1, dtype=np.int64)

    dist = np.full(nv, _BIG, dtype=np.int64)
    settled = np.zeros(nv, dtype=np.uint8)
    parent_pix = np.full(k, -1, dtype=np.int64)
    touched = np.empty(nv, dtype=np.int64)
    hd = np.empty(nnz + n + k + 16, dtype=np.int64)
    hn = np.empty(nnz + n + k + 16, dtype=np.int64)

    for j0 in range(n):
        hsize = 0
        ntouch = 0
        dist[k + j0] = 0
        touched[ntouch] = k + j0
        ntouch += 1
        hsize = _heap_push(hd, hn, hsize, np.int64(0), np.int64(k + j0))
        target = np.int64(-1)
        dist_t = np.int64(0)
        while hsize > 0:
            d, v, hsize = _heap_pop(hd, hn, hsize)
            if settled[v] == 1 or d > dist[v]:
                continue
            settled[v] = 1
            if v < k and cap_rem[v] > 0:
                target = v
                dist_t = d
                break
            if v >= k:
                j = v - k
                pj = pot[v]
                for e in range(indptr[j], indptr[j + 1]):
                    s = arc_site[e]
                    if settled[s] == 1:
                        continue
                    nd = d + arc_cost[e] - pot[s] + pj
                    if nd < dist[s]:
                        if dist[s] == _BIG:
                            touched[ntouch] = s
                            ntouch += 1
                        dist[s] = nd
                        parent_pix[s] = j
                        hsize = _heap_push(hd, hn, hsize, nd, s)
            else:
                ps = pot[v]
                jj = site_head[v]
                while jj != -1:
                    wn = k + jj
                    if settled[wn] == 0:
                        e = _arc_of(indptr, arc_site, jj, v)
                        nd = d - (arc_cost[e] - ps + pot[wn])
                        if nd < dist[wn]:
                            if dist[wn] == _BIG:
                                touched[ntouch] = wn
                                ntouch += 1
                            dist[wn] = nd
                            hsize = _heap_push(hd, hn, hsize, nd, wn)
                    jj = pix_next[jj]
        if target < 0:
            for t in range(ntouch):
                v = touched[t]
                dist[v] = _BIG
                settled[v] = 0
                if v < k:
                    parent_pix[v] = -1
            return 1, assign, pot, np.int64(0)
        for t in range(ntouch):
            v = touched[t]
            if settled[v] == 1:
                pot[v] += dist[v] - dist_t
        node = target
        while True:
            p = parent_pix[node]
            old = assign[p]
            if old >= 0:
                pr = pix_prev[p]
                nx = pix_next[p]
                if pr == -1:
                    site_head[old] = nx
                else:
                    pix_next[pr] = nx
                if nx != -1:
                    pix_prev[nx] = pr
                pix_next[p] = -1
                pix_prev[p] = -1
            h = site_head[node]
            pix_next[p] = h
            pix_prev[p] = -1
            if h != -1:
                pix_prev[h] = p
            site_head[node] = p
            assign[p] = np.int32(node)
            if old < 0:
                break
            node = old
        cap_rem[target] -= 1
        for t in range(ntouch):
            v = touched[t]
            dist[v] = _BIG
            settled[v] = 0
            if v < k:
                parent_pix[v] = -1

    objective = np.int64(0)
    for j in range(n):
        e = _arc_of(indptr, arc_site, j, assign[j])
        objective += arc_cost[e]
    return 0, assign, pot, objective


def ssp_solve(indptr, arc_site, arc_cost, supplies):
    status, assign, pot, obj = _ssp_solve(
        indptr, arc_site, arc_cost, supplies.astype(np.int64)
    )
    return status, assign, pot, obj
