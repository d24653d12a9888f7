"""Vectorized NumPy implementations of the hot loops.

This is the fallback path used when Numba is unavailable or disabled via
``POWERSLIC_BACKEND=numpy``. Every function here must produce output that is
bit-identical to its counterpart in ``numba_impl``: the two sides share the
same float64 expression trees, the same strict less-than updates, and the
same ascending-index tie-breaking. Accumulations that could reorder
(e.g. per-label sums) live outside the kernels in shared code.
"""

from __future__ import annotations

import heapq

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

BACKEND = "numpy"

_INF = np.inf


def slic_assign_pass(lab, centers, h, m, labels, dists):
    """One windowed assignment sweep over all cluster centers.

    Updates ``labels``/``dists`` in place. A pixel switches to center ``i``
    only on a strictly smaller distance, so ties keep the lower index
    (centers are visited in ascending order).
    """
    height, width = labels.shape
    hw = int(np.ceil(h)) - 1
    w = (h * h) / (m * m)
    k = centers.shape[0]
    for i in range(k):
        cx = centers[i, 0]
        cy = centers[i, 1]
        cxr = int(np.floor(cx + 0.5))
        cyr = int(np.floor(cy + 0.5))
        x0 = max(cxr - hw, 0)
        x1 = min(cxr + hw, width - 1)
        y0 = max(cyr - hw, 0)
        y1 = min(cyr + hw, height - 1)
        if x0 > x1 or y0 > y1:
            continue
        sub = lab[y0 : y1 + 1, x0 : x1 + 1]
        dxs = np.arange(x0, x1 + 1, dtype=np.float64) - cx
        dys = np.arange(y0, y1 + 1, dtype=np.float64) - cy
        dl = sub[:, :, 0] - centers[i, 2]
        da = sub[:, :, 1] - centers[i, 3]
        db = sub[:, :, 2] - centers[i, 4]
        d = (dxs * dxs)[None, :] + (dys * dys)[:, None] + w * (
            (dl * dl + da * da) + db * db
        )
        win_l = labels[y0 : y1 + 1, x0 : x1 + 1]
        win_d = dists[y0 : y1 + 1, x0 : x1 + 1]
        upd = d < win_d
        win_d[upd] = d[upd]
        win_l[upd] = i
    return labels, dists


def power_assign_pass(lab_unused, sites, mats, mus, use_offset, h, labels, dists):
    """One windowed anisotropic assignment sweep over all diagram cells.

    ``mats`` holds the per-cell symmetric matrices packed as rows
    ``[a, b, c]`` for ``[[a, b], [b, c]]``. When ``use_offset`` is true the
    per-cell weight is subtracted from the quadratic form, which turns the
    nearest-site rule into the full additively weighted one.
    """
    height, width = labels.shape
    hw = int(np.ceil(h)) - 1
    k = sites.shape[0]
    for i in range(k):
        cx = sites[i, 0]
        cy = sites[i, 1]
        cxr = int(np.floor(cx + 0.5))
        cyr = int(np.floor(cy + 0.5))
        x0 = max(cxr - hw, 0)
        x1 = min(cxr + hw, width - 1)
        y0 = max(cyr - hw, 0)
        y1 = min(cyr + hw, height - 1)
        if x0 > x1 or y0 > y1:
            continue
        a = mats[i, 0]
        b2 = 2.0 * mats[i, 1]
        c = mats[i, 2]
        dxs = np.arange(x0, x1 + 1, dtype=np.float64) - cx
        dys = np.arange(y0, y1 + 1, dtype=np.float64) - cy
        d = (a * dxs * dxs)[None, :] + b2 * (dxs[None, :] * dys[:, None]) + (
            c * dys * dys
        )[:, None]
        if use_offset:
            d = d - mus[i]
        win_l = labels[y0 : y1 + 1, x0 : x1 + 1]
        win_d = dists[y0 : y1 + 1, x0 : x1 + 1]
        upd = d < win_d
        win_d[upd] = d[upd]
        win_l[upd] = i
    return labels, dists


def locate_many(px, py, sites, mats, mus):
    """Assign each query point to the cell with the lowest power value.

    Scans every cell, so it is meant for leftover pixels and rasterization,
    not the main assignment loop. Ties keep the lower cell index.
    """
    n = px.shape[0]
    k = sites.shape[0]
    best = np.full(n, _INF, dtype=np.float64)
    idx = np.full(n, -1, dtype=np.int32)
    for i in range(k):
        a = mats[i, 0]
        b2 = 2.0 * mats[i, 1]
        c = mats[i, 2]
        dx = px - sites[i, 0]
        dy = py - sites[i, 1]
        d = (a * dx * dx + b2 * (dx * dy) + c * dy * dy) - mus[i]
        upd = d < best
        best[upd] = d[upd]
        idx[upd] = i
    return idx, best


def label_components(labels):
    """4-connected components of equal-label regions.

    Returns ``(comp, n)`` where ``comp`` is an int32 map of component ids.
    Ids are canonical: sorted by each component's first pixel in row-major
    order, so both backends produce identical maps.
    """
    height, width = labels.shape
    n = labels.size
    flat = labels.ravel()
    idx = np.arange(n, dtype=np.int64)

    right = idx[(idx % width < width - 1) & (flat == np.roll(flat, -1))]
    down = idx[: n - width]
    down = down[flat[down] == flat[down + width]]

    rows = np.concatenate([right, down])
    cols = np.concatenate([right + 1, down + width])
    graph = coo_matrix(
        (np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n)
    )
    ncomp, comp = _cc(graph, directed=False)

    first = np.full(ncomp, n, dtype=np.int64)
    np.minimum.at(first, comp, idx)
    order = np.argsort(first, kind="stable")
    remap = np.empty(ncomp, dtype=np.int64)
    remap[order] = np.arange(ncomp, dtype=np.int64)
    return remap[comp].astype(np.int32).reshape(height, width), int(ncomp)


def merge_small(comp, width, comp_label, comp_size, csr_start, csr_pix, thr):
    """Merge undersized components into their dominant neighbors.

    ``comp`` is the flat component map; components are listed in canonical
    (first-pixel raster) order with their original segment label, pixel
    count, and a CSR listing of member pixels. Components with size <= thr
    are processed in canonical order: each is relabeled to the neighboring
    region it shares the longest boundary with (ties: lower label, then
    lower discovery index) and fused with any other touched region that
    already carries that label. A merge result that is still undersized is
    queued again. Returns the flat relabeled map.

    Pure-Python mirror of the compiled version; all arithmetic is integral
    so the outputs agree exactly.
    """
    n = comp.shape[0]
    m = comp_label.shape[0]
    parent = list(range(m))
    root_label = [int(v) for v in comp_label]
    root_disc = list(range(m))
    root_size = [int(v) for v in comp_size]
    head = list(range(m))
    tail = list(range(m))
    nxt = [-1] * m

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    counts = [0] * m
    queue = list(range(m))
    qi = 0
    while qi < len(queue):
        r = find(queue[qi])
        qi += 1
        if root_size[r] > thr:
            continue
        touched = []
        mc = head[r]
        while mc != -1:
            for e in range(csr_start[mc], csr_start[mc + 1]):
                q = int(csr_pix[e])
                x = q % width
                if x > 0:
                    nr = find(comp[q - 1])
                    if nr != r:
                        if counts[nr] == 0:
                            touched.append(nr)
                        counts[nr] += 1
                if x < width - 1:
                    nr = find(comp[q + 1])
                    if nr != r:
                        if counts[nr] == 0:
                            touched.append(nr)
                        counts[nr] += 1
                if q - width >= 0:
                    nr = find(comp[q - width])
                    if nr != r:
                        if counts[nr] == 0:
                            touched.append(nr)
                        counts[nr] += 1
                if q + width < n:
                    nr = find(comp[q + width])
                    if nr != r:
                        if counts[nr] == 0:
                            touched.append(nr)
                        counts[nr] += 1
            mc = nxt[mc]
        if not touched:
            continue
        best = touched[0]
        for nr in touched[1:]:
            if counts[nr] > counts[best]:
                best = nr
            elif counts[nr] == counts[best]:
                if root_label[nr] < root_label[best] or (
                    root_label[nr] == root_label[best]
                    and root_disc[nr] < root_disc[best]
                ):
                    best = nr
        absorb = [r]
        for nr in touched:
            if nr != best and root_label[nr] == root_label[best]:
                absorb.append(nr)
        for nr in touched:
            counts[nr] = 0
        for src in absorb:
            parent[src] = best
            root_size[best] += root_size[src]
            if root_disc[src] < root_disc[best]:
                root_disc[best] = root_disc[src]
            nxt[tail[best]] = head[src]
            tail[best] = tail[src]
        if root_size[best] <= thr:
            queue.append(best)

    out = np.empty(n, dtype=np.int32)
    cache = np.empty(m, dtype=np.int32)
    for c in range(m):
        cache[c] = root_label[find(c)]
    out[:] = cache[comp]
    return out


def ssp_solve(indptr, arc_site, arc_cost, supplies):
    """Successive shortest paths on the pixel/site transportation graph.

    Pixels are processed in row-major order; each augmentation runs a
    Dijkstra search with node potentials over the residual graph (forward
    arcs pixel -> site with reduced cost, reverse arcs site -> its assigned
    pixels at the negated reduced cost, which is zero along tight arcs).
    All costs and potentials are int64, so complementary slackness holds
    exactly on termination.

    Returns ``(status, assign, pot, objective)``; status 1 means some pixel
    could not reach any site with spare capacity.
    """
    k = supplies.shape[0]
    n = indptr.shape[0] - 1
    nv = k + n
    cap_rem = supplies.astype(np.int64).copy()
    assign = np.full(n, -1, dtype=np.int32)
    pot = np.zeros(nv, dtype=np.int64)
    # doubly linked list of pixels currently assigned to each site
    site_head = np.full(k, -1, dtype=np.int64)
    pix_next = np.full(n, -1, dtype=np.int64)
    pix_prev = np.full(n, -1, dtype=np.int64)

    big = np.int64(1) << np.int64(62)
    dist = np.full(nv, big, dtype=np.int64)
    settled = np.zeros(nv, dtype=bool)
    parent_pix = np.full(k, -1, dtype=np.int64)

    for j0 in range(n):
        heap = []
        touched = [k + j0]
        dist[k + j0] = 0
        heapq.heappush(heap, (np.int64(0), k + j0))
        target = -1
        dist_t = np.int64(0)
        while heap:
            d, v = heapq.heappop(heap)
            if settled[v] or d > dist[v]:
                continue
            settled[v] = True
            if v < k and cap_rem[v] > 0:
                target = v
                dist_t = d
                break
            if v >= k:
                j = v - k
                pj = pot[v]
                for e in range(indptr[j], indptr[j + 1]):
                    s = arc_site[e]
                    if settled[s]:
                        continue
                    nd = d + arc_cost[e] - pot[s] + pj
                    if nd < dist[s]:
                        if dist[s] == big:
                            touched.append(s)
                        dist[s] = nd
                        parent_pix[s] = j
                        heapq.heappush(heap, (nd, s))
            else:
                ps = pot[v]
                jj = site_head[v]
                while jj != -1:
                    w = k + jj
                    if not settled[w]:
                        e = _arc_of(indptr, arc_site, jj, v)
                        nd = d - (arc_cost[e] - ps + pot[w])
                        if nd < dist[w]:
                            if dist[w] == big:
                                touched.append(w)
                            dist[w] = nd
                            heapq.heappush(heap, (nd, w))
                    jj = pix_next[jj]
        if target < 0:
            for v in touched:
                dist[v] = big
                settled[v] = False
                if v < k:
                    parent_pix[v] = -1
            return 1, assign, pot, np.int64(0)
        for v in touched:
            if settled[v]:
                pot[v] += dist[v] - dist_t
        # walk the augmenting path back to the unassigned pixel
        node = target
        while True:
            p = parent_pix[node]
            old = assign[p]
            if old >= 0:
                _unlink(site_head, pix_next, pix_prev, old, p)
            _link(site_head, pix_next, pix_prev, node, p)
            assign[p] = node
            if old < 0:
                break
            node = old
        cap_rem[target] -= 1
        for v in touched:
            dist[v] = big
            settled[v] = False
            if v < k:
                parent_pix[v] = -1

    objective = np.int64(0)
    for j in range(n):
        e = _arc_of(indptr, arc_site, j, assign[j])
        objective += arc_cost[e]
    return 0, assign, pot, objective


def _arc_of(indptr, arc_site, j, s):
    for e in range(indptr[j], indptr[j + 1]):
        if arc_site[e] == s:
            return e
    raise RuntimeError("assigned arc missing from instance")


def _link(site_head, pix_next, pix_prev, s, p):
    h = site_head[s]
    pix_next[p] = h
    pix_prev[p] = -1
    if h != -1:
        pix_prev[h] = p
    site_head[s] = p


def _unlink(site_head, pix_next, pix_prev, s, p):
    pr = pix_prev[p]
    nx = pix_next[p]
    if pr == -1:
        site_head[s] = nx
    else:
        pix_next[pr] = nx
    if nx != -1:
        pix_prev[nx] = pr
    pix_next[p] = -1
    pix_prev[p] = -1
