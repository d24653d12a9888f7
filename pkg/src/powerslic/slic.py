"""SLIC core: grid initialization, windowed assignment, connectivity cleanup.

The segmentation loop is windowed k-means in the joint 5D space of pixel
position and CIELAB color. Each iteration runs one assignment pass (distance
scratch reset, labels persisting, strict less-than updates with ties to the
lower cluster index) followed by a centroid update; it stops when the summed
L1 displacement of the spatial centers E drops to the threshold or the
iteration budget runs out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class SlicParams:
    k: int
    m: float = 10.0
    max_iters: int = 10
    residual_threshold: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.m <= 0:
            raise ValueError(f"m must be > 0, got {self.m}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.residual_threshold < 0:
            raise ValueError("residual_threshold must be >= 0")

    def spacing(self, n_pixels):
        """Grid spacing h = sqrt(N / k) for an N-pixel image."""
        if self.k > n_pixels:
            raise ValueError(f"k={self.k} exceeds pixel count {n_pixels}")
        return math.sqrt(n_pixels / self.k)


@dataclass
class SlicResult:
    """Final label map plus the cluster state that produced it.

    ``labels`` is total (no -1) after the fallback; ``dists`` is the scratch
    distance field of the last assignment pass (+inf where that pass's
    windows did not reach). ``centers`` has rows (x, y, L, a, b); ``empty``
    flags clusters that ended with no pixels.
    """

    labels: np.ndarray
    dists: np.ndarray
    centers: np.ndarray
    residual: float
    h: float
    empty: np.ndarray = field(repr=False)


def color_gradient(lab, x, y):
    """Squared color gradient at (x, y): central differences in CIELAB.

    Positions whose 4-neighborhood leaves the image return +inf.
    """
    height, width = lab.shape[:2]
    if x < 1 or x > width - 2 or y < 1 or y > height - 2:
        return math.inf
    dx = lab[y, x + 1] - lab[y, x - 1]
    dy = lab[y + 1, x] - lab[y - 1, x]
    return float(np.dot(dx, dx) + np.dot(dy, dy))


def color_gradient_field(lab):
    """color_gradient evaluated at every pixel (borders +inf)."""
    height, width = lab.shape[:2]
    g = np.full((height, width), np.inf)
    if height >= 3 and width >= 3:
        dx = lab[1:-1, 2:, :] - lab[1:-1, :-2, :]
        dy = lab[2:, 1:-1, :] - lab[:-2, 1:-1, :]
        g[1:-1, 1:-1] = (dx * dx).sum(axis=2) + (dy * dy).sum(axis=2)
    return g


def slic_distance_sq(p_xy, p_lab, center, h, m):
    """Squared 5D distance: spatial term plus (h/m)^2-weighted color term."""
    dx = p_xy[0] - center[0]
    dy = p_xy[1] - center[1]
    dl = p_lab[0] - center[2]
    da = p_lab[1] - center[3]
    db = p_lab[2] - center[4]
    w = (h * h) / (m * m)
    return (dx * dx + dy * dy) + w * ((dl * dl + da * da) + db * db)


def init_centers(lab, k):
    """Seed k cluster centers on an h-spaced grid, nudged off color edges.

    Grid positions are (floor(h/2) + i*h, floor(h/2) + j*h) rounded to the
    nearest pixel, taken in row-major order. If rounding yields more than k
    positions the first k are kept; if fewer, extra centers are appended at
    the lowest-gradient unoccupied pixels. Each grid center then moves
    within its 3x3 neighborhood to the position of strictly lowest color
    gradient (ties keep the earlier candidate, so the grid position wins).
    Center colors are sampled at the final position. Returns a (k, 5) array
    with rows (x, y, L, a, b). Grid positions on the image border keep
    their place: the gradient is undefined there, not a known maximum.
    """
    height, width = lab.shape[:2]
    n = height * width
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    h = math.sqrt(n / k)
    off = math.floor(h / 2.0)

    def _axis_positions(limit):
        out = []
        i = 0
        while True:
            v = int(math.floor(off + i * h + 0.5))
            if v > limit - 1:
                break
            out.append(v)
            i += 1
        return out

    xs = _axis_positions(width)
    ys = _axis_positions(height)
    pos = [(x, y) for y in ys for x in xs][:k]
    n_grid = len(pos)

    grad = color_gradient_field(lab)
    if n_grid < k:
        occupied = np.zeros((height, width), dtype=bool)
        for x, y in pos:
            occupied[y, x] = True
        for q in np.argsort(grad.ravel(), kind="stable"):
            if len(pos) == k:
                break
            y, x = divmod(int(q), width)
            if not occupied[y, x]:
                occupied[y, x] = True
                pos.append((x, y))

    centers = np.empty((k, 5), dtype=np.float64)
    for idx, (x, y) in enumerate(pos):
        if idx < n_grid and math.isfinite(grad[y, x]):
            best_g = grad[y, x]
            bx, by = x, y
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    xx, yy = x + dx, y + dy
                    if 0 <= xx < width and 0 <= yy < height and grad[yy, xx] < best_g:
                        best_g = grad[yy, xx]
                        bx, by = xx, yy
            x, y = bx, by
        centers[idx, 0] = x
        centers[idx, 1] = y
        centers[idx, 2:5] = lab[y, x]
    return centers


def _update_centers(lab, labels, centers):
    """Centroid update. Returns (new_centers, residual E).

    Empty clusters keep their previous center and contribute 0 to E.
    Accumulation is a fixed raster-order reduction, so the result does not
    depend on the kernel backend or thread count.
    """
    k = centers.shape[0]
    height, width = labels.shape
    flat = labels.ravel()
    mask = flat >= 0
    idx = flat[mask]
    counts = np.bincount(idx, minlength=k).astype(np.float64)
    ys, xs = np.divmod(np.flatnonzero(mask), width)
    chans = lab.reshape(-1, 3)[mask]
    sums = np.empty((k, 5), dtype=np.float64)
    sums[:, 0] = np.bincount(idx, weights=xs, minlength=k)
    sums[:, 1] = np.bincount(idx, weights=ys, minlength=k)
    for c in range(3):
        sums[:, 2 + c] = np.bincount(idx, weights=chans[:, c], minlength=k)
    new = centers.copy()
    nonempty = counts > 0
    new[nonempty] = sums[nonempty] / counts[nonempty, None]
    residual = float(
        np.sum(np.abs(new[:, 0] - centers[:, 0]) + np.abs(new[:, 1] - centers[:, 1]))
    )
    return new, residual


def run_assignment(lab, params):
    """Iterative windowed assignment (grid init, k-means loop, fallback).

    Output is total: any pixel missed by every window (possible only
    through rounding of window bounds) is assigned to the nearest center
    by the full 5D distance over all centers, ties to the lower index.
    With ``max_iters=0`` exactly one assignment pass runs over the initial
    centers and no centroid update happens.
    """
    lab = np.ascontiguousarray(lab, dtype=np.float64)
    height, width = lab.shape[:2]
    n = height * width
    h = params.spacing(n)
    centers = init_centers(lab, params.k)
    labels = np.full((height, width), -1, dtype=np.int32)
    dists = np.full((height, width), np.inf, dtype=np.float64)
    kernels.slic_assign_pass(lab, centers, h, params.m, labels, dists)
    residual = math.inf
    for it in range(1, params.max_iters + 1):
        centers, residual = _update_centers(lab, labels, centers)
        if residual <= params.residual_threshold:
            break
        if it < params.max_iters:
            dists.fill(np.inf)
            kernels.slic_assign_pass(lab, centers, h, params.m, labels, dists)

    flat = labels.ravel()
    miss = np.flatnonzero(flat < 0)
    if miss.size:
        ys, xs = np.divmod(miss, width)
        w = (h * h) / (params.m * params.m)
        pl = lab.reshape(-1, 3)[miss]
        d = (
            (xs[:, None] - centers[None, :, 0]) ** 2
            + (ys[:, None] - centers[None, :, 1]) ** 2
            + w
            * (
                (pl[:, 0, None] - centers[None, :, 2]) ** 2
                + (pl[:, 1, None] - centers[None, :, 3]) ** 2
                + (pl[:, 2, None] - centers[None, :, 4]) ** 2
            )
        )
        choice = np.argmin(d, axis=1)
        flat[miss] = choice
        dists.ravel()[miss] = d[np.arange(miss.size), choice]

    # pixels labeled in an earlier pass but outside every window of the
    # last pass still carry an infinite scratch distance; fill it with the
    # distance to their assigned center so D is finite everywhere
    dflat = dists.ravel()
    stale = np.flatnonzero(np.isinf(dflat))
    if stale.size:
        ys, xs = np.divmod(stale, width)
        w = (h * h) / (params.m * params.m)
        pl = lab.reshape(-1, 3)[stale]
        own = centers[flat[stale]]
        dflat[stale] = (
            (xs - own[:, 0]) ** 2
            + (ys - own[:, 1]) ** 2
            + w
            * (
                (pl[:, 0] - own[:, 2]) ** 2
                + (pl[:, 1] - own[:, 3]) ** 2
                + (pl[:, 2] - own[:, 4]) ** 2
            )
        )

    counts = np.bincount(flat, minlength=params.k)
    empty = counts == 0
    return SlicResult(labels, dists, centers, residual, h, empty)


def component_map(labels):
    """4-connected components of equal label. Returns (map, count).

    Component ids are assigned in order of each component's first pixel in
    row-major order.
    """
    labels = np.ascontiguousarray(labels, dtype=np.int32)
    if labels.size and labels.min() < 0:
        raise ValueError("label map contains unassigned pixels")
    return kernels.label_components(labels)


def connected_components(labels):
    """List of components, each an array of flat pixel indices.

    Components appear in discovery (first-pixel raster) order; indices
    within each component are in raster order.
    """
    comp, nc = component_map(labels)
    flat = comp.ravel()
    order = np.argsort(flat, kind="stable")
    start = np.zeros(nc + 1, dtype=np.int64)
    np.cumsum(np.bincount(flat, minlength=nc), out=start[1:])
    return [order[start[i] : start[i + 1]] for i in range(nc)]


def post_process(labels, k):
    """Absorb every connected component of size <= N/(2k) into a neighbor.

    The merge target is the adjacent component sharing the most 4-neighbor
    boundary contacts (ties: lower label, then lower discovery index); the
    merged region also fuses with other touched neighbors that already
    carry the target's label, and is re-examined if still undersized. The
    output is total and every component of it exceeds N/(2k) pixels.
    """
    labels = np.ascontiguousarray(labels, dtype=np.int32)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    height, width = labels.shape
    n = labels.size
    comp2d, m = component_map(labels)
    thr = n / (2.0 * k)
    comp = comp2d.ravel()
    sizes = np.bincount(comp, minlength=m).astype(np.int64)
    if m == 1 or sizes.min() > thr:
        return labels.copy()
    order = np.argsort(comp, kind="stable").astype(np.int64)
    start = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(sizes, out=start[1:])
    comp_label = labels.ravel()[order[start[:-1]]].astype(np.int32)
    out = kernels.merge_small(comp, width, comp_label, sizes, start, order, thr)
    return out.reshape(height, width)
