"""Anisotropic power diagram geometry and the heuristic-weight segmentation.

A diagram cell is (site s, SPD matrix A, weight mu); the cell owns every
point x whose power value (x-s)^T A (x-s) - mu is minimal over all cells.
With A = I and equal weights this degenerates to a Voronoi diagram. The
representation is resolution independent: scaling sites by f and weights by
f^2 (matrices unchanged) reproduces the same partition at f times the
resolution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gbpd_io import format_float  # noqa: F401  (re-exported for callers)
from .stats import ComponentStats


@dataclass(frozen=True)
class DiagramCell:
    site: np.ndarray
    matrix: np.ndarray
    weight: float

    def __post_init__(self):
        site = np.asarray(self.site, dtype=np.float64).reshape(2)
        matrix = np.asarray(self.matrix, dtype=np.float64).reshape(2, 2)
        object.__setattr__(self, "site", site)
        object.__setattr__(self, "matrix", matrix)
        a, b1 = matrix[0]
        b2, c = matrix[1]
        scale = max(abs(a), abs(b1), abs(c), 1.0)
        if abs(b1 - b2) > 1e-9 * scale:
            raise ValueError("cell matrix must be symmetric")
        if a <= 0 or a * c - b1 * b2 <= 0:
            raise ValueError("cell matrix must be positive definite")


@dataclass(frozen=True)
class Diagram:
    cells: tuple
    ref_width: int
    ref_height: int

    def __post_init__(self):
        cells = tuple(self.cells)
        if not cells:
            raise ValueError("diagram needs at least one cell")
        object.__setattr__(self, "cells", cells)

    def packed(self):
        """(sites (k,2), matrices packed as rows [a,b,c], weights (k,))."""
        k = len(self.cells)
        sites = np.empty((k, 2), dtype=np.float64)
        mats = np.empty((k, 3), dtype=np.float64)
        mus = np.empty(k, dtype=np.float64)
        for i, cell in enumerate(self.cells):
            sites[i] = cell.site
            mats[i, 0] = cell.matrix[0, 0]
            mats[i, 1] = cell.matrix[0, 1]
            mats[i, 2] = cell.matrix[1, 1]
            mus[i] = cell.weight
        return sites, mats, mus


def mahalanobis_sq(x, s, a_mat):
    """(x-s)^T A (x-s) for an SPD matrix A."""
    d = np.asarray(x, dtype=np.float64) - np.asarray(s, dtype=np.float64)
    a_mat = np.asarray(a_mat, dtype=np.float64)
    return float(d @ a_mat @ d)


def cell_power(x, cell):
    """Power value of x under one cell: squared ellipsoidal distance - mu."""
    return mahalanobis_sq(x, cell.site, cell.matrix) - cell.weight


def locate(diagram, x):
    """Index of the cell with minimal power at x; ties to the lower index."""
    x = np.asarray(x, dtype=np.float64)
    sites, mats, mus = diagram.packed()
    idx, _ = kernels.locate_many(
        np.array([x[0]]), np.array([x[1]]), sites, mats, mus
    )
    return int(idx[0])


def heuristic_mu(kappa, cov):
    """Closed-form cell weight kappa / (pi * sqrt(det cov)).

    Normalizes the weight by the area of the covariance ellipse so that
    larger regions receive larger (more absorbing) weights.
    """
    cov = np.asarray(cov, dtype=np.float64)
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    if det <= 0:
        raise ValueError(f"covariance determinant must be > 0, got {det}")
    return float(kappa) / (math.pi * math.sqrt(det))


def invert_spd_2x2(mat):
    """Closed-form inverse of a symmetric positive definite 2x2 matrix."""
    mat = np.asarray(mat, dtype=np.float64)
    a, b = mat[0, 0], mat[0, 1]
    c = mat[1, 1]
    det = a * c - b * b
    if det <= 0:
        raise ValueError("matrix is not positive definite")
    return np.array([[c / det, -b / det], [-b / det, a / det]])


def cells_from_stats(stats):
    """Build diagram cells (s = center, A = cov^-1, mu = heuristic weight)."""
    cells = []
    for st in stats:
        cells.append(
            DiagramCell(
                site=st.center,
                matrix=invert_spd_2x2(st.covariance),
                weight=heuristic_mu(st.area, st.covariance),
            )
        )
    return cells


def power_slic_assign(img_dims, stats, h, power_offset=False):
    """Windowed anisotropic assignment over the cells built from stats.

    The main pass scans the 2h x 2h window of each cell site with strict-min
    updates of the squared ellipsoidal distance; by default the weight is
    NOT subtracted there (``power_offset=True`` switches the main pass to
    the full power value). Pixels missed by every window are cleaned up via
    the full diagram rule including the weight. Returns
    (labels, dists, diagram, n_cleaned); labels index into ``stats`` order.
    """
    width, height = img_dims
    if not stats:
        raise ValueError("stats must be non-empty")
    total = sum(st.area for st in stats)
    if total != width * height:
        raise ValueError(f"stats areas sum to {total}, expected {width * height}")
    diagram = Diagram(cells=tuple(cells_from_stats(stats)), ref_width=width,
                      ref_height=height)
    sites, mats, mus = diagram.packed()
    labels = np.full((height, width), -1, dtype=np.int32)
    dists = np.full((height, width), np.inf, dtype=np.float64)
    kernels.power_assign_pass(
        None, sites, mats, mus, bool(power_offset), float(h), labels, dists
    )
    flat = labels.ravel()
    miss = np.flatnonzero(flat < 0)
    if miss.size:
        ys, xs = np.divmod(miss, width)
        idx, vals = kernels.locate_many(
            xs.astype(np.float64), ys.astype(np.float64), sites, mats, mus
        )
        flat[miss] = idx
        dists.ravel()[miss] = vals
    return labels, dists, diagram, int(miss.size)


def rasterize(diagram, width, height):
    """Label map with labels(x, y) = locate(diagram, (x, y)) per pixel."""
    ys, xs = np.divmod(np.arange(width * height, dtype=np.int64), width)
    sites, mats, mus = diagram.packed()
    idx, _ = kernels.locate_many(
        xs.astype(np.float64), ys.astype(np.float64), sites, mats, mus
    )
    return idx.reshape(height, width)


def rescale(diagram, factor):
    """Same partition at `factor` times the resolution.

    Sites scale by f, weights by f^2, matrices are unchanged; the power
    value at f*x is f^2 times the original at x, so the argmin (and hence
    the partition) is preserved. Reference dimensions are scaled and
    rounded half-up.
    """
    if factor <= 0:
        raise ValueError(f"scale factor must be > 0, got {factor}")
    f = float(factor)
    cells = tuple(
        DiagramCell(site=c.site * f, matrix=c.matrix, weight=c.weight * f * f)
        for c in diagram.cells
    )
    return Diagram(
        cells=cells,
        ref_width=int(math.floor(diagram.ref_width * f + 0.5)),
        ref_height=int(math.floor(diagram.ref_height * f + 0.5)),
    )


def count_disconnected_cells(labels, n_cells):
    """Diagnostic: how many cells are empty or split into several pieces.

    Anisotropic power cells need not be connected; the partition is the
    diagram itself, so nothing is repaired, only reported.
    """
    labels = np.ascontiguousarray(labels, dtype=np.int32)
    comp, _ = kernels.label_components(labels)
    flat_l = labels.ravel()
    flat_c = comp.ravel()
    pieces = np.zeros(n_cells, dtype=np.int64)
    # count distinct components per label
    pairs = np.unique(np.stack([flat_l, flat_c], axis=1), axis=0)
    np.add.at(pieces, pairs[:, 0], 1)
    return int(np.sum(pieces != 1))


def diagram_to_json(diagram):
    """Serialize with 17 significant digits so parsing round-trips exactly."""
    cell_rows = []
    for c in diagram.cells:
        site = f"[{format_float(c.site[0])},{format_float(c.site[1])}]"
        m = c.matrix
        matrix = (
            f"[[{format_float(m[0, 0])},{format_float(m[0, 1])}],"
            f"[{format_float(m[0, 1])},{format_float(m[1, 1])}]]"
        )
        cell_rows.append(
            "{" + f'"site":{site},"matrix":{matrix},"mu":{format_float(c.weight)}' + "}"
        )
    return (
        "{"
        + f'"ref_width":{diagram.ref_width},"ref_height":{diagram.ref_height},'
        + '"cells":[\n'
        + ",\n".join(cell_rows)
        + "\n]}"
    )


def diagram_from_json(text):
    data = json.loads(text)
    cells = tuple(
        DiagramCell(
            site=np.array(c["site"], dtype=np.float64),
            matrix=np.array(c["matrix"], dtype=np.float64),
            weight=float(c["mu"]),
        )
        for c in data["cells"]
    )
    return Diagram(
        cells=cells,
        ref_width=int(data["ref_width"]),
        ref_height=int(data["ref_height"]),
    )


def save_diagram(diagram, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(diagram_to_json(diagram))
        fh.write("\n")


def load_diagram(path):
    with open(path, "r", encoding="utf-8") as fh:
        return diagram_from_json(fh.read())
