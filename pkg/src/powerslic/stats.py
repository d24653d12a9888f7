"""Per-label summary statistics: spatial center, covariance, area, bbox.

These are the inputs of both diagram constructions. The covariance is the
population covariance (divide by the area) of the pixel coordinates of each
label's region, regularized by adding eps to the diagonal so that singleton
and collinear regions stay invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_EPS = 0.25


@dataclass(frozen=True)
class ComponentStats:
    """Moments of one label's pixel set (possibly spatially disconnected)."""

    label: int
    center: np.ndarray
    covariance: np.ndarray
    area: int
    bbox: tuple  # (xmin, ymin, xmax, ymax), inclusive

    def __post_init__(self):
        if self.area < 1:
            raise ValueError("component area must be >= 1")


def regularize_covariance(cov, eps=DEFAULT_EPS):
    """Return cov + eps*I after checking symmetry.

    The shift makes every PSD input positive definite, so the inverse used
    as the cell matrix always exists.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {cov.shape}")
    scale = max(abs(cov[0, 1]), abs(cov[1, 0]), 1.0)
    if abs(cov[0, 1] - cov[1, 0]) > 1e-9 * scale:
        raise ValueError("covariance matrix is not symmetric")
    out = cov.copy()
    out[0, 0] += eps
    out[1, 1] += eps
    return out


def compute_stats(labels, eps=DEFAULT_EPS):
    """Center, covariance, area, and bbox for every non-empty label.

    Returns a list of ComponentStats ordered by label. Centers are plain
    means of (x, y) pixel coordinates; covariances are population
    covariances regularized with eps. Pixel visitation order does not
    affect the result beyond float addition order, which is fixed
    (row-major) for reproducibility.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("label map must be 2-D")
    height, width = labels.shape
    flat = labels.ravel()
    if flat.min() < 0:
        raise ValueError("label map contains unassigned pixels")
    nbins = int(flat.max()) + 1
    counts = np.bincount(flat, minlength=nbins)

    ys, xs = np.divmod(np.arange(flat.size, dtype=np.int64), width)
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    sx = np.bincount(flat, weights=xs, minlength=nbins)
    sy = np.bincount(flat, weights=ys, minlength=nbins)
    present = counts > 0
    mx = np.zeros(nbins)
    my = np.zeros(nbins)
    mx[present] = sx[present] / counts[present]
    my[present] = sy[present] / counts[present]

    # two-pass covariance around the means, stable for large coordinates
    dx = xs - mx[flat]
    dy = ys - my[flat]
    cxx = np.bincount(flat, weights=dx * dx, minlength=nbins)
    cxy = np.bincount(flat, weights=dx * dy, minlength=nbins)
    cyy = np.bincount(flat, weights=dy * dy, minlength=nbins)

    xmin = np.full(nbins, width, dtype=np.int64)
    xmax = np.full(nbins, -1, dtype=np.int64)
    ymin = np.full(nbins, height, dtype=np.int64)
    ymax = np.full(nbins, -1, dtype=np.int64)
    xi = xs.astype(np.int64)
    yi = ys.astype(np.int64)
    np.minimum.at(xmin, flat, xi)
    np.maximum.at(xmax, flat, xi)
    np.minimum.at(ymin, flat, yi)
    np.maximum.at(ymax, flat, yi)

    out = []
    for lbl in np.flatnonzero(present):
        kappa = int(counts[lbl])
        cov = np.array(
            [
                [cxx[lbl] / kappa, cxy[lbl] / kappa],
                [cxy[lbl] / kappa, cyy[lbl] / kappa],
            ]
        )
        out.append(
            ComponentStats(
                label=int(lbl),
                center=np.array([mx[lbl], my[lbl]]),
                covariance=regularize_covariance(cov, eps),
                area=kappa,
                bbox=(int(xmin[lbl]), int(ymin[lbl]), int(xmax[lbl]), int(ymax[lbl])),
            )
        )
    return out
