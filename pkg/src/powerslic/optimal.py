"""Exact diagram weights via the balanced least-squares assignment LP.

Each label's region must receive exactly its area in pixels; admitted
pixel/site pairs are restricted to the region's bounding box. The LP is a
transportation problem with a totally unimodular constraint matrix, so the
min-cost-flow solution is integral and the node potentials at optimality
are exact LP duals. The site potentials, divided by the cost scale, are the
cell weights of a diagram that reproduces the optimal assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gbpd import Diagram, DiagramCell, invert_spd_2x2
from .slic import SlicParams, run_assignment
from .stats import compute_stats

COST_SCALE = 1 << 20


class InfeasibleInstanceError(RuntimeError):
    """Raised when locality leaves some site short of its pixel quota."""

    def __init__(self, starved):
        self.starved = list(starved)
        super().__init__(
            f"instance infeasible: {len(self.starved)} starved site(s): "
            f"{self.starved[:8]}{'...' if len(self.starved) > 8 else ''}"
        )


@dataclass(frozen=True)
class TransportInstance:
    """Pixel-major CSR of admitted arcs with scaled integer costs."""

    num_sites: int
    num_pixels: int
    width: int
    height: int
    supplies: np.ndarray  # int64 (k,), pixels owed to each site
    indptr: np.ndarray  # int64 (N+1,)
    arc_site: np.ndarray  # int32 (nnz,), ascending within each pixel
    arc_cost: np.ndarray  # int64 (nnz,)
    scale: int

    @property
    def num_arcs(self):
        return int(self.arc_site.shape[0])


@dataclass(frozen=True)
class DualSolution:
    """LP duals in scaled integers; properties expose unscaled reals."""

    lam_scaled: np.ndarray  # int64 (k,)
    eta_scaled: np.ndarray  # int64 (N,)
    scale: int

    @property
    def site_potentials(self):
        return self.lam_scaled / self.scale

    @property
    def pixel_potentials(self):
        return self.eta_scaled / self.scale


@dataclass(frozen=True)
class InductionReport:
    violations: int
    ties: int
    worst_margin: float
    arcs_checked: int


def _site_arrays(stats):
    k = len(stats)
    sites = np.empty((k, 2), dtype=np.float64)
    mats = np.empty((k, 3), dtype=np.float64)
    for i, st in enumerate(stats):
        sites[i] = st.center
        inv = invert_spd_2x2(st.covariance)
        mats[i, 0] = inv[0, 0]
        mats[i, 1] = inv[0, 1]
        mats[i, 2] = inv[1, 1]
    return sites, mats


def build_instance(stats, img_dims, dilate=0, scale=COST_SCALE):
    """Admit arc (site, pixel) iff the pixel lies in the site's bbox.

    ``dilate`` widens every bbox by that many pixels on each edge (clipped
    to the image); ``dilate=None`` admits all pairs. Costs are squared
    ellipsoidal distances scaled by ``scale`` and rounded to nearest
    integers. Arcs are generated site-major with raster pixels, then stably
    regrouped pixel-major, so per-pixel arcs come out in ascending site
    order.
    """
    width, height = img_dims
    n = width * height
    k = len(stats)
    if k == 0:
        raise ValueError("stats must be non-empty")
    supplies = np.array([st.area for st in stats], dtype=np.int64)
    if int(supplies.sum()) != n:
        raise ValueError(
            f"supplies sum to {int(supplies.sum())}, expected {n} pixels"
        )
    sites, mats = _site_arrays(stats)

    arc_pix_parts = []
    arc_site_parts = []
    arc_cost_parts = []
    for i, st in enumerate(stats):
        if dilate is None:
            x0, y0, x1, y1 = 0, 0, width - 1, height - 1
        else:
            bx0, by0, bx1, by1 = st.bbox
            x0 = max(bx0 - dilate, 0)
            y0 = max(by0 - dilate, 0)
            x1 = min(bx1 + dilate, width - 1)
            y1 = min(by1 + dilate, height - 1)
        dxs = np.arange(x0, x1 + 1, dtype=np.float64) - sites[i, 0]
        dys = np.arange(y0, y1 + 1, dtype=np.float64) - sites[i, 1]
        a = mats[i, 0]
        b2 = 2.0 * mats[i, 1]
        c = mats[i, 2]
        block = (a * dxs * dxs)[None, :] + b2 * (dxs[None, :] * dys[:, None]) + (
            c * dys * dys
        )[:, None]
        cost = np.rint(block * scale).astype(np.int64).ravel()
        px = np.arange(x0, x1 + 1, dtype=np.int64)
        py = np.arange(y0, y1 + 1, dtype=np.int64)
        pix = (py[:, None] * width + px[None, :]).ravel()
        arc_pix_parts.append(pix)
        arc_site_parts.append(np.full(pix.size, i, dtype=np.int32))
        arc_cost_parts.append(cost)

    arc_pix = np.concatenate(arc_pix_parts)
    arc_site = np.concatenate(arc_site_parts)
    arc_cost = np.concatenate(arc_cost_parts)
    order = np.argsort(arc_pix, kind="stable")
    arc_pix = arc_pix[order]
    arc_site = arc_site[order]
    arc_cost = arc_cost[order]
    counts = np.bincount(arc_pix, minlength=n)
    if counts.min() < 1:
        raise ValueError("some pixel has no admitted site (stats/dims mismatch)")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return TransportInstance(
        num_sites=k,
        num_pixels=n,
        width=width,
        height=height,
        supplies=supplies,
        indptr=indptr,
        arc_site=arc_site,
        arc_cost=arc_cost,
        scale=scale,
    )


def solve_balanced_assignment(inst):
    """Exact integral optimum of the transportation instance.

    Returns (assignment (N,) int32, DualSolution, objective int). The duals
    satisfy complementary slackness exactly in scaled integers; this is
    asserted before returning. Raises InfeasibleInstanceError when locality
    cuts some site off from enough pixels.
    """
    status, assign, pot, objective = kernels.ssp_solve(
        inst.indptr, inst.arc_site, inst.arc_cost, inst.supplies
    )
    if status != 0:
        got = np.bincount(assign[assign >= 0], minlength=inst.num_sites)
        starved = np.flatnonzero(got < inst.supplies)
        raise InfeasibleInstanceError(starved.tolist())

    lam = pot[: inst.num_sites].copy()
    eta = -pot[inst.num_sites :]
    pixels_of_arc = np.repeat(
        np.arange(inst.num_pixels, dtype=np.int64), np.diff(inst.indptr)
    )
    slack = inst.arc_cost - lam[inst.arc_site] - eta[pixels_of_arc]
    if slack.min() < 0:
        raise RuntimeError("dual feasibility violated (solver bug)")
    used = assign[pixels_of_arc] == inst.arc_site
    if np.any(slack[used] != 0):
        raise RuntimeError("complementary slackness violated (solver bug)")
    gap = int(objective) - int(inst.supplies @ lam) - int(eta.sum())
    if gap != 0:
        raise RuntimeError(f"strong duality gap {gap} (solver bug)")
    duals = DualSolution(lam_scaled=lam, eta_scaled=eta, scale=inst.scale)
    return assign, duals, int(objective)


@dataclass
class OptimalResult:
    labels: np.ndarray
    diagram: Diagram
    instance: TransportInstance
    duals: DualSolution
    objective: int
    slic: object
    stats: list
    repair_rounds: int


def optimal_power_slic(
    lab,
    k,
    m=10.0,
    max_iters=10,
    residual_threshold=0.0,
    eps=0.25,
    scale=COST_SCALE,
):
    """Full pipeline: clustering, moments, balanced LP, induced diagram.

    The diagram takes the region centers as sites, inverse covariances as
    matrices, and the site duals (unscaled) as weights; its label map is the
    LP's own optimal assignment. If bbox locality starves a site, bboxes
    are dilated by ceil(h) up to 3 times, then all arcs are admitted.
    """
    lab = np.asarray(lab, dtype=np.float64)
    height, width = lab.shape[:2]
    params = SlicParams(
        k=k, m=m, max_iters=max_iters, residual_threshold=residual_threshold
    )
    slic_res = run_assignment(lab, params)
    stats = compute_stats(slic_res.labels, eps=eps)

    step = int(math.ceil(slic_res.h))
    dilations = [0, step, 2 * step, 3 * step, None]
    inst = None
    solved = None
    rounds = 0
    for rounds, dilate in enumerate(dilations):
        inst = build_instance(stats, (width, height), dilate=dilate, scale=scale)
        try:
            solved = solve_balanced_assignment(inst)
            break
        except InfeasibleInstanceError:
            if dilate is None:
                raise
    assign, duals, objective = solved

    cells = []
    for i, st in enumerate(stats):
        cells.append(
            DiagramCell(
                site=st.center,
                matrix=invert_spd_2x2(st.covariance),
                weight=float(duals.lam_scaled[i]) / scale,
            )
        )
    diagram = Diagram(cells=tuple(cells), ref_width=width, ref_height=height)
    labels = assign.reshape(height, width).astype(np.int32)
    return OptimalResult(
        labels=labels,
        diagram=diagram,
        instance=inst,
        duals=duals,
        objective=objective,
        slic=slic_res,
        stats=stats,
        repair_rounds=rounds,
    )


def verify_induction(assign, diagram, inst, tol=1e-6):
    """Check that the diagram reproduces the assignment up to tol.

    For every pixel and every admitted site, the power value at the
    assigned site must not exceed the competitor's by more than tol
    (unscaled units). Competitors within tol of the assigned value are
    counted as ties, strictly better ones as violations.
    """
    sites, mats, mus = diagram.packed()
    assign = np.asarray(assign).ravel()
    n = inst.num_pixels
    width = inst.width
    ys, xs = np.divmod(np.arange(n, dtype=np.int64), width)
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)

    def _vals(site_idx, px, py):
        dx = px - sites[site_idx, 0]
        dy = py - sites[site_idx, 1]
        a = mats[site_idx, 0]
        b2 = 2.0 * mats[site_idx, 1]
        c = mats[site_idx, 2]
        return (a * dx * dx + b2 * (dx * dy) + c * dy * dy) - mus[site_idx]

    base = _vals(assign, xs, ys)
    pixels_of_arc = np.repeat(np.arange(n, dtype=np.int64), np.diff(inst.indptr))
    arc_vals = _vals(
        inst.arc_site.astype(np.int64), xs[pixels_of_arc], ys[pixels_of_arc]
    )
    margin = arc_vals - base[pixels_of_arc]
    others = inst.arc_site != assign[pixels_of_arc]
    m_others = margin[others]
    violations = int(np.sum(m_others < -tol))
    ties = int(np.sum(np.abs(m_others) <= tol))
    worst = float(m_others.min()) if m_others.size else 0.0
    return InductionReport(
        violations=violations,
        ties=ties,
        worst_margin=worst,
        arcs_checked=int(inst.num_arcs),
    )


def dump_instance(inst, path):
    """Line format: `k N scale` header, supplies, then `site pixel cost`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{inst.num_sites} {inst.num_pixels} {inst.scale}\n")
        fh.write(f"{inst.width} {inst.height}\n")
        fh.write(" ".join(str(int(s)) for s in inst.supplies) + "\n")
        pixels_of_arc = np.repeat(
            np.arange(inst.num_pixels, dtype=np.int64), np.diff(inst.indptr)
        )
        for e in range(inst.num_arcs):
            fh.write(
                f"{int(inst.arc_site[e])} {int(pixels_of_arc[e])} "
                f"{int(inst.arc_cost[e])}\n"
            )


def load_instance(path):
    with open(path, "r", encoding="utf-8") as fh:
        k, n, scale = (int(v) for v in fh.readline().split())
        width, height = (int(v) for v in fh.readline().split())
        supplies = np.array([int(v) for v in fh.readline().split()], dtype=np.int64)
        if supplies.size != k:
            raise ValueError("supply count does not match header")
        rows = [line.split() for line in fh if line.strip()]
    arc_site = np.array([int(r[0]) for r in rows], dtype=np.int32)
    arc_pix = np.array([int(r[1]) for r in rows], dtype=np.int64)
    arc_cost = np.array([int(r[2]) for r in rows], dtype=np.int64)
    order = np.argsort(arc_pix, kind="stable")
    arc_site = arc_site[order]
    arc_pix_sorted = arc_pix[order]
    arc_cost = arc_cost[order]
    counts = np.bincount(arc_pix_sorted, minlength=n)
    if counts.min() < 1:
        raise ValueError("some pixel has no admitted site")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return TransportInstance(
        num_sites=k,
        num_pixels=n,
        width=width,
        height=height,
        supplies=supplies,
        indptr=indptr,
        arc_site=arc_site,
        arc_cost=arc_cost,
        scale=scale,
    )


__all__ = [
    "COST_SCALE",
    "DualSolution",
    "InductionReport",
    "InfeasibleInstanceError",
    "OptimalResult",
    "TransportInstance",
    "build_instance",
    "dump_instance",
    "load_instance",
    "optimal_power_slic",
    "solve_balanced_assignment",
    "verify_induction",
]
