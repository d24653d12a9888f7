"""End-to-end segmentation entry points shared by the CLI and the tests.

All three methods start from the same clustering loop; they differ in how
the final partition is produced:

* ``slic``: connectivity post-processing merges undersized components.
* ``power``: a diagram with closed-form weights replaces post-processing.
* ``optimal``: diagram weights come from the balanced assignment LP's duals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gbpd import power_slic_assign
from .image import rgb_to_lab
from .optimal import optimal_power_slic
from .slic import SlicParams, post_process, run_assignment
from .stats import compute_stats

METHODS = ("slic", "power", "optimal")


@dataclass
class Segmentation:
    labels: np.ndarray
    k_out: int
    method: str
    diagram: object = None
    slic: object = None
    stats: list = None
    detail: object = None


def segment_slic(rgb, k, m=10.0, max_iters=10, residual_threshold=0.0):
    lab = rgb_to_lab(rgb)
    params = SlicParams(
        k=k, m=m, max_iters=max_iters, residual_threshold=residual_threshold
    )
    res = run_assignment(lab, params)
    used = int(np.sum(~res.empty))
    labels = post_process(res.labels, used)
    k_out = int(np.unique(labels).size)
    return Segmentation(labels=labels, k_out=k_out, method="slic", slic=res)


def segment_power(
    rgb,
    k,
    m=10.0,
    max_iters=10,
    residual_threshold=0.0,
    power_offset=False,
    eps=0.25,
):
    lab = rgb_to_lab(rgb)
    params = SlicParams(
        k=k, m=m, max_iters=max_iters, residual_threshold=residual_threshold
    )
    res = run_assignment(lab, params)
    stats = compute_stats(res.labels, eps=eps)
    height, width = res.labels.shape
    labels, _, diagram, n_cleaned = power_slic_assign(
        (width, height), stats, res.h, power_offset=power_offset
    )
    return Segmentation(
        labels=labels,
        k_out=len(stats),
        method="power",
        diagram=diagram,
        slic=res,
        stats=stats,
        detail={"cleaned_pixels": n_cleaned},
    )


def segment_optimal(
    rgb,
    k,
    m=10.0,
    max_iters=10,
    residual_threshold=0.0,
    eps=0.25,
):
    lab = rgb_to_lab(rgb)
    opt = optimal_power_slic(
        lab,
        k,
        m=m,
        max_iters=max_iters,
        residual_threshold=residual_threshold,
        eps=eps,
    )
    return Segmentation(
        labels=opt.labels,
        k_out=len(opt.stats),
        method="optimal",
        diagram=opt.diagram,
        slic=opt.slic,
        stats=opt.stats,
        detail=opt,
    )


def segment(rgb, method, k, **kwargs):
    """Dispatch on method name ('slic', 'power', 'optimal')."""
    if method == "slic":
        kwargs.pop("power_offset", None)
        kwargs.pop("eps", None)
        return segment_slic(rgb, k, **kwargs)
    if method == "power":
        return segment_power(rgb, k, **kwargs)
    if method == "optimal":
        kwargs.pop("power_offset", None)
        return segment_optimal(rgb, k, **kwargs)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
