"""Boundary recall, boundary precision, and compactness.

A boundary pixel is one with a 4-neighbor of a different label or on the
image border. Recall and precision use a Chebyshev-distance tolerance ring
(default 2): a ground-truth boundary pixel is detected if any segmentation
boundary pixel lies in its ring, and a segmentation boundary pixel is a
false positive if no ground-truth boundary pixel lies in its ring.
Compactness compares each superpixel to a disc via Q = 4*pi*area/boundary^2
and averages the quotients weighted by area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricsResult:
    br: float
    bp: float
    co: float
    tp: int
    fp: int
    fn: int
    per_superpixel: list


def extract_boundaries(labels):
    """Boolean map of boundary pixels (4-neighbor label change or border)."""
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("label map must be 2-D")
    if labels.size and labels.min() < 0:
        raise ValueError("label map contains unassigned pixels")
    bits = np.zeros(labels.shape, dtype=bool)
    bits[0, :] = True
    bits[-1, :] = True
    bits[:, 0] = True
    bits[:, -1] = True
    hdiff = labels[:, :-1] != labels[:, 1:]
    bits[:, :-1] |= hdiff
    bits[:, 1:] |= hdiff
    vdiff = labels[:-1, :] != labels[1:, :]
    bits[:-1, :] |= vdiff
    bits[1:, :] |= vdiff
    return bits


def _cheb_dilate(bits, tol):
    """True wherever any true bit lies within Chebyshev distance tol."""
    out = bits.copy()
    height, width = bits.shape
    for dy in range(-tol, tol + 1):
        for dx in range(-tol, tol + 1):
            if dx == 0 and dy == 0:
                continue
            dst = out[
                max(0, dy) : height + min(0, dy), max(0, dx) : width + min(0, dx)
            ]
            src = bits[
                max(0, -dy) : height + min(0, -dy),
                max(0, -dx) : width + min(0, -dx),
            ]
            dst |= src
    return out


def boundary_recall_precision(seg, gt, tol=2):
    """(br, bp, tp, fp, fn) of segmentation boundaries against ground truth.

    ``seg`` and ``gt`` are boolean boundary maps of equal shape. Empty
    ground truth gives br = 1; an empty segmentation gives bp = 1.
    """
    seg = np.asarray(seg, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if seg.shape != gt.shape:
        raise ValueError(f"shape mismatch: seg {seg.shape} vs gt {gt.shape}")
    if tol < 0:
        raise ValueError("tolerance must be >= 0")
    near_seg = _cheb_dilate(seg, tol)
    near_gt = _cheb_dilate(gt, tol)
    tp = int(np.sum(gt & near_seg))
    fn = int(np.sum(gt)) - tp
    fp = int(np.sum(seg & ~near_gt))
    br = tp / (tp + fn) if tp + fn > 0 else 1.0
    bp = tp / (tp + fp) if tp + fp > 0 else 1.0
    return br, bp, tp, fp, fn


def compactness(labels):
    """(co, per_superpixel) with rows (label, area, boundary_count, Q).

    Q can exceed 1 for tiny regions because boundary pixels, not edge
    segments, are counted; values are reported unclamped.
    """
    labels = np.asarray(labels)
    bits = extract_boundaries(labels)
    flat = labels.ravel()
    n = flat.size
    nbins = int(flat.max()) + 1
    kappa = np.bincount(flat, minlength=nbins)
    bcount = np.bincount(flat[bits.ravel()], minlength=nbins)
    per = []
    co = 0.0
    for lbl in np.flatnonzero(kappa > 0):
        q = 4.0 * math.pi * kappa[lbl] / float(bcount[lbl] * bcount[lbl])
        per.append((int(lbl), int(kappa[lbl]), int(bcount[lbl]), float(q)))
        co += q * kappa[lbl] / n
    return float(co), per


def evaluate_single(labels, gt_bits, tol=2):
    """All three metrics of a label map against one boundary map."""
    seg_bits = extract_boundaries(labels)
    br, bp, tp, fp, fn = boundary_recall_precision(seg_bits, gt_bits, tol)
    co, per = compactness(labels)
    return MetricsResult(br=br, bp=bp, co=co, tp=tp, fp=fp, fn=fn, per_superpixel=per)


def score_segmentation(labels, gt_maps, tol=2):
    """(mean br, mean bp, co, per-gt results) over several annotations.

    Each ground-truth map is scored independently; br and bp are their
    arithmetic means. With no ground truth, br and bp are NaN and only
    compactness is meaningful.
    """
    co, per = compactness(labels)
    results = []
    seg_bits = extract_boundaries(labels)
    for gt in gt_maps:
        br, bp, tp, fp, fn = boundary_recall_precision(seg_bits, gt, tol)
        results.append(
            MetricsResult(
                br=br, bp=bp, co=co, tp=tp, fp=fp, fn=fn, per_superpixel=per
            )
        )
    if results:
        br_mean = sum(r.br for r in results) / len(results)
        bp_mean = sum(r.bp for r in results) / len(results)
    else:
        br_mean = math.nan
        bp_mean = math.nan
    return br_mean, bp_mean, co, results
