"""Backend dispatch for the performance-critical kernels.

Two interchangeable implementations exist: a Numba-compiled one and a
vectorized NumPy fallback. They are contractually bit-identical; the test
suite enforces this. Selection order:

* ``POWERSLIC_BACKEND=numba`` forces the compiled backend (import error if
  Numba is missing),
* ``POWERSLIC_BACKEND=numpy`` forces the fallback,
* unset or ``auto`` tries Numba first and silently falls back.

``set_backend`` switches at runtime (used by tests and benchmarks).
"""

from __future__ import annotations

import importlib
import os

_VALID = ("numba", "numpy")
_active = None


def _load(name):
    return importlib.import_module(f".{name}_impl", __package__)


def _select():
    global _active
    if _active is None:
        forced = os.environ.get("POWERSLIC_BACKEND", "auto").strip().lower()
        if forced in ("", "auto"):
            try:
                _active = _load("numba")
            except ImportError:
                _active = _load("numpy")
        elif forced in _VALID:
            _active = _load(forced)
        else:
            raise ValueError(
                f"POWERSLIC_BACKEND must be one of {_VALID} or 'auto', got {forced!r}"
            )
    return _active


def backend_name():
    """Name of the active backend ('numba' or 'numpy')."""
    return _select().BACKEND


def set_backend(name):
    """Force a backend by name. Returns the previously active module."""
    global _active
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}")
    prev = _active
    _active = _load(name)
    return prev


def slic_assign_pass(lab, centers, h, m, labels, dists):
    return _select().slic_assign_pass(lab, centers, h, m, labels, dists)


def power_assign_pass(lab, sites, mats, mus, use_offset, h, labels, dists):
    return _select().power_assign_pass(
        lab, sites, mats, mus, use_offset, h, labels, dists
    )


def locate_many(px, py, sites, mats, mus):
    return _select().locate_many(px, py, sites, mats, mus)


def label_components(labels):
    return _select().label_components(labels)


def merge_small(comp, width, comp_label, comp_size, csr_start, csr_pix, thr):
    return _select().merge_small(
        comp, width, comp_label, comp_size, csr_start, csr_pix, thr
    )


def ssp_solve(indptr, arc_site, arc_cost, supplies):
    return _select().ssp_solve(indptr, arc_site, arc_cost, supplies)
