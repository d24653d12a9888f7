"""Superpixel segmentation via anisotropic power diagrams.

Three methods share one clustering front end: plain SLIC with connectivity
post-processing, Power-SLIC (diagram with closed-form weights), and Optimal
Power-SLIC (diagram weights from the duals of a balanced assignment LP).
"""

from .gbpd import (
    Diagram,
    DiagramCell,
    cell_power,
    diagram_from_json,
    diagram_to_json,
    heuristic_mu,
    load_diagram,
    locate,
    mahalanobis_sq,
    power_slic_assign,
    rasterize,
    rescale,
    save_diagram,
)
from .image import NoiseSpec, add_gaussian_noise, rgb_to_lab
from .kernels import backend_name, set_backend
from .metrics import (
    MetricsResult,
    boundary_recall_precision,
    compactness,
    extract_boundaries,
    score_segmentation,
)
from .optimal import (
    DualSolution,
    InfeasibleInstanceError,
    TransportInstance,
    build_instance,
    optimal_power_slic,
    solve_balanced_assignment,
    verify_induction,
)
from .pipeline import Segmentation, segment, segment_optimal, segment_power, segment_slic
from .slic import (
    SlicParams,
    SlicResult,
    connected_components,
    init_centers,
    post_process,
    run_assignment,
)
from .stats import ComponentStats, compute_stats, regularize_covariance

__version__ = "0.1.0"

__all__ = [
    "ComponentStats",
    "Diagram",
    "DiagramCell",
    "DualSolution",
    "InfeasibleInstanceError",
    "MetricsResult",
    "NoiseSpec",
    "Segmentation",
    "SlicParams",
    "SlicResult",
    "TransportInstance",
    "add_gaussian_noise",
    "backend_name",
    "boundary_recall_precision",
    "build_instance",
    "cell_power",
    "compactness",
    "compute_stats",
    "connected_components",
    "diagram_from_json",
    "diagram_to_json",
    "extract_boundaries",
    "heuristic_mu",
    "init_centers",
    "load_diagram",
    "locate",
    "mahalanobis_sq",
    "optimal_power_slic",
    "post_process",
    "power_slic_assign",
    "rasterize",
    "regularize_covariance",
    "rescale",
    "rgb_to_lab",
    "run_assignment",
    "save_diagram",
    "score_segmentation",
    "segment",
    "segment_optimal",
    "segment_power",
    "segment_slic",
    "set_backend",
    "solve_balanced_assignment",
    "verify_induction",
]
