"""Smooth morphological skeletons and skeleton-prior mask refinement."""

from .morph_core import (
    StructuringElement,
    classic_skeleton,
    dilate,
    erode,
    erode_n,
    make_element,
)
from .smooth_morph import (
    SkeletonTape,
    SmoothParams,
    dilation_kernel,
    project_unit,
    smooth_dilate,
    smooth_erode,
    smooth_skeleton,
    smooth_skeleton_vjp,
)
from .solver import SolverConfig, SolverState, refine
from .metrics import MetricsReport, evaluate

__version__ = "0.1.0"
