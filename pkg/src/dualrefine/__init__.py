"""Uncertainty-guided iterative stereo refinement with local scale-shift
alignment, plus the synthetic harness and metrics used to exercise it."""

from .alignment import fit_scale_shift, knn_neighbors, lu_kss
from .cognition import toy_cognition_features, ugsca
from .errors import (
    DualRefineError,
    EmptyDomainError,
    FormatError,
    RangeError,
    SamplingError,
    ShapeError,
    SizeError,
    SpecError,
)
from .evalkit import MetricsReport, compute_metrics
from .field_core import DisparityField, FeatureMap, Grid2D, UncertaintyField
from .fileio import read_featc, read_pfm, write_featc, write_pfm
from .matching import ambiguity_uncertainty, build_cost_volume, soft_argmin_disparity, toy_featurize
from .objectives import grad_check, total_loss
from .refinement import RefineConfig, run_refinement
from .scene import SceneSpec, default_suite, gen_scene
from .uncertainty import masking_sweep, select_anchors, uncertainty_loss

__version__ = "0.1.0"
