"""Illumination restoration by an elliptic subproblem and a log-potential update."""

__version__ = "0.1.0"

from .elliptic import (
    DivergenceError,
    EllipticMode,
    EllipticProblem,
    SolveReport,
    SolverConfig,
    assemble_dense,
    auto_omega,
    estimate_lambda_max,
    gershgorin_bound,
    solve_direct,
    solve_richardson,
)
from .grid import BoundaryRule, GridField, divergence, gradient, laplacian
from .imageio import ShadingKind, ShadingSpec, apply_shading, load_luminance, save_gray
from .metrics import MetricReport, metric_report, mse, psnr, ssim
from .restore import (
    RestoreError,
    RestoreParams,
    RestoreTrace,
    UpdateRule,
    cost_field,
    log_potential,
    momentum,
    restore,
    update_illumination,
)
