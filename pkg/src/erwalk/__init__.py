"""Elephant random walk on the d-dimensional lattice.

Simulation of the memory-p walk and its center of mass, exact martingale
decomposition tracking, closed-form limit constants for all three memory
regimes, and seeded Monte Carlo verification of the limit theorems
(strong law, quadratic strong law, iterated-logarithm envelope, central
limit theorems, superdiffusive limit), plus planar convex hulls and SVG
figures of the walk.
"""

from .core import (
    ModelParams,
    Regime,
    TrajectoryRecord,
    WalkState,
    classify_regime,
    conditional_mean_increment,
    critical_p,
    direction_vector,
    fundamental_a,
    increment_distribution,
    increment_probabilities,
    run_path,
    step,
)
from .geometry import Hull2D, convex_hull_2d
from .limits import (
    LimitConstants,
    RegimeError,
    clt_contrast_vector,
    limit_constants,
    limit_matrix_V,
    limit_matrix_W,
    variance_ratio,
)
from .martingale import (
    MartingaleTrack,
    b_sequence,
    b_sequence_table,
    cm_decomposition_residual,
    eps_fourth_moment_check,
    gain_sequence,
    gain_sequence_table,
    gamma_asymptotics_check,
    h1_diagnostic,
    innovation,
    innovation_conditional_cov,
    lindeberg_bound,
    log_det_growth,
    normalizer_V,
    normalizer_W,
    qsl_det_inv,
    update_track,
)
from .montecarlo import (
    CltReport,
    EnsembleResult,
    FunctionalEnsemble,
    LilStatistic,
    PathFunctionals,
    QslFunctional,
    SllnReport,
    SuperdiffusiveReport,
    clt_check,
    clt_normalizer,
    ensemble_functionals,
    ks_gaussian_rejection_rate,
    lil_statistic,
    path_functionals,
    qsl_functional,
    resample_step_frequencies,
    run_ensemble,
    slln_check,
    stable_hash,
    superdiffusive_check,
    two_pass_cov,
)
from .svgfig import render_figure

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "Regime", "TrajectoryRecord", "WalkState",
    "classify_regime", "conditional_mean_increment", "critical_p",
    "direction_vector", "fundamental_a", "increment_distribution",
    "increment_probabilities", "run_path", "step",
    "Hull2D", "convex_hull_2d",
    "LimitConstants", "RegimeError", "clt_contrast_vector",
    "limit_constants", "limit_matrix_V", "limit_matrix_W", "variance_ratio",
    "MartingaleTrack", "b_sequence", "b_sequence_table",
    "cm_decomposition_residual", "eps_fourth_moment_check", "gain_sequence",
    "gain_sequence_table", "gamma_asymptotics_check", "h1_diagnostic",
    "innovation", "innovation_conditional_cov", "lindeberg_bound",
    "log_det_growth", "normalizer_V", "normalizer_W", "qsl_det_inv",
    "update_track",
    "CltReport", "EnsembleResult", "FunctionalEnsemble", "LilStatistic",
    "PathFunctionals", "QslFunctional", "SllnReport",
    "SuperdiffusiveReport", "clt_check", "clt_normalizer",
    "ensemble_functionals", "ks_gaussian_rejection_rate", "lil_statistic",
    "path_functionals", "qsl_functional", "resample_step_frequencies",
    "run_ensemble", "slln_check", "stable_hash", "superdiffusive_check",
    "two_pass_cov",
    "render_figure",
    "__version__",
]
