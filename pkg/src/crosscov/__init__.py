"""Noise singular-value spectra of large sample cross-covariance matrices.

Given two datasets with dimensions nx, ny sampled t times, the singular
values of their normalized empirical cross-covariance concentrate on a
deterministic band even when the datasets are truly uncorrelated. This
package computes that null spectrum (density and edges), verifies it by
reproducible Monte Carlo simulation, and flags empirical singular values
that stick out of the noise band.
"""

from .core import (
    EIGENVALUE,
    SINGULAR_VALUE,
    AspectRatios,
    DensityCurve,
    ProblemShape,
    Representation,
    SpectralBand,
    canonical_shape,
    delta_mass,
    delta_mass_from_ratios,
    eig_to_singular,
    singular_to_eig,
    to_ratios,
)
from .edges import (
    DiscriminantPolynomial,
    EdgeEstimate,
    EdgeTopologyError,
    discriminant_coeffs,
    edges,
    edges_both_tiny,
    edges_disparate,
    edges_equal_ratio,
    edges_oversampled_limit,
    edges_tiny_equal,
    find_edges_numeric,
)
from .stieltjes import (
    BranchSelectionError,
    CubicCoefficients,
    cubic_coefficients,
    default_eta,
    density_curve,
    h_density,
    select_stieltjes_root,
    singular_density_on_grid,
    solve_cubic,
    stieltjes_on_grid,
    stieltjes_transform,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleResult,
    MemoryBudgetError,
    StreamKey,
    gram_accumulate,
    nonzero_singular_values,
    run_ensemble,
    sample_gaussian_matrix,
)
from .detection import DetectionReport, detect_outliers, noise_band
from .comparison import ComparisonResult, compare_config, compare_histogram

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "EIGENVALUE",
    "SINGULAR_VALUE",
    "AspectRatios",
    "ProblemShape",
    "DensityCurve",
    "SpectralBand",
    "Representation",
    "to_ratios",
    "canonical_shape",
    "delta_mass",
    "delta_mass_from_ratios",
    "eig_to_singular",
    "singular_to_eig",
    "DiscriminantPolynomial",
    "EdgeEstimate",
    "EdgeTopologyError",
    "discriminant_coeffs",
    "find_edges_numeric",
    "edges",
    "edges_equal_ratio",
    "edges_tiny_equal",
    "edges_disparate",
    "edges_both_tiny",
    "edges_oversampled_limit",
    "CubicCoefficients",
    "BranchSelectionError",
    "cubic_coefficients",
    "solve_cubic",
    "select_stieltjes_root",
    "stieltjes_transform",
    "stieltjes_on_grid",
    "default_eta",
    "h_density",
    "singular_density_on_grid",
    "density_curve",
    "StreamKey",
    "sample_gaussian_matrix",
    "gram_accumulate",
    "nonzero_singular_values",
    "EnsembleConfig",
    "EnsembleResult",
    "MemoryBudgetError",
    "run_ensemble",
    "DetectionReport",
    "noise_band",
    "detect_outliers",
    "ComparisonResult",
    "compare_histogram",
    "compare_config",
]
