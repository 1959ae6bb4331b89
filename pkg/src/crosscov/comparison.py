"""Quantitative agreement between the theory density and an ensemble histogram."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import AspectRatios, DensityCurve, Representation, _trapezoid, to_ratios
from .ensemble import EnsembleConfig, EnsembleResult, run_ensemble
from .edges import find_edges_numeric
from .stieltjes import singular_density_on_grid

__all__ = ["ComparisonResult", "bin_averaged_theory", "compare_histogram", "compare_config"]

_SUBDIVISIONS = 8
DEFAULT_EDGE_MARGIN = 0.03


def bin_averaged_theory(
    ratios: AspectRatios,
    bin_edges: np.ndarray,
    scaled: bool = False,
    eta: float | None = None,
) -> np.ndarray:
    """Theory singular-value density averaged over each histogram bin.

    Evaluates the curve on a fine subgrid and integrates by trapezoid per
    bin, which keeps the comparison honest where the density varies fast
    (band edges) without smoothing the histogram itself.
    """
    bin_edges = np.asarray(bin_edges, dtype=float)
    scale = math.sqrt(ratios.px * ratios.py) if scaled else 1.0
    fine = np.linspace(bin_edges[:-1], bin_edges[1:], _SUBDIVISIONS + 1, axis=1)
    all_x = np.unique(fine.ravel())
    rho_all = singular_density_on_grid(
        ratios, np.clip(all_x / scale, 0.0, None), eta, Representation.CTC
    ) / scale
    averages = np.empty(bin_edges.size - 1)
    for i in range(averages.size):
        xs = fine[i]
        ys = rho_all[np.searchsorted(all_x, xs)]
        averages[i] = _trapezoid(ys, xs) / (xs[-1] - xs[0])
    return averages


@dataclass(frozen=True)
class ComparisonResult:
    l1_distance: float
    lower_edge: float
    upper_edge: float
    empirical_min: float
    empirical_max: float
    mean_square: float
    mean_square_theory: float
    edge_margin: float
    tol: float
    l1_ok: bool
    edges_ok: bool
    passed: bool
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "l1_distance": self.l1_distance,
            "tol": self.tol,
            "band": {"lower": self.lower_edge, "upper": self.upper_edge},
            "empirical": {"min": self.empirical_min, "max": self.empirical_max},
            "mean_square": self.mean_square,
            "mean_square_theory": self.mean_square_theory,
            "edge_margin": self.edge_margin,
            "l1_ok": self.l1_ok,
            "edges_ok": self.edges_ok,
            "passed": self.passed,
        }


def compare_histogram(
    result: EnsembleResult,
    ratios: AspectRatios,
    tol: float = 0.05,
    edge_margin: float = DEFAULT_EDGE_MARGIN,
    theory: np.ndarray | None = None,
) -> ComparisonResult:
    """L1 distance, edge containment, and first-moment gap for one ensemble.

    ``theory`` overrides the bin-averaged theory densities (used by negative
    controls); by default it is computed from ``ratios``. The verdict
    requires L1 < tol and the empirical extremes inside the margined band.
    """
    hist = result.histogram
    bin_edges = np.asarray(hist.meta["bin_edges"], dtype=float)
    bin_density = np.asarray(hist.meta["bin_density"], dtype=float)
    if theory is None:
        theory = bin_averaged_theory(ratios, bin_edges, scaled=hist.scaled)
    widths = np.diff(bin_edges)
    l1 = float(np.sum(np.abs(bin_density - theory) * widths))

    canon = ratios.canonical()
    scale = math.sqrt(ratios.px * ratios.py) if hist.scaled else 1.0
    band = find_edges_numeric(canon).to_singular().scaled_by(scale)

    lower_ok = result.empirical_min >= (1.0 - edge_margin) * band.lower
    upper_ok = result.empirical_max <= (1.0 + edge_margin) * band.upper
    edges_ok = bool(lower_ok and upper_ok)

    # Mean squared singular value against its closed-form expectation
    # max(1, p_hi) / (px py), in the histogram's scaling convention.
    counts = np.asarray(hist.meta["counts"], dtype=float)
    centers = 0.5 * (bin_edges[:-1] + bin_edges[1:])
    total = counts.sum()
    mean_sq = float((counts * centers**2).sum() / total) if total else math.nan
    mean_sq_theory = max(1.0, canon.px) / (canon.px * canon.py) * scale**2

    l1_ok = bool(l1 < tol)
    return ComparisonResult(
        l1_distance=l1,
        lower_edge=band.lower,
        upper_edge=band.upper,
        empirical_min=result.empirical_min,
        empirical_max=result.empirical_max,
        mean_square=mean_sq,
        mean_square_theory=mean_sq_theory,
        edge_margin=edge_margin,
        tol=tol,
        l1_ok=l1_ok,
        edges_ok=edges_ok,
        passed=l1_ok and edges_ok,
        meta={"scaled": hist.scaled, "realized": result.realized},
    )


def compare_config(
    config: EnsembleConfig,
    tol: float = 0.05,
    edge_margin: float = DEFAULT_EDGE_MARGIN,
    workers: int | None = None,
) -> tuple[ComparisonResult, EnsembleResult]:
    """Run the ensemble for ``config`` and compare it against the theory."""
    result = run_ensemble(config, workers)
    ratios = to_ratios(config.shape)
    return compare_histogram(result, ratios, tol, edge_margin), result
