"""Flag empirical singular values that exceed the pure-noise band.

The theory gives the bulk support of the noise spectrum, not the law of the
extreme values, so thresholding uses a configurable multiplicative margin
above the upper edge (default 3%, matching the finite-size fluctuations
seen in ensemble runs at t ~ 1000). Outliers above the band are candidate
signal; this use of the null band is exploratory by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ProblemShape, SpectralBand, to_ratios
from .edges import EdgeEstimate, edges

__all__ = ["DetectionReport", "noise_band", "detect_outliers", "DEFAULT_MARGIN"]

DEFAULT_MARGIN = 0.03


def noise_band(shape: ProblemShape, mode: str = "auto_limit") -> EdgeEstimate:
    """Singular-value noise band for the given dimensions, with regime label."""
    return edges(to_ratios(shape), mode)


@dataclass(frozen=True)
class DetectionReport:
    band: SpectralBand
    scaled: bool
    outliers_above: tuple
    values_below_band: int
    regime: str
    margin: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        threshold = self.band.upper * (1.0 + self.margin)
        for _, value, _ in self.outliers_above:
            if value <= threshold:
                raise ValueError("reported outlier does not exceed the margined edge")

    def to_dict(self) -> dict:
        return {
            "band": {
                "lower": self.band.lower,
                "upper": self.band.upper,
                "variable": self.band.variable,
            },
            "scaled": self.scaled,
            "margin": self.margin,
            "regime": self.regime,
            "outliers_above": [
                {"index": i, "value": v, "ratio": r} for i, v, r in self.outliers_above
            ],
            "values_below_band": self.values_below_band,
        }


def detect_outliers(
    observed,
    shape: ProblemShape,
    margin: float = DEFAULT_MARGIN,
    mode: str = "auto_limit",
    scaled: bool = False,
) -> DetectionReport:
    """Report observed singular values beyond the noise band.

    ``observed`` holds singular values of the normalized cross-covariance
    (unscaled unless ``scaled`` says the sqrt(px py) convention was applied,
    in which case the band is scaled to match). Values above
    upper * (1 + margin) are outliers, sorted by descending ratio to the
    edge; values below lower * (1 - margin) are only counted. An empty
    input yields an empty report.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    values = np.asarray(list(observed), dtype=float)
    if values.ndim not in (0, 1):
        raise ValueError("observed must be a flat sequence of reals")
    values = np.atleast_1d(values)
    if values.size and (np.any(~np.isfinite(values)) or np.any(values < 0)):
        raise ValueError("observed values must be finite and nonnegative")

    estimate = noise_band(shape, mode)
    band = estimate.band
    if scaled:
        ratios = to_ratios(shape)
        band = band.scaled_by(float(np.sqrt(ratios.px * ratios.py)))

    upper_cut = band.upper * (1.0 + margin)
    lower_cut = band.lower * (1.0 - margin)

    flagged = [
        (int(i), float(v), float(v / band.upper) if band.upper > 0 else float("inf"))
        for i, v in enumerate(values)
        if v > upper_cut
    ]
    flagged.sort(key=lambda item: -item[2])
    below = int(np.count_nonzero(values < lower_cut)) if band.lower > 0 else 0

    return DetectionReport(
        band=band,
        scaled=scaled,
        outliers_above=tuple(flagged),
        values_below_band=below,
        regime=estimate.regime,
        margin=float(margin),
        meta={"n_observed": int(values.size)},
    )
