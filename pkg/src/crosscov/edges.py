"""Support boundaries of the noise singular-value spectrum.

The limiting Stieltjes transform of the t-by-t product representation obeys
a cubic whose discriminant, expanded as a polynomial in the spectral
variable z, vanishes exactly at the band edges. This module computes the
edges two independent ways: numerically, from the real roots of that
quintic, and in closed form, through limit formulas valid in specific
sampling regimes. A dispatcher picks the applicable closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import EIGENVALUE, SINGULAR_VALUE, AspectRatios, SpectralBand

__all__ = [
    "DiscriminantPolynomial",
    "EdgeTopologyError",
    "EdgeEstimate",
    "discriminant_coeffs",
    "find_edges_numeric",
    "edges_equal_ratio",
    "edges_tiny_equal",
    "edges_disparate",
    "edges_both_tiny",
    "edges_oversampled_limit",
    "edges",
    "REGIME_EQUAL_RATIO",
    "REGIME_TINY_EQUAL",
    "REGIME_DISPARATE",
    "REGIME_BOTH_TINY",
    "REGIME_OVERSAMPLED",
    "REGIME_NUMERIC",
]

REGIME_EQUAL_RATIO = "equal_ratio"
REGIME_TINY_EQUAL = "tiny_equal"
REGIME_DISPARATE = "disparate"
REGIME_BOTH_TINY = "both_tiny"
REGIME_OVERSAMPLED = "oversampled"
REGIME_NUMERIC = "numeric"

# Advisory validity thresholds for the closed-form limit formulas.
TINY_RATIO = 0.1
DISPARATE_RATIO = 0.1
OVERSAMPLED_MIN = 10.0

_SCAN_POINTS = 4096
_BISECT_REL_TOL = 1e-12


class EdgeTopologyError(RuntimeError):
    """The discriminant's positive real roots do not describe a single band."""


@dataclass(frozen=True)
class DiscriminantPolynomial:
    """Coefficients (z^0 ... z^5) of the cubic's discriminant in z.

    The z^0 and z^1 coefficients vanish identically, so z = 0 is always a
    double root; ``reduced()`` strips it. The leading coefficient equals
    4 (px py)^4 > 0.
    """

    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        if len(c) != 6:
            raise ValueError("expected six coefficients (powers z^0 .. z^5)")
        if c[5] <= 0.0:
            raise ValueError("leading coefficient must be positive")
        object.__setattr__(self, "coefficients", c)

    def __call__(self, z):
        """Evaluate the full quintic by Horner's scheme (vectorized in z)."""
        z = np.asarray(z, dtype=float)
        acc = np.zeros_like(z)
        for c in reversed(self.coefficients):
            acc = acc * z + c
        return acc

    def reduced(self):
        """Coefficients (z^0 .. z^3) of D(z) / z^2."""
        return self.coefficients[2:]


def discriminant_coeffs(ratios: AspectRatios) -> DiscriminantPolynomial:
    """Expand D = b^2 c^2 - 4 a c^3 - 4 b^3 d - 27 a^2 d^2 + 18 a b c d in z.

    With a = a2 z^2, b = b1 z, c = c0 + c1 z and constant d, the expansion
    collects to exactly the powers z^2 .. z^5.
    """
    px, py = ratios.px, ratios.py
    a2 = px * py
    b1 = py * (1.0 - px) + px * (1.0 - py)
    c0 = (1.0 - px) * (1.0 - py)
    c1 = -px * py
    d0 = px * py
    k2 = b1**2 * c0**2 - 4.0 * a2 * c0**3
    k3 = 2.0 * b1**2 * c0 * c1 - 12.0 * a2 * c0**2 * c1 - 4.0 * b1**3 * d0 + 18.0 * a2 * b1 * c0 * d0
    k4 = b1**2 * c1**2 - 12.0 * a2 * c0 * c1**2 - 27.0 * a2**2 * d0**2 + 18.0 * a2 * b1 * c1 * d0
    k5 = -4.0 * a2 * c1**3
    return DiscriminantPolynomial((0.0, 0.0, k2, k3, k4, k5))


def _cubic_value(k, z):
    k2, k3, k4, k5 = k
    return ((k5 * z + k4) * z + k3) * z + k2


def _bisect(k, lo, hi, f_lo):
    # Sign-preserving bisection of the reduced cubic on a bracketing interval.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= _BISECT_REL_TOL * mid:
            break
        f_mid = _cubic_value(k, mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=256)
def _numeric_band(px: float, py: float) -> tuple:
    ratios = AspectRatios(px, py)
    k = discriminant_coeffs(ratios).reduced()
    scale = 1.0 / (px * py)
    # The scan window must contain the band: upper edge obeys
    # lambda_+ * px * py <= 100 (the band scale law squared), with headroom.
    z_lo = 1e-9 * scale
    z_hi = 200.0 * scale
    grid = np.geomspace(z_lo, z_hi, _SCAN_POINTS)
    vals = ((k[3] * grid + k[2]) * grid + k[1]) * grid + k[0]
    neg = vals < 0.0
    flips = np.nonzero(neg[1:] != neg[:-1])[0]

    roots = []
    for i in flips:
        roots.append(_bisect(k, grid[i], grid[i + 1], vals[i]))

    if len(flips) == 2 and not neg[0]:
        return roots[0], roots[1]
    if len(flips) == 1 and neg[0]:
        # Negative discriminant all the way down to the origin: hard edge.
        return 0.0, roots[0]
    raise EdgeTopologyError(
        f"unexpected discriminant sign pattern for ratios ({px}, {py}): "
        f"{len(flips)} sign changes, starts {'negative' if neg[0] else 'positive'}"
    )


def find_edges_numeric(ratios: AspectRatios) -> SpectralBand:
    """Eigenvalue-variable band from the zeros of the discriminant.

    Strategy: factor out the double root at the origin, locate sign changes
    of the remaining cubic on a log-spaced scan, and refine each bracket by
    bisection. The band is the interval where the discriminant is negative;
    when that interval reaches the scan's lower end the lower edge is zero
    (the well-sampled regimes). Any other sign topology is an error.
    """
    lo, hi = _numeric_band(ratios.px, ratios.py)
    return SpectralBand(lo, hi, EIGENVALUE)


def edges_equal_ratio(p: float) -> SpectralBand:
    """Exact singular-value edges for px = py = p, any p > 0.

    The reduced discriminant is a quadratic whose roots are
    z = (8 p^2 + 20 p^3 - p^4 +- p^(5/2) (8 + p)^(3/2)) / (8 p^4);
    the minus branch is negative for p >= 1, where the lower edge is 0.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    p = float(p)
    base = 8.0 * p**2 + 20.0 * p**3 - p**4
    spread = p**2.5 * (8.0 + p) ** 1.5
    denom = 8.0 * p**4
    z_plus = (base + spread) / denom
    z_minus = (base - spread) / denom
    lower = math.sqrt(z_minus) if z_minus > 0.0 else 0.0
    return SpectralBand(lower, math.sqrt(z_plus), SINGULAR_VALUE)


def edges_both_tiny(px: float, py: float) -> SpectralBand:
    """Severely undersampled limit px, py << 1: gamma = (1 +- sqrt(px+py)) / sqrt(px py)."""
    if px <= 0 or py <= 0:
        raise ValueError("ratios must be positive")
    if max(px, py) >= TINY_RATIO:
        warnings.warn(
            f"both-tiny edge formula used outside its advisory range "
            f"max(px, py) < {TINY_RATIO}: ({px}, {py})",
            RuntimeWarning,
            stacklevel=2,
        )
    root = math.sqrt(px + py)
    scale = math.sqrt(px * py)
    return SpectralBand(max(0.0, (1.0 - root) / scale), (1.0 + root) / scale, SINGULAR_VALUE)


def edges_tiny_equal(p: float) -> SpectralBand:
    """Equal tiny ratios p << 1: gamma = (1 +- sqrt(2 p)) / p.

    Identical to :func:`edges_both_tiny` at px = py = p; delegating keeps the
    two formulas bit-for-bit consistent.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    return edges_both_tiny(p, p)


def edges_disparate(px: float, py: float) -> SpectralBand:
    """One dataset far higher-dimensional, py << px: gamma = sqrt((1 + px +- 2 sqrt(px)) / (px py)).

    Valid both for px <= 1 and px > 1; for px > 1 the minus branch gives the
    strictly positive lower edge (sqrt(px) - 1) / sqrt(px py).
    """
    if px <= 0 or py <= 0:
        raise ValueError("ratios must be positive")
    if py / px >= DISPARATE_RATIO:
        warnings.warn(
            f"disparate edge formula used outside its advisory range "
            f"py/px < {DISPARATE_RATIO}: ({px}, {py})",
            RuntimeWarning,
            stacklevel=2,
        )
    s = math.sqrt(px)
    scale = math.sqrt(px * py)
    upper = (1.0 + s) / scale
    lower = abs(1.0 - s) / scale
    return SpectralBand(lower, upper, SINGULAR_VALUE)


def edges_oversampled_limit(p: float) -> SpectralBand:
    """Heavily oversampled equal ratios p >> 1: gamma_- = 0, gamma_+ = 2 / sqrt(p).

    Leading term of the exact equal-ratio edge: the quadratic factor of the
    discriminant has root sum -> -1/4 and root product -> -1/p, so
    lambda_+ = 4/p + 4/p^2 + O(p^-3) and the relative error of 2/sqrt(p)
    decays like 1/(2p).
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if p <= OVERSAMPLED_MIN:
        warnings.warn(
            f"oversampled edge formula used outside its advisory range p > {OVERSAMPLED_MIN}: {p}",
            RuntimeWarning,
            stacklevel=2,
        )
    return SpectralBand(0.0, 2.0 / math.sqrt(p), SINGULAR_VALUE)


@dataclass(frozen=True)
class EdgeEstimate:
    band: SpectralBand
    regime: str


def edges(ratios: AspectRatios, mode: str = "numeric") -> EdgeEstimate:
    """Singular-value band plus a label naming how it was obtained.

    ``numeric`` always solves the discriminant. ``auto_limit`` prefers the
    exact equal-ratio formula when px == py, then the closed-form limits in
    their advisory ranges, and falls back to the numeric solver otherwise.
    """
    if mode == "numeric":
        return EdgeEstimate(find_edges_numeric(ratios).to_singular(), REGIME_NUMERIC)
    if mode != "auto_limit":
        raise ValueError(f"unknown edges mode {mode!r}")

    px, py = ratios.px, ratios.py
    if px == py:
        return EdgeEstimate(edges_equal_ratio(px), REGIME_EQUAL_RATIO)
    lo, hi = min(px, py), max(px, py)
    if lo / hi < DISPARATE_RATIO:
        return EdgeEstimate(edges_disparate(hi, lo), REGIME_DISPARATE)
    if hi < TINY_RATIO:
        return EdgeEstimate(edges_both_tiny(px, py), REGIME_BOTH_TINY)
    return EdgeEstimate(find_edges_numeric(ratios).to_singular(), REGIME_NUMERIC)
