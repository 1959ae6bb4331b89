"""Domain types and shared transforms for cross-covariance noise spectra.

The model: two data matrices with ``t`` rows (samples) and ``nx``/``ny``
columns of i.i.d. centered Gaussians. Everything downstream is phrased in
terms of the aspect ratios ``px = t/nx`` and ``py = t/ny``; the spectrum of
the normalized cross-covariance depends on the dimensions only through them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AspectRatios",
    "ProblemShape",
    "DensityCurve",
    "SpectralBand",
    "Representation",
    "EIGENVALUE",
    "SINGULAR_VALUE",
    "to_ratios",
    "canonical_shape",
    "eig_to_singular",
    "singular_to_eig",
    "delta_mass",
    "delta_mass_from_ratios",
    "trapezoid_mass",
]

# Variable tags for DensityCurve / SpectralBand.
EIGENVALUE = "eigenvalue"
SINGULAR_VALUE = "singular_value"
_VARIABLES = (EIGENVALUE, SINGULAR_VALUE)

# np.trapz was renamed in numpy 2.0
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class Representation(str, enum.Enum):
    """Which square matrix carries the spectrum.

    CTC: the nx-by-nx Gram of the cross-covariance (smaller data dimension).
    CCT: the ny-by-ny Gram (larger data dimension, extra zero modes).
    TT:  the t-by-t product of the two per-dataset sample Grams; shares the
         nonzero eigenvalues of the other two.
    """

    CTC = "ctc"
    CCT = "cct"
    TT = "tt"


@dataclass(frozen=True)
class AspectRatios:
    """Sampling ratios px = t/nx and py = t/ny (both strictly positive)."""

    px: float
    py: float

    def __post_init__(self):
        for name in ("px", "py"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a finite positive real, got {v!r}")
        object.__setattr__(self, "px", float(self.px))
        object.__setattr__(self, "py", float(self.py))

    @property
    def qx(self) -> float:
        return 1.0 / self.px

    @property
    def qy(self) -> float:
        return 1.0 / self.py

    def swapped(self) -> "AspectRatios":
        return AspectRatios(self.py, self.px)

    def canonical(self) -> "AspectRatios":
        """Orientation with px >= py, i.e. the first dataset has fewer columns."""
        return self if self.px >= self.py else self.swapped()


@dataclass(frozen=True)
class ProblemShape:
    """Integer problem dimensions plus per-dataset noise scales."""

    t: int
    nx: int
    ny: int
    sigma_x: float = 1.0
    sigma_y: float = 1.0

    def __post_init__(self):
        for name in ("t", "nx", "ny"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and v >= 1):
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("sigma_x", "sigma_y"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v!r}")
            object.__setattr__(self, name, v)


def to_ratios(shape: ProblemShape) -> AspectRatios:
    """Aspect ratios (px, py) = (t/nx, t/ny) as exact float quotients."""
    return AspectRatios(shape.t / shape.nx, shape.t / shape.ny)


def canonical_shape(shape: ProblemShape) -> tuple[ProblemShape, bool]:
    """Return (shape with nx <= ny, swapped flag).

    The nonzero singular values do not depend on the orientation, so the
    two datasets may be exchanged freely; bookkeeping formulas below assume
    nx <= ny and callers record the swap in their metadata.
    """
    if shape.nx <= shape.ny:
        return shape, False
    return (
        ProblemShape(shape.t, shape.ny, shape.nx, shape.sigma_y, shape.sigma_x),
        True,
    )


@dataclass(frozen=True)
class SpectralBand:
    """Support interval [lower, upper] of the nonzero spectral density."""

    lower: float
    upper: float
    variable: str = SINGULAR_VALUE

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 <= lo <= hi):
            raise ValueError(f"need 0 <= lower <= upper, got [{lo}, {hi}]")
        if self.variable not in _VARIABLES:
            raise ValueError(f"unknown variable tag {self.variable!r}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def to_singular(self) -> "SpectralBand":
        if self.variable == SINGULAR_VALUE:
            return self
        return SpectralBand(math.sqrt(self.lower), math.sqrt(self.upper), SINGULAR_VALUE)

    def to_eigenvalue(self) -> "SpectralBand":
        if self.variable == EIGENVALUE:
            return self
        return SpectralBand(self.lower**2, self.upper**2, EIGENVALUE)

    def scaled_by(self, factor: float) -> "SpectralBand":
        return SpectralBand(self.lower * factor, self.upper * factor, self.variable)

    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class DensityCurve:
    """Sampled density over a strictly increasing nonnegative abscissa.

    The point mass at zero (rank-deficit zero modes) is bookkept in
    ``zero_mass`` rather than as a histogram spike, so the continuous part
    can be integrated and normalized cleanly.
    """

    abscissa: np.ndarray
    density: np.ndarray
    zero_mass: float = 0.0
    variable: str = SINGULAR_VALUE
    scaled: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.abscissa, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if x.ndim != 1 or d.shape != x.shape:
            raise ValueError("abscissa and density must be 1-d arrays of equal length")
        if x.size < 2:
            raise ValueError("a density curve needs at least two points")
        if x[0] < 0.0:
            raise ValueError("abscissa values must be nonnegative")
        if not np.all(np.diff(x) > 0.0):
            raise ValueError("abscissa must be strictly increasing")
        if np.any(d < 0.0):
            raise ValueError("density values must be nonnegative")
        if not (0.0 <= self.zero_mass <= 1.0):
            raise ValueError(f"zero_mass must lie in [0, 1], got {self.zero_mass}")
        if self.variable not in _VARIABLES:
            raise ValueError(f"unknown variable tag {self.variable!r}")
        x.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "density", d)
        object.__setattr__(self, "zero_mass", float(self.zero_mass))

    def continuous_mass(self) -> float:
        """Trapezoid integral of the stored density over the stored grid."""
        return float(_trapezoid(self.density, self.abscissa))

    def total_mass(self) -> float:
        return self.continuous_mass() + self.zero_mass


def trapezoid_mass(curve: DensityCurve) -> float:
    return curve.total_mass()


def eig_to_singular(curve: DensityCurve) -> DensityCurve:
    """Change of variables gamma = sqrt(lambda): rho(gamma) = 2 gamma rho(lambda).

    Total mass (continuous plus zero) is preserved up to the quadrature error
    of the stored grid.
    """
    if curve.variable != EIGENVALUE:
        raise ValueError("eig_to_singular expects an eigenvalue-variable curve")
    gamma = np.sqrt(curve.abscissa)
    density = 2.0 * gamma * curve.density
    return DensityCurve(gamma, density, curve.zero_mass, SINGULAR_VALUE,
                        curve.scaled, dict(curve.meta))


def singular_to_eig(curve: DensityCurve) -> DensityCurve:
    """Inverse of :func:`eig_to_singular`; requires a strictly positive abscissa."""
    if curve.variable != SINGULAR_VALUE:
        raise ValueError("singular_to_eig expects a singular-value-variable curve")
    if curve.abscissa[0] <= 0.0:
        raise ValueError("inverse transform needs abscissa > 0 (Jacobian 1/(2 gamma))")
    lam = curve.abscissa**2
    density = curve.density / (2.0 * curve.abscissa)
    return DensityCurve(lam, density, curve.zero_mass, EIGENVALUE,
                        curve.scaled, dict(curve.meta))


def delta_mass(shape: ProblemShape, representation: Representation | str) -> float:
    """Weight of the point mass at zero for the chosen representation.

    Counts the structural zero eigenvalues forced by rank: with nx <= ny the
    cross-covariance has min(nx, t) nonzero singular values, so each square
    representation of dimension m carries (m - min(nx, t)) exact zeros.
    Shapes with nx > ny are silently reoriented first.
    """
    rep = Representation(representation)
    s, _ = canonical_shape(shape)
    r = min(s.nx, s.t)
    dim = {Representation.CTC: s.nx, Representation.CCT: s.ny, Representation.TT: s.t}[rep]
    return 1.0 - r / dim


def delta_mass_from_ratios(ratios: AspectRatios, representation: Representation | str) -> float:
    """Large-size limit of :func:`delta_mass` expressed through aspect ratios."""
    rep = Representation(representation)
    r = ratios.canonical()
    p_hi, p_lo = r.px, r.py  # p_hi belongs to the dataset with fewer columns
    frac = min(1.0, 1.0 / p_hi)  # min(nx, t) / t
    if rep is Representation.CTC:
        return 1.0 - frac * p_hi
    if rep is Representation.CCT:
        return 1.0 - frac * p_lo
    return 1.0 - frac
