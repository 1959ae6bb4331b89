"""Cubic equation for the limiting Stieltjes transform and the density it implies.

For the t-by-t product representation of the squared cross-covariance the
limiting Stieltjes transform h(z) satisfies

    a h^3 + b h^2 + c h + d = 0,
    a = z^2 px py,
    b = z (py (1 - px) + px (1 - py)),
    c = (1 - px)(1 - py) - z px py,
    d = px py.

Evaluating at z = lambda - i eta with a small eta > 0 and taking the
imaginary part (Sokhotski-Plemelj) yields the eigenvalue density. The
physical root is the Herglotz branch: Im h >= 0 in the lower half-plane,
continuously connected to the 1/z asymptote at large |z|.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    EIGENVALUE,
    SINGULAR_VALUE,
    AspectRatios,
    DensityCurve,
    ProblemShape,
    Representation,
    delta_mass,
    delta_mass_from_ratios,
    to_ratios,
)
from .edges import find_edges_numeric

__all__ = [
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
]

# Roots with imaginary part below this are treated as violating the
# Herglotz property; the true branch has Im h > 0 strictly for Im z < 0.
_HERGLOTZ_TOL = -1e-14

# A computed density this far below zero indicates a branch error rather
# than rounding noise.
_NEGATIVE_DENSITY_TOL = -1e-8

_RESIDUAL_RTOL = 1e-10


class BranchSelectionError(RuntimeError):
    """No cubic root satisfies the Herglotz constraint at the given z."""

    def __init__(self, message, z=None, roots=None):
        super().__init__(message)
        self.z = z
        self.roots = roots


@dataclass(frozen=True)
class CubicCoefficients:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            v = complex(getattr(self, name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError(f"coefficient {name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)

    def residual(self, root: complex) -> float:
        return abs(((self.a * root + self.b) * root + self.c) * root + self.d)

    def residual_bound(self, root: complex) -> float:
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        return _RESIDUAL_RTOL * scale * max(1.0, abs(root)) ** 3


def cubic_coefficients(ratios: AspectRatios, z: complex) -> CubicCoefficients:
    px, py = ratios.px, ratios.py
    z = complex(z)
    pq = px * py  # grouping keeps every coefficient exactly symmetric in px, py
    return CubicCoefficients(
        a=z * z * pq,
        b=z * (py * (1.0 - px) + px * (1.0 - py)),
        c=(1.0 - px) * (1.0 - py) - z * pq,
        d=pq,
    )


def solve_cubic(coeffs: CubicCoefficients) -> np.ndarray:
    """All three roots via the companion matrix, in deterministic order.

    Roots are sorted by (real, imaginary) part; each satisfies the residual
    contract |a r^3 + b r^2 + c r + d| <= 1e-10 max|coeff| max(1, |r|)^3.
    """
    if coeffs.a == 0:
        raise ValueError("degenerate cubic (a = 0); evaluate at z != 0")
    roots = np.roots([coeffs.a, coeffs.b, coeffs.c, coeffs.d])
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def select_stieltjes_root(roots, z: complex, prev: complex | None = None) -> complex:
    """Pick the Herglotz branch among the cubic's roots at z (Im z < 0).

    Roots with Im < -1e-14 are discarded; among the survivors the one
    closest to ``prev`` wins. Without an explicit ``prev`` the asymptotic
    seed 1/z is used, which is reliable when |z| is well outside the band.
    """
    roots = np.asarray(roots, dtype=complex)
    candidates = roots[roots.imag >= _HERGLOTZ_TOL]
    if candidates.size == 0:
        raise BranchSelectionError(
            f"no root with Im >= {_HERGLOTZ_TOL} at z = {z}: roots {roots.tolist()}",
            z=z,
            roots=roots,
        )
    ref = (1.0 / z) if prev is None else prev
    return complex(candidates[np.argmin(np.abs(candidates - ref))])


def stieltjes_transform(ratios: AspectRatios, z: complex, prev: complex | None = None) -> complex:
    """h(z) at a single point; see :func:`select_stieltjes_root` for seeding."""
    return select_stieltjes_root(solve_cubic(cubic_coefficients(ratios, z)), z, prev)


def stieltjes_on_grid(ratios: AspectRatios, lambdas, eta: float) -> np.ndarray:
    """h(lambda - i eta) along a grid, tracked by a continuity sweep.

    Near the band edges two roots have comparably small imaginary parts and
    per-point selection can flicker between branches, so the sweep walks
    from large |z| downward, seeding each point with the previous selection.
    A short logarithmic run-in from far outside the band anchors the sweep
    on the 1/z asymptote.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambdas must be a nonempty 1-d array")
    if eta <= 0:
        raise ValueError("eta must be positive")
    order = np.argsort(lambdas)[::-1]
    top = max(lambdas.max(), eta)
    run_in = np.geomspace(1e3 * top, 2.0 * top, 16)

    prev = None
    for lam in run_in:
        prev = stieltjes_transform(ratios, lam - 1j * eta, prev)

    out = np.empty(lambdas.size, dtype=complex)
    for idx in order:
        prev = stieltjes_transform(ratios, lambdas[idx] - 1j * eta, prev)
        out[idx] = prev
    return out


def default_eta(ratios: AspectRatios) -> float:
    """Sokhotski-Plemelj regulator: 1e-9 relative to the band scale.

    Smaller values degrade the conditioning of the cubic in 64-bit floats
    without reducing the edge smearing below typical grid resolution.
    """
    lam_plus = find_edges_numeric(ratios).upper
    return 1e-9 * max(1.0, lam_plus)


def _density_from_h(h: complex, z: complex) -> float:
    rho = h.imag / math.pi
    if rho < _NEGATIVE_DENSITY_TOL:
        raise BranchSelectionError(
            f"density {rho} < {_NEGATIVE_DENSITY_TOL} at z = {z}; branch selection failed",
            z=z,
        )
    return max(rho, 0.0)


def h_density(lam: float, ratios: AspectRatios, eta: float | None = None) -> float:
    """Continuous part of the t-by-t representation's density at lambda >= 0.

    Returns Im h(lambda - i eta) / pi, clamped at zero from below; values
    below -1e-8 raise instead of being clamped silently.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if eta is None:
        eta = default_eta(ratios)
    elif eta <= 0:
        raise ValueError("eta must be positive")
    z = lam - 1j * eta
    return _density_from_h(stieltjes_transform(ratios, z), z)


def _tilde_density_on_lambdas(ratios: AspectRatios, lambdas, eta: float) -> np.ndarray:
    """Nonzero-eigenvalue density (normalized to unit mass) on a lambda grid."""
    h = stieltjes_on_grid(ratios, lambdas, eta)
    zs = lambdas - 1j * eta
    rho_tt = np.array([_density_from_h(hv, zv) for hv, zv in zip(h, zs)])
    p_hi = max(ratios.px, ratios.py)
    return rho_tt * max(1.0, p_hi)


def _representation_prefactor(ratios: AspectRatios, representation: Representation) -> float:
    r = ratios.canonical()
    frac = min(1.0, 1.0 / r.px)  # min(nx, t) / t with nx <= ny
    if representation is Representation.CTC:
        return frac * r.px
    if representation is Representation.CCT:
        return frac * r.py
    return frac


def singular_density_on_grid(
    ratios: AspectRatios,
    gammas,
    eta: float | None = None,
    representation: Representation | str = Representation.CTC,
) -> np.ndarray:
    """Singular-value density of the chosen representation on a gamma grid.

    rho(gamma) = 2 gamma * prefactor * rho_tilde(gamma^2), with the
    representation's continuous-mass prefactor.
    """
    rep = Representation(representation)
    gammas = np.asarray(gammas, dtype=float)
    if np.any(gammas < 0):
        raise ValueError("gamma grid must be nonnegative")
    if eta is None:
        eta = default_eta(ratios)
    pref = _representation_prefactor(ratios, rep)
    positive = gammas > 0
    out = np.zeros_like(gammas)
    if np.any(positive):
        lam = gammas[positive] ** 2
        out[positive] = 2.0 * gammas[positive] * pref * _tilde_density_on_lambdas(ratios, lam, eta)
    return out


def density_curve(
    ratios: AspectRatios,
    shape: ProblemShape | None = None,
    representation: Representation | str = Representation.CTC,
    grid_points: int = 512,
    variable: str = SINGULAR_VALUE,
    eta: float | None = None,
    scaled: bool = False,
) -> DensityCurve:
    """Theory curve for the chosen representation on a band-spanning grid.

    The grid covers the eigenvalue interval [max(0, 0.9 lambda_-),
    1.1 lambda_+] and is uniform in gamma = sqrt(lambda); for hard-edged
    spectra (lambda_- = 0) the gamma = 0 endpoint is never evaluated
    directly (the zero modes' point mass lives there) and its density is
    extrapolated linearly from the two neighboring grid points instead.
    The zero mass comes from the exact shape when one is given, otherwise
    from the large-size limit of the ratios. ``scaled`` multiplies the
    abscissa by sqrt(px py) and divides the density accordingly.
    """
    rep = Representation(representation)
    if grid_points < 16:
        raise ValueError("grid_points must be at least 16")
    if variable not in (EIGENVALUE, SINGULAR_VALUE):
        raise ValueError(f"unknown variable tag {variable!r}")
    if eta is None:
        eta = default_eta(ratios)

    band = find_edges_numeric(ratios)
    lam_lo = max(0.0, 0.9 * band.lower)
    lam_hi = 1.1 * band.upper
    gamma_grid = np.linspace(math.sqrt(lam_lo), math.sqrt(lam_hi), grid_points)

    hard_edge = gamma_grid[0] == 0.0
    eval_gammas = gamma_grid[1:] if hard_edge else gamma_grid
    pref = _representation_prefactor(ratios, rep)
    rho_tilde = _tilde_density_on_lambdas(ratios, eval_gammas**2, eta)

    if shape is not None:
        zero_mass = delta_mass(shape, rep)
        shape_ratios = to_ratios(shape)
        if not np.allclose([shape_ratios.px, shape_ratios.py], [ratios.px, ratios.py]):
            raise ValueError("shape and ratios disagree")
    else:
        zero_mass = delta_mass_from_ratios(ratios, rep)

    meta = {
        "representation": rep.value,
        "eta": float(eta),
        "band_eigenvalue": (band.lower, band.upper),
        "reoriented": ratios.px < ratios.py,
    }

    if variable == SINGULAR_VALUE:
        density = 2.0 * eval_gammas * pref * rho_tilde
        if hard_edge:
            head = max(0.0, 2.0 * density[0] - density[1])
            density = np.concatenate([[head], density])
        abscissa = gamma_grid
    else:
        # Eigenvalue output keeps the sqrt-clustered grid; near a hard edge
        # the lambda-density diverges and the origin point is dropped.
        density = pref * rho_tilde
        abscissa = eval_gammas**2

    if scaled:
        factor = math.sqrt(ratios.px * ratios.py)
        if variable == SINGULAR_VALUE:
            abscissa = abscissa * factor
            density = density / factor
        else:
            abscissa = abscissa * factor**2
            density = density / factor**2
        meta["scale_factor"] = factor

    return DensityCurve(abscissa, density, zero_mass, variable, scaled, meta)
