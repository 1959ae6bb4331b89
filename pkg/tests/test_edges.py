import numpy as np
import pytest

from crosscov import (
    AspectRatios,
    discriminant_coeffs,
    edges,
    edges_both_tiny,
    edges_disparate,
    edges_equal_ratio,
    edges_oversampled_limit,
    edges_tiny_equal,
    find_edges_numeric,
)
from crosscov.edges import (
    REGIME_BOTH_TINY,
    REGIME_DISPARATE,
    REGIME_EQUAL_RATIO,
    REGIME_NUMERIC,
    DiscriminantPolynomial,
)

# Exact band endpoints for px = py, evaluated at 30 decimal digits from the
# closed-form root expression (independently cross-checked against direct
# evaluation of the discriminant).
LAM_MINUS_P05 = 0.11340054556247133
LAM_PLUS_P05 = 17.636599454437529
GAMMA_MINUS_P05 = 0.3367499748514784
GAMMA_PLUS_P05 = 4.1995951536353512
GAMMA_PLUS_P1 = 2.5980762113533159  # sqrt(27/4)
LAM_PLUS_P125 = 5.031272044116057
GAMMA_PLUS_P125 = 2.2430497194926503


def random_ratio_pairs(n, seed=7):
    rng = np.random.default_rng(seed)
    return 10.0 ** rng.uniform(-3, 1, size=(n, 2))


def test_discriminant_p1_is_known_quintic():
    # at px = py = 1 the discriminant collapses to 4 z^5 - 27 z^4
    k = discriminant_coeffs(AspectRatios(1, 1)).coefficients
    assert k[0] == k[1] == k[2] == k[3] == 0.0
    assert k[4] == -27.0 and k[5] == 4.0


@pytest.mark.parametrize("p", [0.5, 1.25, 2.0, 0.05])
def test_discriminant_equal_ratio_coefficients(p):
    k = discriminant_coeffs(AspectRatios(p, p)).coefficients
    scale = max(abs(v) for v in k)
    assert abs(k[2]) <= 1e-13 * scale  # z^2 term degenerates at equal ratios
    assert k[3] == pytest.approx(4 * p**4 - 12 * p**5 + 12 * p**6 - 4 * p**7, rel=1e-12)
    assert k[4] == pytest.approx(-8 * p**6 - 20 * p**7 + p**8, rel=1e-12)
    assert k[5] == pytest.approx(4 * p**8, rel=1e-14)


def test_discriminant_z3_value_at_half():
    # frozen from the z^3 coefficient formula 4 p^4 (1 - p)^3 at p = 0.5
    k = discriminant_coeffs(AspectRatios(0.5, 0.5)).coefficients
    assert k[3] == pytest.approx(0.03125, rel=1e-14)


def test_discriminant_symmetry_and_leading_coefficient():
    for px, py in random_ratio_pairs(20, seed=3):
        ka = discriminant_coeffs(AspectRatios(px, py)).coefficients
        kb = discriminant_coeffs(AspectRatios(py, px)).coefficients
        assert ka == kb
        assert ka[5] == pytest.approx(4.0 * (px * py) ** 4, rel=1e-14)


def test_discriminant_polynomial_evaluation_matches_direct_product():
    # independent oracle: evaluate b^2 c^2 - 4 a c^3 - 4 b^3 d - 27 a^2 d^2
    # + 18 a b c d from the cubic coefficients at real z
    from crosscov import cubic_coefficients

    rng = np.random.default_rng(11)
    for _ in range(20):
        px, py = 10.0 ** rng.uniform(-2, 1, size=2)
        z = 10.0 ** rng.uniform(-2, 3)
        poly = discriminant_coeffs(AspectRatios(px, py))
        c = cubic_coefficients(AspectRatios(px, py), z)
        direct = (
            c.b**2 * c.c**2
            - 4 * c.a * c.c**3
            - 4 * c.b**3 * c.d
            - 27 * c.a**2 * c.d**2
            + 18 * c.a * c.b * c.c * c.d
        )
        assert poly(z) == pytest.approx(direct.real, rel=1e-9)


def test_discriminant_polynomial_validates():
    with pytest.raises(ValueError):
        DiscriminantPolynomial((0.0, 0.0, 1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        DiscriminantPolynomial((0.0, 0.0, 1.0, 1.0, 1.0, -1.0))


def test_find_edges_numeric_equal_half():
    band = find_edges_numeric(AspectRatios(0.5, 0.5))
    assert band.lower == pytest.approx(LAM_MINUS_P05, rel=1e-9)
    assert band.upper == pytest.approx(LAM_PLUS_P05, rel=1e-9)


def test_find_edges_numeric_square_case():
    band = find_edges_numeric(AspectRatios(1, 1))
    assert band.lower == 0.0
    assert band.upper == pytest.approx(6.75, rel=1e-9)


def test_find_edges_numeric_oversampled():
    band = find_edges_numeric(AspectRatios(1.25, 1.25))
    assert band.lower == 0.0
    assert band.upper == pytest.approx(LAM_PLUS_P125, rel=1e-9)


def test_find_edges_numeric_hard_edge_single_dataset_square():
    # px = 1 exactly: the narrow dataset is square, the band reaches zero
    band = find_edges_numeric(AspectRatios(1.0, 0.5))
    assert band.lower == 0.0
    assert band.upper > 0


def test_edges_equal_ratio_values():
    band = edges_equal_ratio(0.5)
    assert band.lower == pytest.approx(GAMMA_MINUS_P05, rel=1e-12)
    assert band.upper == pytest.approx(GAMMA_PLUS_P05, rel=1e-12)
    band = edges_equal_ratio(1.0)
    assert band.lower == 0.0
    assert band.upper == pytest.approx(GAMMA_PLUS_P1, rel=1e-12)
    band = edges_equal_ratio(1.25)
    assert band.lower == 0.0
    assert band.upper == pytest.approx(GAMMA_PLUS_P125, rel=1e-12)


def test_edges_tiny_equal_values():
    band = edges_tiny_equal(0.01)
    assert band.lower == pytest.approx(85.85786437626905, rel=1e-12)
    assert band.upper == pytest.approx(114.14213562373095, rel=1e-12)
    scale = 0.01
    assert band.lower * scale == pytest.approx(0.8585786437626905, rel=1e-12)
    assert band.upper * scale == pytest.approx(1.1414213562373095, rel=1e-12)


def test_edges_tiny_equal_matches_numeric_within_5pct():
    numeric = find_edges_numeric(AspectRatios(0.01, 0.01)).to_singular()
    approx = edges_tiny_equal(0.01)
    assert abs(approx.lower - numeric.lower) / numeric.lower < 0.05
    assert abs(approx.upper - numeric.upper) / numeric.upper < 0.05


def test_edges_tiny_equal_limit_scaling():
    # gamma_{+-} * p -> 1 as p -> 0
    band = edges_tiny_equal(1e-6)
    assert band.lower * 1e-6 == pytest.approx(1.0, abs=2e-3)
    assert band.upper * 1e-6 == pytest.approx(1.0, abs=2e-3)


def test_edges_tiny_equal_warns_outside_range():
    with pytest.warns(RuntimeWarning):
        edges_tiny_equal(0.5)


def test_edges_disparate_values():
    band = edges_disparate(0.5, 0.01)
    assert band.lower == pytest.approx(4.1421356237309505, rel=1e-12)
    assert band.upper == pytest.approx(24.14213562373095, rel=1e-12)
    band = edges_disparate(2.0, 0.01)
    assert band.lower == pytest.approx(2.9289321881345248, rel=1e-12)
    assert band.upper == pytest.approx(17.071067811865475, rel=1e-12)


def test_edges_disparate_lower_edge_closes_at_unit_ratio():
    band = edges_disparate(1.0, 1e-4)
    assert band.lower == 0.0
    assert band.upper > 0


def test_edges_disparate_warns_outside_range():
    with pytest.warns(RuntimeWarning):
        edges_disparate(0.5, 0.4)


def test_edges_both_tiny_values():
    band = edges_both_tiny(0.01, 0.05)
    scale = np.sqrt(0.01 * 0.05)
    assert band.lower * scale == pytest.approx(0.75505102572168219, rel=1e-12)
    assert band.upper * scale == pytest.approx(1.2449489742783178, rel=1e-12)


def test_edges_both_tiny_reduces_to_tiny_equal():
    a = edges_both_tiny(0.01, 0.01)
    b = edges_tiny_equal(0.01)
    assert a.lower == b.lower and a.upper == b.upper


def test_edges_oversampled_limit():
    band = edges_oversampled_limit(100.0)
    assert band.lower == 0.0
    assert band.upper == pytest.approx(0.2, rel=1e-15)
    exact = edges_equal_ratio(100.0)
    assert abs(band.upper - exact.upper) / exact.upper < 0.01
    exact1k = edges_equal_ratio(1000.0)
    assert abs(edges_oversampled_limit(1000.0).upper - exact1k.upper) / exact1k.upper < 1e-3


def test_edges_oversampled_warns_outside_range():
    with pytest.warns(RuntimeWarning):
        edges_oversampled_limit(2.0)


def test_dispatcher_numeric_matches_equal_ratio():
    est = edges(AspectRatios(0.5, 0.5), "numeric")
    closed = edges_equal_ratio(0.5)
    assert est.regime == REGIME_NUMERIC
    assert est.band.lower == pytest.approx(closed.lower, rel=1e-9)
    assert est.band.upper == pytest.approx(closed.upper, rel=1e-9)


def test_dispatcher_regime_selection():
    assert edges(AspectRatios(0.01, 0.05), "auto_limit").regime == REGIME_BOTH_TINY
    assert edges(AspectRatios(1.25, 1.25), "auto_limit").regime == REGIME_EQUAL_RATIO
    assert edges(AspectRatios(2.0, 0.01), "auto_limit").regime == REGIME_DISPARATE
    assert edges(AspectRatios(0.5, 0.3), "auto_limit").regime == REGIME_NUMERIC
    with pytest.raises(ValueError):
        edges(AspectRatios(1, 1), "nonsense")


def test_oracle_agreement_discriminant_residual():
    # numeric edges plugged back into the quintic must be roots to within
    # 1e-8 of the polynomial's own term scale at that point (the natural
    # conditioning bound; a fixed lambda^5 scale is meaningless for small
    # edges, where it falls below representable cancellation)
    for px, py in random_ratio_pairs(50, seed=19):
        ratios = AspectRatios(px, py)
        poly = discriminant_coeffs(ratios)
        band = find_edges_numeric(ratios)
        for lam in (band.lower, band.upper):
            if lam == 0.0:
                continue
            scale = max(abs(k) * lam**i for i, k in enumerate(poly.coefficients))
            assert abs(poly(lam)) < 1e-8 * scale


def test_limit_convergence_error_halves_when_parameter_quartered():
    def rel_err(approx_band, ratios):
        numeric = find_edges_numeric(ratios).to_singular()
        errs = [abs(approx_band.upper - numeric.upper) / numeric.upper]
        if numeric.lower > 0:
            errs.append(abs(approx_band.lower - numeric.lower) / numeric.lower)
        return max(errs)

    # equal tiny ratios
    seq = [rel_err(edges_tiny_equal(p), AspectRatios(p, p)) for p in (0.04, 0.01, 0.0025)]
    assert seq[1] <= 0.5 * seq[0] and seq[2] <= 0.5 * seq[1]

    # disparate ratios at fixed px
    seq = [
        rel_err(edges_disparate(0.5, 0.5 * a), AspectRatios(0.5, 0.5 * a))
        for a in (0.04, 0.01, 0.0025)
    ]
    assert seq[1] <= 0.5 * seq[0] and seq[2] <= 0.5 * seq[1]

    # both tiny at fixed py/px
    seq = [
        rel_err(edges_both_tiny(p, 0.5 * p), AspectRatios(p, 0.5 * p))
        for p in (0.04, 0.01, 0.0025)
    ]
    assert seq[1] <= 0.5 * seq[0] and seq[2] <= 0.5 * seq[1]

    # oversampled: limit parameter is 1/p
    seq = [
        abs(edges_oversampled_limit(p).upper - edges_equal_ratio(p).upper)
        / edges_equal_ratio(p).upper
        for p in (20.0, 80.0, 320.0)
    ]
    assert seq[1] <= 0.5 * seq[0] and seq[2] <= 0.5 * seq[1]


def test_band_scale_law():
    # gamma_+ sqrt(px py) stays within [0.5, 10] across the tested range
    for px, py in random_ratio_pairs(50, seed=23):
        band = find_edges_numeric(AspectRatios(px, py)).to_singular()
        assert 0.5 <= band.upper * np.sqrt(px * py) <= 10.0
