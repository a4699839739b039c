import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umaxcircle import (
    BoundaryMaximum,
    GFunction,
    KernelSpec,
    det_neg_hessian_gapsum,
    find_max_oracle,
    hessian_fd,
    pairwise_hessian,
    regular_polygon_analysis,
    tridiagonal_det,
    validate_conditions,
)
from umaxcircle.extremum import HessianReport, analytic_hessian, min_gap
from umaxcircle.kernels import TWO_PI


def fraction_det(A):
    """Determinant by exact Gaussian elimination over the rationals."""
    A = [[Fraction(x) for x in row] for row in A]
    n, det = len(A), Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            det = -det
        det *= A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            for j in range(k, n):
                A[i][j] -= f * A[k][j]
    return det


def second_difference(n):
    return [[2 if i == j else (-1 if abs(i - j) == 1 else 0) for j in range(n)] for i in range(n)]


@pytest.mark.parametrize("n", [1, 2, 3, 7, 16, 33])
def test_tridiagonal_det_against_exact_elimination(n):
    assert tridiagonal_det(n) == fraction_det(second_difference(n)) == n + 1


def test_tridiagonal_det_is_exact_integer():
    assert tridiagonal_det(500) == 501
    assert isinstance(tridiagonal_det(64), int)


@pytest.mark.parametrize("m", [3, 4, 5, 6, 7])
@pytest.mark.parametrize("g", [GFunction.sin_half(), GFunction.half_sin(), GFunction.pow_sin(0.5)],
                         ids=lambda g: f"{g.family}{g.params}")
def test_gapsum_det_formula(g, m):
    spec = KernelSpec.gap_sum(g, m)
    W = TWO_PI * np.arange(1, m) / m
    direct = np.linalg.det(-analytic_hessian(spec, W).matrix)
    assert det_neg_hessian_gapsum(g, m) == pytest.approx(direct, rel=1e-10)
    g2 = g.second_derivative(TWO_PI / m)
    assert direct == pytest.approx(m * (-g2) ** (m - 1), rel=1e-10)


# Toeplitz determinants of the pairwise chord-length kernel at the regular m-gon
PAIRWISE_SIN = {
    3: 9 / 16,
    4: (3 * math.sqrt(2) + 4) / 8,
    5: (175 + 75 * math.sqrt(5)) / 128,
    6: (168 * math.sqrt(3) + 291) / 64,
}
# inverse-distance kernel: minimum value and det(G)
INVERSE_M = {3: math.sqrt(3), 4: 2 * math.sqrt(2) + 1, 5: 6.88191, 6: 7.5 + 2 * math.sqrt(3)}
INVERSE_DET = {3: 25 / 144, 4: 0.911017, 5: (21847 + 7395 * math.sqrt(5)) / 3200, 6: 319.19601}


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_pairwise_chord_table(m):
    rep = pairwise_hessian(GFunction.sin_half(), m)
    assert rep.det_neg_G == pytest.approx(PAIRWISE_SIN[m], rel=1e-12)
    assert rep.is_symmetric
    assert rep.is_negative_definite
    fd = hessian_fd(KernelSpec.pairwise_sum(GFunction.sin_half(), m), TWO_PI * np.arange(1, m) / m)
    assert fd.det_neg_G == pytest.approx(PAIRWISE_SIN[m], rel=1e-5)


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_inverse_distance_table(m):
    spec = KernelSpec.pairwise_sum(GFunction.csc_half(), m)
    an = regular_polygon_analysis(spec)
    assert an.M == pytest.approx(INVERSE_M[m], rel=1e-6)
    assert pairwise_hessian(spec.g, m).det_G == pytest.approx(INVERSE_DET[m], rel=1e-6)
    assert pairwise_hessian(spec.g, m).is_diagonally_dominant()


@given(st.lists(st.floats(0.2, 1.6), min_size=4, max_size=4))
def test_fd_hessian_matches_analytic_at_interior_points(steps):
    beta = np.cumsum(steps[:3])
    for spec in (KernelSpec.gap_sum(GFunction.sin_half(), 4), KernelSpec.pairwise_sum(GFunction.sin_half(), 4)):
        an = analytic_hessian(spec, beta).matrix
        fd = hessian_fd(spec, beta).matrix
        np.testing.assert_allclose(fd, an, atol=2e-5 * (1 + np.abs(an).max()))


def test_hessian_report_properties():
    rep = HessianReport.from_matrix(-np.array([[2.0, -1.0], [-1.0, 2.0]]), "test")
    assert rep.det_G == pytest.approx(3.0)
    assert rep.det_neg_G == pytest.approx(3.0)
    assert rep.is_negative_definite
    assert rep.is_diagonally_dominant()
    assert rep.leading_minors(negate=True) == pytest.approx([2.0, 3.0])


@pytest.mark.parametrize("m", [3, 4])
@pytest.mark.parametrize("g", [GFunction.sin_half(), GFunction.half_sin()], ids=lambda g: g.family)
def test_oracle_finds_regular_polygon(g, m):
    spec = KernelSpec.gap_sum(g, m)
    an = find_max_oracle(spec)
    assert an.r == 1
    assert an.k == math.factorial(m - 1)
    np.testing.assert_allclose(an.ordered_maximizers[0].as_array(), TWO_PI * np.arange(1, m) / m, atol=1e-6)
    assert an.M == pytest.approx(m * g(TWO_PI / m), abs=1e-10)
    assert an.det_neg_hessian[0] == pytest.approx(det_neg_hessian_gapsum(g, m), rel=1e-5)
    assert validate_conditions(spec, an).ok


def test_oracle_minimum_of_convex_generator():
    spec = KernelSpec.gap_sum(GFunction.sec_half(), 3).negated()
    an = find_max_oracle(spec)
    assert -an.M == pytest.approx(6.0, abs=1e-9)  # 3 / cos(pi/3)


def test_boundary_maximum_detected():
    spec = KernelSpec.gap_sum(GFunction.pow_sin(1.5), 6)
    with pytest.raises(BoundaryMaximum):
        find_max_oracle(spec)
    an = find_max_oracle(spec, raise_on_boundary=False)
    assert not validate_conditions(spec, an).interior


def test_squared_chords_collapse_to_triangle():
    # sum of squared sides: 9 for a triangle with a doubled vertex beats 8 for the square
    spec = KernelSpec.gap_sum(GFunction.pow_sin(2.0), 4)
    with pytest.raises(BoundaryMaximum):
        find_max_oracle(spec)
    an = find_max_oracle(spec, raise_on_boundary=False)
    assert an.M == pytest.approx(9.0, abs=1e-8)


def test_generalized_perimeter_collapse_below_sufficient_threshold():
    # y = 1.5: the doubled-vertex triangle 3 * 3**0.75 beats the square 4 * 2**0.75
    spec = KernelSpec.gap_sum(GFunction.pow_sin(1.5), 4)
    with pytest.raises(BoundaryMaximum):
        find_max_oracle(spec)
    assert find_max_oracle(spec, raise_on_boundary=False).M == pytest.approx(3 * 3**0.75, abs=1e-8)


def test_generalized_perimeter_interior_for_mild_exponent():
    spec = KernelSpec.gap_sum(GFunction.pow_sin(1.2), 4)
    an = find_max_oracle(spec)
    np.testing.assert_allclose(an.ordered_maximizers[0].as_array(), TWO_PI * np.arange(1, 4) / 4, atol=1e-6)
    assert an.M == pytest.approx(4 * 2**0.6, abs=1e-9)
    assert validate_conditions(spec, an).ok


def test_generalized_perimeter_y_between_one_and_two_triangle():
    spec = KernelSpec.gap_sum(GFunction.pow_sin(1.7), 3)
    an = find_max_oracle(spec)
    np.testing.assert_allclose(an.ordered_maximizers[0].as_array(), [TWO_PI / 3, 2 * TWO_PI / 3], atol=1e-6)
