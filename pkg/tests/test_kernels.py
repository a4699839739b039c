import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from umaxcircle import (
    AngleTuple,
    CirclePoint,
    DegreeError,
    DomainError,
    GFunction,
    KernelSpec,
    ValidationError,
    central_angles,
    eval_kernel,
    eval_on_points,
    g_second_derivative,
)
from umaxcircle.kernels import TWO_PI, eval_on_points_batch, reduce_angle

GENERATORS = [
    GFunction.sin_half(),
    GFunction.half_sin(),
    GFunction.sec_half(),
    GFunction.pow_sin(1.5),
    GFunction.pow_sin(0.5),
    GFunction.pow_sin(-1.0),
    GFunction.csc_half(),
    GFunction.alexander_stolarsky(1.0, -1.0, 0),
    GFunction.alexander_stolarsky(0.5, -0.5, 2),
    GFunction.alexander_stolarsky(0.0, 0.7, 0),
]

angles = st.floats(0.0, TWO_PI, exclude_max=True, allow_nan=False)


def fd2(fn, x, h=1e-4):
    return (fn(x + h) - 2 * fn(x) + fn(x - h)) / (h * h)


def test_generator_values():
    assert GFunction.sin_half()(math.pi) == pytest.approx(2.0)
    assert GFunction.half_sin()(math.pi / 2) == pytest.approx(0.5)
    assert GFunction.csc_half()(math.pi) == pytest.approx(0.5)
    assert GFunction.sec_half()(0.0) == pytest.approx(1.0)
    assert GFunction.sec_half()(math.pi) == math.inf
    assert GFunction.sec_half()(4.0) == math.inf
    x = np.linspace(0.1, 6.0, 7)
    np.testing.assert_allclose(GFunction.pow_sin(1.0)(x), GFunction.sin_half()(x), rtol=1e-14)


@pytest.mark.parametrize("g", GENERATORS, ids=lambda g: f"{g.family}{g.params}")
def test_second_derivative_matches_finite_difference(g):
    xs = np.linspace(0.4, 2.6, 9) if g.family == "sec-half" else np.linspace(0.3, TWO_PI - 0.3, 13)
    for x in xs:
        assert g.second_derivative(x) == pytest.approx(fd2(g, x), rel=1e-5, abs=1e-6)


def test_tabulated_generator_tracks_source():
    grid = np.linspace(0.0, TWO_PI, 2001)
    g = GFunction.tabulated(2 * np.sin(grid / 2))
    x = np.linspace(0.2, 6.0, 50)
    np.testing.assert_allclose(g(x), 2 * np.sin(x / 2), atol=1e-9)
    assert g.second_derivative(2.0) == pytest.approx(-0.5 * math.sin(1.0), abs=1e-4)


def test_second_derivative_domain():
    g = GFunction.sin_half()
    with pytest.raises(DomainError):
        g_second_derivative(g, 0.0)
    with pytest.raises(DomainError):
        g_second_derivative(g, TWO_PI)
    with pytest.raises(DomainError):
        g_second_derivative(GFunction.sec_half(), 4.0)


def test_bad_generator_params():
    with pytest.raises(ValidationError):
        GFunction("pow-sin", ())
    with pytest.raises(ValidationError):
        GFunction("alexander-stolarsky", (1.0, 1.0, 0.5))
    with pytest.raises(ValidationError):
        GFunction("no-such-family")


def test_evenness_and_pairwise_guard():
    assert GFunction.sin_half().is_even()
    assert GFunction.csc_half().is_even()
    assert not GFunction.half_sin().is_even()
    with pytest.raises(ValidationError):
        KernelSpec.pairwise_sum(GFunction.half_sin(), 3)


def test_degree_guard():
    with pytest.raises(DegreeError):
        KernelSpec.gap_sum(GFunction.sin_half(), 1)


def test_reduce_angle_maps_full_turn_to_zero():
    assert reduce_angle(TWO_PI) == 0.0
    assert reduce_angle(-0.5) == pytest.approx(TWO_PI - 0.5)
    assert 0.0 <= reduce_angle(np.nextafter(TWO_PI, 0)) < TWO_PI


def test_central_angles_reference_first_point():
    pts = [CirclePoint(1.0), CirclePoint(0.5), CirclePoint(3.0)]
    beta = central_angles(pts)
    assert isinstance(beta, AngleTuple)
    assert beta.beta == pytest.approx((TWO_PI - 0.5, 2.0))


def test_regular_polygon_values():
    per = KernelSpec.gap_sum(GFunction.sin_half(), 3)
    assert eval_kernel(per, (TWO_PI / 3, 2 * TWO_PI / 3)) == pytest.approx(3 * math.sqrt(3))
    pw = KernelSpec.pairwise_sum(GFunction.csc_half(), 3)
    assert eval_kernel(pw, (TWO_PI / 3, 2 * TWO_PI / 3)) == pytest.approx(math.sqrt(3))


KERNELS = [
    KernelSpec.gap_sum(GFunction.sin_half(), 4),
    KernelSpec.gap_sum(GFunction.half_sin(), 3),
    KernelSpec.pairwise_sum(GFunction.sin_half(), 4),
    KernelSpec.pairwise_sum(GFunction.csc_half(), 3),
]


@pytest.mark.parametrize("spec", KERNELS, ids=lambda s: f"{s.family}-{s.g.family}-{s.m}")
@given(theta=st.lists(angles, min_size=4, max_size=4), shift=angles, seed=st.integers(0, 2**32 - 1))
def test_rotation_and_permutation_invariance(spec, theta, shift, seed):
    theta = np.asarray(theta[: spec.m])
    # near-coincident points sit on the csc pole, where no relative tolerance holds
    d = np.abs(theta[:, None] - theta[None, :])
    sep = np.minimum(d, TWO_PI - d)[np.triu_indices(spec.m, 1)]
    assume(sep.min() > 1e-3)
    base = eval_on_points(spec, theta)
    rot = eval_on_points(spec, reduce_angle(theta + shift))
    perm = eval_on_points(spec, np.random.default_rng(seed).permutation(theta))
    if math.isfinite(base):
        assert rot == pytest.approx(base, rel=1e-9, abs=1e-9)
        assert perm == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_negated_kernel():
    spec = KernelSpec.gap_sum(GFunction.sin_half(), 3)
    b = (1.0, 2.5)
    assert eval_kernel(spec.negated(), b) == -eval_kernel(spec, b)


def test_jensen_bound_for_concave_generator():
    rng = np.random.default_rng(5)
    for m in (3, 4, 5):
        spec = KernelSpec.gap_sum(GFunction.sin_half(), m)
        theta = rng.uniform(0, TWO_PI, (1000, m))
        vals = eval_on_points_batch(spec, theta)
        bound = m * 2 * math.sin(math.pi / m)
        assert np.all(vals <= bound + 1e-12)


def test_custom_kernel_probe():
    def chord_sum(theta):
        d = theta[:, :, None] - theta[:, None, :]
        return np.sum(np.abs(2 * np.sin(d / 2)), axis=(1, 2)) / 2

    spec = KernelSpec.custom(chord_sum, 3)
    pw = KernelSpec.pairwise_sum(GFunction.sin_half(), 3)
    b = (0.7, 2.9)
    assert eval_kernel(spec, b) == pytest.approx(eval_kernel(pw, b))

    with pytest.raises(ValidationError):
        KernelSpec.custom(lambda th: th[:, 0], 3)
