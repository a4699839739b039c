import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special, stats

from umaxcircle import Mixture, Tabulated, Uniform, ValidationError, VonMises, product_integral, sample_angles
from umaxcircle.density import bessel_i0, density_from_dict, orbit_integrals, regular_offsets
from umaxcircle.kernels import TWO_PI


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 3.3, 10.0, 20.0])
def test_bessel_i0_against_scipy(x):
    assert bessel_i0(x) == pytest.approx(special.i0(x), rel=1e-14)


@pytest.mark.parametrize("kappa", [0.0, 0.3, 1.0, 5.0, 20.0])
def test_von_mises_pdf_and_mass(kappa):
    p = VonMises(0.7, kappa)
    x = np.linspace(0, TWO_PI, 17)
    np.testing.assert_allclose(p.pdf(x), stats.vonmises.pdf(x, kappa, loc=0.7), rtol=1e-12)
    assert p.integral() == pytest.approx(1.0, abs=1e-12)
    p.validate()


def test_von_mises_kappa_range():
    with pytest.raises(ValidationError):
        VonMises(0.0, 25.0)


def test_tabulated_checks():
    with pytest.raises(ValidationError):
        Tabulated((1.0, 1.0, 1.0))  # mass 2*pi
    with pytest.raises(ValidationError):
        Tabulated((-0.1, 0.2, 0.377))
    p = Tabulated.from_function(lambda x: 1 + 0.5 * np.cos(x), 256)
    assert p.integral() == pytest.approx(1.0, abs=1e-12)
    assert p.pdf(0.0) == pytest.approx(1.5 / TWO_PI, rel=1e-12)


def test_tabulated_csv_roundtrip(tmp_path):
    n = 64
    grid = np.arange(n) * TWO_PI / n
    vals = (1 + 0.3 * np.sin(grid)) / TWO_PI
    path = tmp_path / "dens.csv"
    path.write_text("angle,value\n" + "".join(f"{float(a)!r},{float(v)!r}\n" for a, v in zip(grid, vals)))
    p = Tabulated.from_csv(path)
    np.testing.assert_allclose(p.pdf(grid), vals, rtol=1e-14)
    assert density_from_dict({"family": "tabulated", "path": "dens.csv"}, tmp_path).values == p.values

    bad = tmp_path / "bad.csv"
    bad.write_text("0.0,0.1\n0.5,0.2\n1.0,0.3\n")
    with pytest.raises(ValidationError):
        Tabulated.from_csv(bad)


def test_mixture_validation():
    mix = Mixture((0.3, 0.7), (Uniform(), VonMises(1.0, 2.0)))
    mix.validate()
    with pytest.raises(ValidationError):
        Mixture((0.3, 0.3), (Uniform(), VonMises()))


def test_uniform_sampling_exact_range():
    th = sample_angles(Uniform(), np.random.default_rng(0), 100_000)
    assert th.min() >= 0.0 and th.max() < TWO_PI
    assert stats.kstest(th, stats.uniform(0, TWO_PI).cdf).pvalue > 1e-3


def test_von_mises_sampling_distribution():
    p = VonMises(0.0, 1.0)
    th = sample_angles(p, np.random.default_rng(1), 100_000)
    # compare through the distribution of cos(theta), which avoids the wrap point
    ref_cos = stats.vonmises.rvs(1.0, size=100_000, random_state=2)
    assert stats.ks_2samp(np.cos(th), np.cos(ref_cos)).pvalue > 1e-3
    assert stats.ks_2samp(np.sin(th), np.sin(ref_cos)).pvalue > 1e-3


def test_zero_mass_cells_never_sampled():
    n = 400
    grid = np.arange(n) * TWO_PI / n
    vals = np.where(grid < 1.0, 1.0, 0.0)
    p = Tabulated.from_function(lambda x: np.interp(x, grid, vals), n)
    th = sample_angles(p, np.random.default_rng(3), 50_000)
    # zero on [x_64, x_399]; the sampling table resolves the edges to one of its cells
    lo = grid[64] + TWO_PI / p.table.size
    hi = grid[399] - TWO_PI / p.table.size
    assert not np.any((th > lo) & (th < hi))
    assert np.mean(p.pdf(th) > 0.0) > 0.999


@pytest.mark.parametrize("m", [2, 3, 5])
def test_product_integral_uniform(m):
    assert product_integral(Uniform(), regular_offsets(m)) == pytest.approx(TWO_PI ** -(m - 1), rel=1e-15)


def test_product_integral_against_quad():
    p = VonMises(0.3, 1.5)
    W = (1.1, 3.0)
    ref, _ = integrate.quad(lambda x: p.pdf(x) * p.pdf(x + W[0]) * p.pdf(x + W[1]), 0, TWO_PI, limit=200)
    assert product_integral(p, W) == pytest.approx(ref, rel=1e-10)


@given(st.lists(st.floats(0.05, 6.2), min_size=2, max_size=4))
def test_orbit_integrals_agree(W):
    vals = orbit_integrals(VonMises(0.2, 2.0), W)
    assert max(vals) == pytest.approx(min(vals), rel=1e-9)
