import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freebnd.errors import ExtrapolationUnstable, NonIntegrableTail, SingularFit
from freebnd.extension import (calibrate_trace_constant, fit_halfline_profile, geometric_heights, kernel_mass,
                               neumann_trace, poisson_constant, poisson_extend, richardson, trace_constant,
                               weighted_harmonic_residual)
from freebnd.functions import Constant, Gaussian, HalfSpacePower, Polynomial, Product
from freebnd.kernels import HomogeneousKernel, eval_operator

from oracles import gaussian_fractional_laplacian


def test_constant_extends_to_constant():
    f = poisson_extend(Constant(1.0), [0.1, 1.0, 10.0], 0.3, x=[[0.0], [2.0]])
    assert np.max(np.abs(f.values - 1)) < 1e-12
    assert np.all(neumann_trace(poisson_extend(Constant(1.0), geometric_heights(1 / 64), 0.5, x=[[0.3]])) == 0)


def test_half_power_extension_closed_form():
    f = poisson_extend(HalfSpacePower(1, power=0.5), [1.0], 0.5, x=[[0.0]])
    assert f.values[0, 0] == pytest.approx(np.cos(np.pi / 4), abs=1e-3)
    # away from the axis: r^{1/2} cos(theta/2)
    f = poisson_extend(HalfSpacePower(1, power=0.5), [0.5], 0.5, x=[[-0.5]])
    r, th = np.hypot(-0.5, 0.5), np.arctan2(0.5, -0.5)
    assert f.values[0, 0] == pytest.approx(r**0.5 * np.cos(th / 2), abs=1e-6)


def test_half_power_trace_vanishes():
    f = poisson_extend(HalfSpacePower(1, power=0.5), geometric_heights(1 / 1024), 0.5, x=[[0.2], [0.5]])
    assert np.max(np.abs(neumann_trace(f))) < 1e-5


def test_nonintegrable_tail():
    with pytest.raises(NonIntegrableTail):
        poisson_extend(Polynomial(1, terms=[[[2], 1.0]]), [1.0], 0.5, x=[[0.0]])


def test_weighted_harmonicity_second_order():
    res = []
    for n in (1, 2):
        h = 0.1 / n
        x = np.arange(-5, 6) * h
        f = poisson_extend(Gaussian(1), 0.5 + np.arange(-2, 3) * h, 0.4, x=x[:, None])
        res.append(weighted_harmonic_residual(f, h))
    assert res[1] < res[0] / 3


def test_gaussian_trace_pointwise():
    s = 0.5
    x = np.array([[0.0], [0.7]])
    f = poisson_extend(Gaussian(1), geometric_heights(1 / 256), s, x=x)
    tr = neumann_trace(f)
    want = gaussian_fractional_laplacian(x, s)
    assert np.max(np.abs(tr - want)) / np.max(np.abs(want)) < 1e-3


def test_trace_constant_closed_form_and_calibration():
    a, spread = calibrate_trace_constant(1, 0.3)
    assert a == pytest.approx(trace_constant(1, 0.3), rel=1e-3)
    assert spread < 1e-2
    # a_{1,1/2} = 1 for the half Laplacian
    assert trace_constant(1, 0.5) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("n,s", [(1, 0.3), (1, 0.7), (2, 0.5)])
def test_poisson_normalisation(n, s):
    assert 1 / kernel_mass(n, s) == pytest.approx(poisson_constant(n, s), rel=1e-10)


def test_richardson_exact_on_basis():
    s = 0.3
    y = geometric_heights(1 / 64, 6)
    vals = 2.0 + 3.0 * y ** (2 - 2 * s) - 1.5 * y**2
    lim, change = richardson(y, vals, s, terms=3)
    assert lim == pytest.approx(2.0, abs=1e-10) and change < 1e-9
    with pytest.raises(ExtrapolationUnstable):
        richardson(y[:2], vals[:2], s, terms=3)


def test_halfline_examples():
    s = 0.3
    x = np.arange(1, 201) / 200
    fit = fit_halfline_profile(x, x**s, s, 2)
    assert fit.residual <= 1e-10 and np.allclose(fit.coefficients, [1, 0, 0], atol=1e-10)
    fit = fit_halfline_profile(x, (3 + 2 * x) * x**s, s, 1)
    assert np.allclose(fit.coefficients, [3, 2], atol=1e-8)
    assert fit.verdict == "Liouville form"
    bad = fit_halfline_profile(x, x ** (s + 0.3), s, 2)
    assert bad.residual >= 0.05 and bad.verdict == "not of Liouville form"
    with pytest.raises(SingularFit):
        fit_halfline_profile(np.r_[0.0, x], np.r_[0.0, x**s], s, 1)
    with pytest.raises(SingularFit):
        fit_halfline_profile(np.array([0.5, 0.5, 0.5]), np.ones(3), s, 2)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.1, 0.9), coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=4))
def test_liouville_recovery(s, coeffs):
    x = np.arange(1, 201) / 200
    p = np.polynomial.polynomial.polyval(x, coeffs)
    fit = fit_halfline_profile(x, p * x**s, s, 3)
    want = np.zeros(4)
    want[:len(coeffs)] = coeffs
    assert np.max(np.abs(fit.coefficients - want)) <= 1e-8 * max(1.0, np.abs(want).max())
    assert np.allclose(fit(x), p * x**s, atol=1e-8)


def test_liouville_profile_is_harmonic():
    # p(x) x_+^s with deg p = 1 solves the equation on x > 0 (1D, s = 0.5)
    K = HomogeneousKernel(1, 0.5)
    u = Product([HalfSpacePower(1, power=0.5), Polynomial(1, terms=[[[0], 1.0]])])
    assert abs(eval_operator(u, K, 0.5)) < 1e-7
