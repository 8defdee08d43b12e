import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freebnd.functions import (Bump, Constant, Gaussian, Grid, GridFunction, HalfSpacePower, Polynomial, Product,
                               RadialPower, Sum, closed_form_from_dict)
from freebnd.geometry import DiskTorsion, IntervalTorsion, PositivePower, RegularizedHalfLine

FORMS = [
    Constant(2.0, dim=2),
    Gaussian(2, 1.5, 0.7, [0.1, -0.2]),
    HalfSpacePower(2, normal=[0.6, 0.8], offset=0.1, power=0.3, coeffs=(1.0, 2.0)),
    RadialPower(2, power=1.5, amplitude=2.0, center=[0.2, 0.0]),
    Polynomial(2, terms=[[[0, 0], 1.0], [[1, 1], -2.0]]),
    Bump(2, 0.5, 1.0),
    Product([Gaussian(2), Polynomial(2, terms=[[[1, 0], 1.0]])]),
    Sum([Gaussian(2), RadialPower(2, power=0.5)]),
    PositivePower(DiskTorsion(), 0.5),
]


@pytest.mark.parametrize("form", FORMS, ids=lambda f: f.tag)
def test_closed_form_dict_roundtrip(form):
    pts = np.array([[0.3, -0.4], [1.2, 0.7], [-0.5, 0.0]])
    back = closed_form_from_dict(form.to_dict())
    assert np.array_equal(back(pts), form(pts))


@pytest.mark.parametrize("form", FORMS[1:5], ids=lambda f: f.tag)
def test_gradients_match_differences(form):
    pts = np.array([[0.3, 0.45], [-0.5, 0.25]])
    g = form.gradient(pts)
    e = 1e-6
    for i in range(2):
        d = np.zeros(2)
        d[i] = e
        fd = (form(pts + d) - form(pts - d)) / (2 * e)
        assert np.allclose(g[:, i], fd, rtol=1e-6, atol=1e-6)


def test_bump_support():
    b = Bump(1, 1.0, 2.0)
    assert np.allclose(b(np.array([[0.0], [0.9], [2.1], [-3.0]])), [1, 1, 0, 0])


def test_torsion_forms():
    assert IntervalTorsion()(np.array([[0.5]]))[0] == pytest.approx(0.125)
    assert DiskTorsion()(np.array([[0.0, 0.0]]))[0] == pytest.approx(0.25)
    assert RegularizedHalfLine(2.2)(np.array([[0.25]]))[0] == pytest.approx(0.25 + 0.25**2.2)


def test_zero_exterior_tapers():
    g = Grid.covering([0.0], [1.0], 0.25)
    u = GridFunction(g, np.ones(g.shape))
    assert np.allclose(u(np.array([[-0.125], [1.25], [2.0]])), [0.5, 0.0, 0.0])


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), c=st.floats(-2, 2), x=st.floats(-1, 1), y=st.floats(-1, 1))
def test_linear_interpolation_exact_for_affine(a, b, c, x, y):
    g = Grid.covering([-1.0, -1.0], [1.0, 1.0], 0.125)
    f = Polynomial(2, terms=[[[0, 0], a], [[1, 0], b], [[0, 1], c]])
    u = GridFunction.sample(f, g)
    p = np.array([[x, y]])
    assert u(p)[0] == pytest.approx(f(p)[0], abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(x=st.floats(-0.9, 0.9))
def test_cubic_interpolation_accuracy(x):
    g = Grid.covering([-3.0], [3.0], 1 / 32)
    u = GridFunction.sample(Gaussian(1), g, interpolation="cubic")
    assert u(np.array([[x]]))[0] == pytest.approx(np.exp(-x * x), abs=1e-6)


def test_grid_function_validation():
    g = Grid.covering([0.0], [1.0], 0.25)
    with pytest.raises(ValueError):
        GridFunction(g, np.full(g.shape, np.nan))
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(g.shape), exterior="mirror")
    with pytest.raises(ValueError):
        Grid((0.0,), 0.0, (4,))


def test_grid_function_gradient_exterior():
    g = Grid.covering([-1.0, -1.0], [1.0, 1.0], 1 / 16)
    u = GridFunction.sample(Gaussian(2), g)
    gx, gy = u.gradient()
    pts = np.array([[0.3, 0.2], [2.0, 0.0]])
    assert np.allclose(gx(pts), Gaussian(2).gradient(pts)[:, 0], atol=5e-3)
