import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freebnd.functions import Grid
from freebnd.geometry import (DiskTorsion, Domain, IntervalTorsion, PositivePower, RegularizedHalfLine,
                              build_regularized_distance, closed_form_distance, d_power, d_power_form,
                              dist_to_boundary, torsion_solve)


def test_interval_torsion():
    I = Domain.interval(0.0, 1.0)
    g = Grid.covering([0.0], [1.0], 1 / 16)
    for mode in ("closed-form", "torsion-solve"):
        d = build_regularized_distance(I, g, mode=mode)
        assert d(np.array([[0.5]]))[0] == pytest.approx(0.125, abs=1e-10)
        assert d.C_cmp == pytest.approx(4.0, rel=1e-8)


def test_disk_torsion():
    D = Domain.disk()
    g = Grid.covering([-1.0, -1.0], [1.0, 1.0], 1 / 16)
    d = build_regularized_distance(D, g, mode="torsion-solve")
    assert d.field(np.array([[0.0, 0.0]]))[0] == pytest.approx(0.25, abs=1e-9)
    exact = DiskTorsion()(g.nodes()).reshape(g.shape)
    assert np.max(np.abs(d.field.values - np.maximum(exact, 0))) < 1e-9


@pytest.mark.slow
def test_graph_domain_comparability():
    x = np.arange(256) / 256
    D = Domain.graph(0.1 * np.sin(2 * np.pi * x), top=1.0)
    lo, hi = D.box
    g = Grid.covering([0.0, lo[1]], [1.0 - 1 / 256, hi[1]], 1 / 256)
    d = build_regularized_distance(D, g)
    assert d.mode == "torsion-solve"
    assert d.C_cmp <= 5


def test_dist_to_boundary_examples():
    assert dist_to_boundary(Domain.interval(0, 1), 0.3) == pytest.approx(0.3)
    assert dist_to_boundary(Domain.disk(), [[0.0, 0.0]])[0] == pytest.approx(1.0)
    assert dist_to_boundary(Domain.half_space([0.0, 1.0], 0.0), [[0.5, -0.2]])[0] == pytest.approx(-0.2)


def test_d_power_examples():
    I = Domain.interval(0, 1)
    g = Grid.covering([-0.25], [1.25], 1 / 16)
    d = build_regularized_distance(I, g)
    ds = d_power(d, 0.5)
    assert ds(np.array([[0.5]]))[0] == pytest.approx(0.125**0.5, rel=1e-12)
    assert np.all(ds.values[d.field.values <= 0] == 0)
    H = Domain.half_space([0.0, 1.0], 0.0)
    g2 = Grid.covering([-1.0, -1.0], [1.0, 1.0], 1 / 8)
    f = d_power_form(build_regularized_distance(H, g2), 0.3)
    pts = np.array([[0.1, 0.25], [0.0, -1.0], [3.0, 2.0]])
    assert np.allclose(f(pts), np.maximum(pts[:, 1], 0) ** 0.3, rtol=1e-14, atol=0)


def test_halfline_distance_regularity_label():
    d = RegularizedHalfLine(2.2)
    t = np.array([[0.5], [-0.1]])
    assert np.allclose(d(t), [0.5 + 0.5**2.2, 0.0])


def test_domain_config_roundtrip():
    for D in (Domain.interval(0, 2), Domain.disk((0.1, 0.0), 0.5), Domain.half_space([0.0, 1.0], 0.2)):
        E = Domain.from_config(D.to_config())
        assert E.tag == D.tag and E.params == D.params


def test_half_space_has_no_torsion():
    with pytest.raises(ValueError):
        build_regularized_distance(Domain.half_space(), Grid.covering([-1, -1], [1, 1], 0.25), mode="torsion-solve")


@settings(max_examples=15, deadline=None)
@given(n=st.integers(8, 48), a=st.floats(-0.3, 0.3), L=st.floats(0.5, 2.0))
def test_interval_torsion_exact_on_any_grid(n, a, L):
    # the 3-point stencil is exact for quadratics, including cut cells
    I = Domain.interval(a, a + L)
    g = Grid.covering([a - 0.1], [a + L + 0.1], L / n)
    vals, info = torsion_solve(I, g, tol=1e-12)
    exact = np.maximum(IntervalTorsion(a, a + L)(g.nodes()), 0).reshape(g.shape)
    assert np.max(np.abs(vals - exact)) < 1e-9 * max(1.0, L * L)


@settings(max_examples=20, deadline=None)
@given(s=st.floats(0.05, 0.95))
def test_d_power_vanishes_with_d(s):
    D = Domain.disk()
    g = Grid.covering([-1.25, -1.25], [1.25, 1.25], 1 / 8)
    d = build_regularized_distance(D, g)
    ds = d_power(d, s)
    assert np.all((ds.values == 0) == (d.field.values <= 0))
    assert np.all(ds.values >= 0)


@settings(max_examples=20, deadline=None)
@given(x=st.floats(-3, 3), y=st.floats(-3, 3))
def test_dist_sign_matches_inside(x, y):
    D = Domain.disk()
    dist = dist_to_boundary(D, [[x, y]])[0]
    assert (dist > 0) == bool(D.inside(np.array([[x, y]]))[0]) or abs(dist) < 1e-12
    assert abs(dist) == pytest.approx(abs(1 - np.hypot(x, y)), abs=1e-12)


def test_closed_form_distance_types():
    assert isinstance(closed_form_distance(Domain.interval()), IntervalTorsion)
    assert isinstance(closed_form_distance(Domain.disk()), DiskTorsion)
    assert closed_form_distance(Domain.graph(np.zeros(16))) is None
    assert isinstance(PositivePower(DiskTorsion(), 0.5)(np.zeros((1, 2))), np.ndarray)
