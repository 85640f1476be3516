import numpy as np
import pytest
from conftest import smooth_rect_state, smooth_torus_state
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexflow import fields as fl
from vortexflow.grid import integrate, l2_norm, make_grid


def _state(g, ax=None, ay=None, u=None, **kw):
    z = np.zeros(g.shape)
    return fl.State(g, z if ax is None else ax, z if ay is None else ay,
                    np.ones(g.shape, dtype=complex) if u is None else u, **kw)


def test_state_validation(rect16, torus16):
    with pytest.raises(ValueError):
        _state(rect16, u=np.full(rect16.shape, np.nan))
    with pytest.raises(ValueError):
        _state(rect16, tau=0.0)
    with pytest.raises(ValueError):
        _state(rect16, degree=1)
    with pytest.raises(ValueError):
        _state(torus16, ax=np.zeros((3, 3)))


def test_curvature_of_linear_potential(rect16):
    s = _state(rect16, ay=rect16.x.copy())
    assert np.allclose(fl.curvature(s)[rect16.interior], 1.0, atol=1e-13)


def test_pure_gauge_is_flat(rect16):
    g = rect16
    theta = np.sin(3 * g.x) * np.cos(2 * g.y) + g.x * g.y
    s = _state(g, ax=fl.dx(g, theta), ay=fl.dy(g, theta))
    assert np.max(np.abs(fl.curvature(s))) < 1e-12


def test_degree_one_background_flux():
    g = make_grid("torus", 16, lx=4.0)
    s = _state(g, u=fl.theta_section(g, 1), degree=1)
    assert abs(integrate(g, fl.curvature(s)) - 2 * np.pi) < 1e-10


def test_covariant_derivative_examples(rect16):
    g = rect16
    d = fl.covariant_derivative(_state(g, u=np.full(g.shape, 2 - 1j)))
    assert np.max(np.abs(d[0])) < 1e-13 and np.max(np.abs(d[1])) < 1e-13
    # phase links give i sin(alpha h)/h, which is i alpha + O(h^2)
    alpha = 0.7
    dxu, dyu = fl.covariant_derivative(_state(g, ax=np.full(g.shape, alpha)))
    assert np.allclose(dxu[g.interior], 1j * np.sin(alpha * g.h) / g.h, atol=1e-13)
    assert abs(dxu[5, 5] - 1j * alpha) < alpha ** 3 * g.h ** 2
    assert np.max(np.abs(dyu)) < 1e-13
    dxz, dyz = fl.covariant_derivative(_state(g, u=g.z.astype(complex)))
    assert np.allclose(dxz, 1.0, atol=1e-12) and np.allclose(dyz, 1j, atol=1e-12)


def test_dbar_examples(rect16):
    g = rect16
    assert np.max(np.abs(fl.dbar(_state(g, u=g.z.astype(complex))))) < 1e-13
    assert np.allclose(fl.dbar(_state(g, u=np.conj(g.z)))[g.interior], 1.0, atol=1e-13)


def _dbar_gauged_holomorphic(n):
    g = make_grid("rectangle", n)
    sigma = 0.4 * np.sin(np.pi * g.x) ** 2 * np.sin(np.pi * g.y) ** 2
    s = fl.apply_complex_gauge(_state(g, u=(g.z - 0.43 - 0.52j).astype(complex)), sigma)
    return l2_norm(g, fl.dbar(s))


def test_complex_gauge_preserves_holomorphicity():
    errs = [_dbar_gauged_holomorphic(n) for n in (16, 32, 64)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() > 1.8
    assert errs[-1] < 1e-3


def test_unitary_gauge_examples(rect16):
    s = smooth_rect_state()
    t = fl.apply_unitary_gauge(s, 0.8)
    # d of a constant is zero up to rounding in the one-sided edge stencil
    assert np.allclose(t.ax, s.ax, atol=1e-13, rtol=0) and np.allclose(t.ay, s.ay, atol=1e-13, rtol=0)
    assert np.allclose(t.u, np.exp(0.8j) * s.u)
    theta = np.cos(2 * s.grid.x + s.grid.y)
    assert np.max(np.abs(fl.curvature(fl.apply_unitary_gauge(s, theta)) - fl.curvature(s))) < 1e-12


def test_complex_gauge_examples():
    s = smooth_rect_state()
    same = fl.apply_complex_gauge(s, 0.0)
    assert np.array_equal(same.u, s.u) and np.array_equal(same.ax, s.ax)
    scaled = fl.apply_complex_gauge(s, 0.3)
    assert np.allclose(scaled.ax, s.ax, atol=1e-13, rtol=0)
    assert np.allclose(np.abs(scaled.u), np.exp(0.3) * np.abs(s.u))


def test_complex_gauge_shifts_curvature_by_laplacian():
    s = smooth_rect_state()
    g = s.grid
    sigma = np.sin(np.pi * g.x) * np.sin(2 * np.pi * g.y)
    moved = fl.apply_complex_gauge(s, sigma)
    assert np.allclose(fl.curvature(moved), fl.curvature(s) - fl.laplacian(g, sigma), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["rect", "torus0", "torus1"]))
def test_gauge_composition(seed, kind):
    s = smooth_rect_state(12) if kind == "rect" else \
        smooth_torus_state(12, degree=int(kind[-1]), lx=4.0)
    rng = np.random.default_rng(seed)
    g = s.grid
    s1, t1, s2, t2 = (0.3 * rng.standard_normal(g.shape) for _ in range(4))
    a = fl.apply_complex_gauge(fl.apply_complex_gauge(s, s1, t1), s2, t2)
    b = fl.apply_complex_gauge(s, s1 + s2, t1 + t2)
    for x, y in ((a.ax, b.ax), (a.ay, b.ay), (a.u, b.u)):
        assert np.max(np.abs(x - y)) < 1e-12 * max(1.0, np.max(np.abs(y)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_unitary_gauge_keeps_curvature_and_flux(seed):
    s = smooth_torus_state(12, degree=1, lx=4.0)
    theta = np.random.default_rng(seed).standard_normal(s.grid.shape)
    t = fl.apply_unitary_gauge(s, theta)
    assert np.max(np.abs(fl.curvature(t) - fl.curvature(s))) < 1e-12
    assert abs(integrate(s.grid, fl.curvature(t)) - 2 * np.pi) < 1e-10
    assert abs(integrate(s.grid, fl.curvature(fl.apply_complex_gauge(s, theta))) - 2 * np.pi) < 1e-10


def _dbar_gauge_gap(state):
    g = state.grid
    lx, ly = g.spec.lx, g.spec.ly
    theta = np.sin(2 * np.pi * g.x / lx) * np.cos(4 * np.pi * g.y / ly)
    moved = fl.apply_unitary_gauge(state, theta)
    return abs(l2_norm(g, fl.dbar(moved)) - l2_norm(g, fl.dbar(state)))


@pytest.mark.parametrize("make, sizes", [
    (smooth_rect_state, (64, 128, 256)),
    (lambda n: smooth_torus_state(n, degree=1, lx=4.0), (16, 32, 64)),
])
def test_dbar_norm_unitary_invariance_converges(make, sizes):
    # |D_x u| and |D_y u| are exactly invariant; only the cross term of
    # |dbar|^2 carries a truncation error
    gaps = np.array([_dbar_gauge_gap(make(n)) for n in sizes])
    assert np.log2(gaps[:-1] / gaps[1:]).min() >= 1.9


def test_theta_section_seam_rule():
    g = make_grid("torus", 24, lx=6.0)
    u = fl.theta_section(g, 2)
    s = fl.State(g, np.zeros(g.shape), np.zeros(g.shape), u, degree=2)
    up, um = fl.section_neighbors(s, 0)
    assert np.allclose(up[-1], u[0] * fl.seam_multiplier(g, 2))
    assert np.allclose(um[0], u[-1] * np.conj(fl.seam_multiplier(g, 2)))
    # the neighbour across the seam matches the periodized sum continued past lx
    b = fl.background_flux_density(g, 2)
    x0 = 0.4713 * 6.0 - 6.0 / 4
    x = 6.0
    cont = sum(np.exp(-0.5 * b * (x - x0 - n * 3.0) ** 2 - 2j * np.pi * n * g.y[0] / 6.0)
               for n in range(-40, 41))
    ref = sum(np.exp(-0.5 * b * (0.0 - x0 - n * 3.0) ** 2 - 2j * np.pi * n * g.y[0] / 6.0)
              for n in range(-40, 41))
    assert np.allclose(cont / np.max(np.abs(ref)), ref / np.max(np.abs(ref)) * fl.seam_multiplier(g, 2),
                       atol=1e-12)
