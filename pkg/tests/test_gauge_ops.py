import warnings

import numpy as np
import pytest

from vortexflow import fields as fl
from vortexflow import flow, moment
from vortexflow import gauge_ops as go
from vortexflow.grid import l2_norm, make_grid


def _state(g, u, degree=0, tau=1.0):
    z = np.zeros(g.shape)
    return fl.State(g, z, z, np.broadcast_to(np.asarray(u, dtype=complex), g.shape).copy(),
                    tau=tau, degree=degree)


def _rect_vortex_data(n=16):
    g = make_grid("rectangle", n)
    return _state(g, fl.polynomial_section(g, [(0.43, 0.55)], 3.0))


def test_hflow_vortex_stays_put(torus16):
    traj = go.hflow_run(_state(torus16, np.exp(0.2j)), 1e-3, 0.1)
    assert max(np.max(np.abs(s)) for s in traj.sigmas) < 1e-14


def test_hflow_scalar_oracle():
    tau, c = 1.3, 0.4
    g = make_grid("torus", 8)
    traj = go.hflow_run(_state(g, np.sqrt(tau) * np.exp(c), tau=tau), 1e-4, 3.0,
                        sample_times=[0.5, 1.0, 3.0])
    for t in (0.5, 1.0, 3.0):
        sig = traj.at(t)
        k = int(np.argmin(np.abs(np.array(traj.times) - t)))
        assert np.ptp(traj.sigmas[k]) < 1e-12
        w0 = np.exp(2 * c)
        w = 1 / (1 + (1 / w0 - 1) * np.exp(-tau * t))
        assert traj.sigmas[k].mean() == pytest.approx(0.5 * np.log(w) - c, abs=1e-4)
        assert np.allclose(np.abs(sig.u), np.sqrt(tau * w), atol=2e-4)
    long = go.hflow_run(traj.base, 1e-2, 40.0)
    assert long.sigmas[-1].mean() == pytest.approx(-c, abs=1e-8)


def test_hflow_keeps_dirichlet_and_decreases():
    s = _rect_vortex_data()
    traj = go.hflow_run(s, 2e-3, 0.5)
    g = s.grid
    assert all(not sig[g.boundary_mask].any() for sig in traj.sigmas)
    assert np.all(np.diff(traj.f_l2) <= 1e-12)
    assert traj.f_l2[-1] < 0.05 * traj.f_l2[0]
    with pytest.raises(KeyError):
        traj.at(0.123456)


def test_reconstruct_identity_and_formula(torus16):
    s = _rect_vortex_data()
    assert go.reconstruct_state(s, np.zeros(s.grid.shape)) == s or \
        np.array_equal(go.reconstruct_state(s, np.zeros(s.grid.shape)).u, s.u)
    g = s.grid
    sigma = 0.3 * np.sin(np.pi * g.x) * np.sin(2 * np.pi * g.y)
    direct = moment.moment_density(go.reconstruct_state(s, sigma), dirichlet=True)
    assert np.max(np.abs(direct - go.sigma_moment(s, sigma))) < 1e-12


def test_reconstruct_keeps_holomorphic_sections():
    vals = []
    for n in (16, 32, 64):
        g = make_grid("torus", n, lx=4.0)
        s = fl.theta_state(g, -1, 0.8)
        sigma = 0.3 * np.cos(2 * np.pi * g.x / 4.0) * np.sin(2 * np.pi * g.y / 4.0)
        vals.append(l2_norm(g, fl.dbar(go.reconstruct_state(s, sigma)), "complex"))
    vals = np.array(vals)
    assert np.all(np.log2(vals[:-1] / vals[1:]) >= 1.8)


def test_project_vortex_input(torus16):
    sigma, out, rep = go.project_to_vortex(_state(torus16, 1.0))
    assert rep.iterations == 0 and not sigma.any()


def test_project_constant_on_rectangle():
    g = make_grid("rectangle", 16)
    tau = 1.0
    sigma, out, rep = go.project_to_vortex(_state(g, 0.6 * np.sqrt(tau)))
    assert rep.converged
    interior = sigma[g.interior]
    # f0 = 0.32 against the lowest Dirichlet mode 2 pi^2 sets the scale
    assert np.ptp(interior) > 1e-3
    assert not sigma[g.boundary_mask].any()
    f = moment.moment_density(out, dirichlet=True)
    assert l2_norm(g, f) < 1e-10
    assert not f[g.boundary_mask].any()
    assert rep.extra["bound_ok"]


def test_project_krylov_matches_direct():
    s = _rect_vortex_data()
    a, _, _ = go.project_to_vortex(s)
    b, _, rep = go.project_to_vortex(s, method="krylov")
    assert rep.converged
    assert np.max(np.abs(a - b)) < 1e-8


def test_projection_shrinks_along_flow():
    s = _rect_vortex_data()
    g = s.grid
    norms = []
    for t_end in (0.01, 0.05, 0.2):
        tr = flow.run_flow(s, flow.FlowConfig(integrator="imex", dt=2 * g.h ** 2, t_end=t_end,
                                              tolerance=0.0))
        sigma, _, _ = go.project_to_vortex(tr.state)
        norms.append(l2_norm(g, sigma))
    assert norms[0] > norms[1] > norms[2]
    assert norms[2] < 0.1 * norms[0]


def test_coulomb_removes_exact_part():
    g = make_grid("rectangle", 24)
    chi = np.sin(np.pi * g.x) * np.sin(np.pi * g.y) * (1 + g.x)
    ref = (0.3 * g.y, -0.2 * np.cos(g.x))
    s = fl.State(g, ref[0] + fl.dx(g, chi), ref[1] + fl.dy(g, chi), np.ones(g.shape))
    theta, out = go.coulomb_gauge(s, ref)
    assert np.allclose(out.ax, ref[0], atol=1e-10) and np.allclose(out.ay, ref[1], atol=1e-10)
    assert np.allclose(theta, chi, atol=1e-10)


def test_coulomb_leaves_coclosed_part():
    g = make_grid("torus", 24)
    psi = np.sin(2 * np.pi * g.x) * np.cos(4 * np.pi * g.y)
    ax, ay = fl.hodge_grad(g, psi)
    theta, _ = go.coulomb_gauge(fl.State(g, ax, ay, np.ones(g.shape)))
    assert np.max(np.abs(theta)) < 1e-10


@pytest.mark.parametrize("topology", ["rectangle", "torus"])
def test_coulomb_idempotent(topology):
    g = make_grid(topology, 16)
    s = fl.State(g, np.sin(3 * g.y) * g.x, np.cos(2 * g.x) + g.y ** 2, np.ones(g.shape))
    _, once = go.coulomb_gauge(s)
    theta2, _ = go.coulomb_gauge(once)
    assert np.max(np.abs(theta2)) < 1e-10
    assert np.max(np.abs(fl.codifferential(g, once.ax, once.ay)[g.interior])) < 1e-10


def test_records_unitary_invariant():
    g = make_grid("torus", 16, lx=4.0)
    s = fl.State(g, 0.1 * np.sin(g.y), 0.2 * np.cos(g.x), fl.theta_section(g, -1, 0.9), degree=-1)
    # a smooth gauge: the central-difference d(theta) only tracks link
    # phases of smooth theta, which is what the vortex count needs
    rng = np.random.default_rng(3)
    k = 2 * np.pi / 4.0
    theta = sum(rng.uniform(-2, 2) * np.sin(k * (m * g.x + n * g.y) + rng.uniform(0, 6))
                for m in range(3) for n in range(3))
    r1, r2 = go.gauge_invariants(s), go.gauge_invariants(fl.apply_unitary_gauge(s, theta))
    assert go.record_distance(g, r1, r2) < 1e-10
    assert r1.vortex_count == r2.vortex_count == 1
    assert r1.flux == pytest.approx(r2.flux, abs=1e-10)


def test_records_differ_for_different_counts():
    g = make_grid("rectangle", 16)
    one = _state(g, fl.polynomial_section(g, [(0.43, 0.55)], 3.0))
    two = _state(g, fl.polynomial_section(g, [(0.3, 0.3), (0.7, 0.68)], 3.0))
    r1, r2 = go.gauge_invariants(one), go.gauge_invariants(two)
    assert r1.vortex_count != r2.vortex_count
    assert go.record_distance(g, r1, r2) > 0.05


def test_records_agree_flow_vs_projection():
    s = _rect_vortex_data()
    g = s.grid
    tr = flow.run_flow(s, flow.FlowConfig(integrator="imex", dt=2 * g.h ** 2, tolerance=1e-8))
    _, proj, _ = go.project_to_vortex(s)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        d = go.record_distance(g, go.gauge_invariants(tr.state), go.gauge_invariants(proj))
    assert d < 10 * (2 * g.h ** 2 + g.h ** 2)


def test_kempf_ness_profile_nondecreasing():
    s = _rect_vortex_data()
    g = s.grid
    s_hat = np.sin(np.pi * g.x) * np.sin(np.pi * g.y)
    s_hat[g.boundary_mask] = 0.0
    ts = np.linspace(-1.0, 1.0, 5)
    eps = 1e-5
    der = (go.kempf_ness_profile(s, s_hat, ts + eps) - go.kempf_ness_profile(s, s_hat, ts - eps))
    assert np.all(der / (2 * eps) > 0)
    bad = np.ones(g.shape)
    with pytest.raises(ValueError):
        go.kempf_ness_profile(s, bad, ts)


def test_inverse_norm_estimate():
    s = _rect_vortex_data()
    c = go.estimate_inverse_norm(s)
    assert 0 < c <= 1 / (2 * np.pi ** 2) * 1.01
