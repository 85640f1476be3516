"""Acceptance criteria as runnable checks, shared by ``vortexflow verify`` and
the test suite. Each check returns a CriterionResult with a one-line detail."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import fields as fl
from . import flow, gauge_ops, moment, oracle, spectral
from .grid import l2_norm, make_grid
from .rng import DEFAULT_SEED, LCG


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


def _order(errors, factor: float = 2.0) -> list[float]:
    return [math.log(a / b) / math.log(factor) for a, b in zip(errors[:-1], errors[1:])]


def _c1_state(n_cells: int, scale: float = 4.0, offset: complex = 0) -> fl.State:
    g = make_grid("rectangle", n_cells)
    c = g.center + offset
    z = np.zeros(g.shape)
    return fl.State(g, z, z, fl.polynomial_section(g, [(c.real, c.imag)], scale))


def _imex_config(g, tolerance: float = 1e-3, **kw) -> flow.FlowConfig:
    return flow.FlowConfig(integrator="imex", dt=2 * g.h ** 2, t_end=50.0,
                           tolerance=tolerance, **kw)


def _random_theta(g, rng: LCG, modes: int = 3) -> np.ndarray:
    """Smooth periodic gauge function from a few random Fourier modes."""
    lx, ly = g.spec.lx, g.spec.ly
    theta = np.zeros(g.shape)
    for _ in range(modes):
        m, n = rng.integer(0, 4), rng.integer(0, 4)
        amp, phase = rng.uniform(-1, 1), rng.uniform(0, 2 * np.pi)
        theta += amp * np.sin(2 * np.pi * (m * g.x / lx + n * g.y / ly) + phase)
    return theta


# ---------------------------------------------------------------- criteria

def criterion_1(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    state = _c1_state(32)
    g = state.grid
    t0 = time.perf_counter()
    tr = flow.run_flow(state, _imex_config(g))
    wall = time.perf_counter() - t0
    vals = np.array(tr.functional)
    slack = 1e-10 * (1 + np.abs(vals[:-1]))
    monotone = bool(np.all(vals[1:] <= vals[:-1] + slack))
    f_l2 = tr.final.f_l2
    ok = monotone and tr.status == "converged" and f_l2 < 1e-3 and tr.times[-1] <= 50 and wall < 60
    return ok, (f"monotone={monotone} steps={tr.steps[-1]} t={tr.times[-1]:.3f} "
                f"||f||={f_l2:.2e} halvings={tr.halvings} wall={wall:.1f}s")


def criterion_2(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    rng = LCG(seed)
    g = make_grid("rectangle", 32)
    z = np.zeros(g.shape)
    parts, ok = [], True
    for _ in range(5):
        deg = rng.integer(1, 4)
        zeros = [(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)) for _ in range(deg)]
        scale = rng.uniform(1.0, 4.0)
        state = fl.State(g, z, z, fl.polynomial_section(g, zeros, scale))
        tr = flow.run_flow(state, _imex_config(g))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            count = moment.vortex_count(tr.state)
        good = tr.status == "converged" and tr.final.f_l2 < 1e-3 and count == deg
        ok &= good
        parts.append(f"d={deg} t={tr.times[-1]:.2f} ||f||={tr.final.f_l2:.1e} count={count}")
    return ok, "; ".join(parts)


def _gauge_check_state(kind: str) -> fl.State:
    if kind == "rectangle":
        g = make_grid("rectangle", 24)
        u = fl.polynomial_section(g, [(0.31, 0.42), (0.68, 0.57)], 3.0)
        return fl.State(g, 0.4 * np.sin(np.pi * g.y), 0.3 * np.cos(np.pi * g.x) * g.y, u)
    return _smooth_degree_one_state(24)


def criterion_3(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    rng = LCG(seed)
    worst = 0.0
    count_ok = True
    for kind in ("rectangle", "torus"):
        base = _gauge_check_state(kind)
        g = base.grid
        ref_f = moment.moment_density(base)
        ref = (moment.functional_value(base), moment.energy(base),
               moment.diagnostics(base).flux)
        ref_count = moment.vortex_count(base)
        for _ in range(10):
            st = fl.apply_unitary_gauge(base, _random_theta(g, rng))
            f = moment.moment_density(st)
            vals = (moment.functional_value(st), moment.energy(st), moment.diagnostics(st).flux)
            worst = max(worst, float(np.max(np.abs(f - ref_f))),
                        *(abs(a - b) / max(1.0, abs(b)) for a, b in zip(vals, ref)))
            count_ok &= moment.vortex_count(st) == ref_count
    return worst < 1e-10 and count_ok, f"20 gauges, max change {worst:.1e}, counts stable={count_ok}"


def _smooth_torus_state(n_cells: int) -> fl.State:
    g = make_grid("torus", n_cells)
    tp = 2 * np.pi
    u = 0.8 + 0.3 * np.exp(1j * tp * g.x) + 0.2j * np.sin(tp * g.y)
    return fl.State(g, 0.2 * np.sin(tp * g.y), 0.3 * np.cos(tp * g.x), u)


def f_residual(state: fl.State, dt: float) -> float:
    """sup |(f_{t+dt} - f_t)/dt + Lap f + |u|^2 f| over one direct step,
    with the central-difference Laplacian the discrete flow produces."""
    g = state.grid
    f0 = moment.moment_density(state)
    f1 = moment.moment_density(flow.euler_step(state, dt))
    res = (f1 - f0) / dt + fl.laplacian(g, f0) + np.abs(state.u) ** 2 * f0
    return float(np.max(np.abs(res)))


def criterion_4(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    st = _smooth_torus_state(32)
    dt0 = st.grid.h ** 2 / 8
    by_dt = [f_residual(st, dt0 / 2 ** k) for k in range(4)]
    by_h = [f_residual(_smooth_torus_state(n), (1.0 / n) ** 2 / 8) for n in (16, 32, 64)]
    o_dt, o_h = _order(by_dt), _order(by_h)
    ok = min(o_dt) >= 0.9 and min(o_h) >= 1.8
    return ok, (f"dt orders {', '.join(f'{o:.2f}' for o in o_dt)}; "
                f"h orders {', '.join(f'{o:.2f}' for o in o_h)}")


def hflow_vs_direct(n_cells: int, times=(1.0, 5.0, 20.0), lx: float = 8.0) -> list[float]:
    g = make_grid("torus", n_cells, lx=lx)
    z = np.zeros(g.shape)
    base = fl.State(g, z, z, np.full(g.shape, 0.5 + 0j))
    dt = g.h ** 2 / 8
    traj = gauge_ops.hflow_run(base, dt, max(times), sample_times=list(times),
                               record_every=10 ** 9)
    state, t, errs = base, 0.0, []
    for target in times:
        cfg = flow.FlowConfig(integrator="euler", dt=dt, t_end=target - t, tolerance=0.0,
                              output_every=10 ** 9)
        state = flow.run_flow(state, cfg).state
        t = target
        errs.append(gauge_ops.record_distance(
            g, gauge_ops.gauge_invariants(state), gauge_ops.gauge_invariants(traj.at(target))))
    return errs


def criterion_5(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    e32, e64 = hflow_vs_direct(32), hflow_vs_direct(64)
    ok = max(e32) < 0.05 and max(e64) < 0.015
    return ok, (f"32: {', '.join(f'{e:.1e}' for e in e32)}; "
                f"64: {', '.join(f'{e:.1e}' for e in e64)}")


def imex_triples(base: fl.State, dt: float, steps: int, basis) -> list[flow.Triple]:
    """IMEX steps of the augmented system (a, F, xi) without restarting F."""
    tri = flow.Triple.initial(base)
    out = [tri]
    for _ in range(steps):
        tri = flow.imex_step(tri, base, dt, basis)
        out.append(tri)
    return out


def criterion_6(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    state = _c1_state(16)
    g = state.grid
    basis = spectral.build_basis(g)
    t0, m = 0.05, 16
    res = flow.picard_solve(state, t0, m, basis=basis)
    half = flow.picard_solve(state, t0 / 2, m // 2, basis=basis)
    dt = t0 / m
    ref = imex_triples(state, dt, m, basis)
    gap = max(tri.sup_distance(res.triple(k)) for k, tri in enumerate(ref))
    bound = 10 * (dt + g.h ** 2)
    ok = max(res.ratios) < 0.5 and gap <= bound and half.mean_ratio < res.mean_ratio
    return ok, (f"max ratio {max(res.ratios):.3f}, mean {res.mean_ratio:.4f} -> "
                f"{half.mean_ratio:.4f} at t0/2, sup gap {gap:.2e} <= {bound:.2e}")


def criterion_7(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    state = _c1_state(32, offset=0.013 + 0.007j)
    g = state.grid
    parts, ok = [], True
    for tol in (1e-1, 1e-2, 3e-3):
        state = flow.run_flow(state, _imex_config(g, tol, output_every=10 ** 9)).state
        f_in = l2_norm(g, moment.moment_density(state, dirichlet=True))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _, vortex, rep = gauge_ops.project_to_vortex(state, tol=1e-11)
        f_out = l2_norm(g, moment.moment_density(vortex, dirichlet=True))
        good = (1e-3 <= f_in <= 1e-1 and f_out < 1e-10 and rep.iterations <= 15
                and rep.extra["bound_ok"])
        ok &= good
        parts.append(f"||f||={f_in:.1e}: {rep.iterations} its, final {f_out:.1e}, "
                     f"||sigma||={rep.extra['sigma_l2']:.2e} <= {rep.extra['bound']:.2e}")
    return ok, "; ".join(parts)


def uniqueness_distance(n_cells: int) -> float:
    state = _c1_state(n_cells, offset=0.013 + 0.007j)
    g = state.grid
    bump = np.sin(np.pi * g.x) ** 2 * np.sin(np.pi * g.y) ** 2
    sigma = 0.3 * bump / np.max(bump)
    moved = fl.apply_complex_gauge(state, sigma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        _, v1, _ = gauge_ops.project_to_vortex(state)
        _, v2, _ = gauge_ops.project_to_vortex(moved)
    return gauge_ops.record_distance(g, gauge_ops.gauge_invariants(v1),
                                     gauge_ops.gauge_invariants(v2))


def criterion_8(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    d33, d65 = uniqueness_distance(32), uniqueness_distance(64)
    return d33 < 0.05 and d65 < 0.02, f"33x33: {d33:.1e}, 65x65: {d65:.1e}"


def criterion_9(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    worst_heat = worst_duh = worst_semi = 0.0
    rng = LCG(seed)
    for g in (make_grid("rectangle", 16), make_grid("torus", 16, lx=2.0)):
        b = spectral.build_basis(g)
        for i in (0, 1, 7, b.size // 2, b.size - 1):
            e = b.eigenvector(i)
            lam = b.eigenvalues[i]
            t = 0.013
            worst_heat = max(worst_heat, float(np.max(np.abs(
                spectral.heat_evolve(b, e, t) - math.exp(-lam * t) * e))))
            m, dt = 8, 0.004
            out = spectral.duhamel(b, np.repeat(e[None], m + 1, axis=0), dt)
            times = np.arange(m + 1) * dt
            exact = spectral.phi1(lam, times)[:, None, None] * e[None]
            worst_duh = max(worst_duh, float(np.max(np.abs(out - exact))))
        g0 = rng.normal(size=g.shape)
        g0[g.boundary_mask] = 0.0
        a = spectral.heat_evolve(b, spectral.heat_evolve(b, g0, 0.002), 0.003)
        c = spectral.heat_evolve(b, g0, 0.005)
        worst_semi = max(worst_semi, float(np.max(np.abs(a - c))))
    ok = worst_heat < 1e-12 and worst_duh < 1e-10 and worst_semi < 1e-12
    return ok, f"heat {worst_heat:.1e}, duhamel {worst_duh:.1e}, semigroup {worst_semi:.1e}"


def _smooth_rect_state(n_cells: int) -> fl.State:
    g = make_grid("rectangle", n_cells)
    u = fl.polynomial_section(g, [(0.3, 0.4), (0.7, 0.55)], 2.0) + 0.1j * np.sin(np.pi * g.x)
    return fl.State(g, 0.3 * np.sin(np.pi * g.y) * g.x, 0.2 * np.cos(np.pi * g.x), u)


def _energy_excess(n_cells: int) -> float:
    state = _c1_state(n_cells)
    tr = flow.run_flow(state, _imex_config(state.grid))
    e = tr.column("energy")
    return float(np.max(e) - e[0])


def criterion_10(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    rect = [abs(moment.energy_identity_residual(_smooth_rect_state(n))) for n in (16, 32, 64)]
    tor = [abs(moment.energy_identity_residual(_smooth_degree_one_state(n))) for n in (16, 32, 64)]
    o_rect, o_tor = _order(rect), _order(tor)
    c33, c65 = _energy_excess(32), _energy_excess(64)
    stable = math.isfinite(c33) and math.isfinite(c65) and 0.5 <= (c65 + 1e-12) / (c33 + 1e-12) <= 2
    ok = min(o_rect + o_tor) >= 1.8 and stable
    return ok, (f"identity orders rect {', '.join(f'{o:.2f}' for o in o_rect)}, torus "
                f"{', '.join(f'{o:.2f}' for o in o_tor)}; C_measured 33x33 {c33:.3f}, 65x65 {c65:.3f}")


def _smooth_degree_one_state(n_cells: int) -> fl.State:
    g = make_grid("torus", n_cells, lx=6.0)
    u = fl.theta_section(g, 1, 0.9)
    ax = 0.2 * np.sin(2 * np.pi * g.y / 6.0)
    ay = 0.1 * np.cos(2 * np.pi * g.x / 6.0)
    return fl.State(g, ax, ay, u, degree=1)


def torus_run(degree: int, n_cells: int = 32, lx: float = 8.0, tol: float = 1e-3):
    g = make_grid("torus", n_cells, lx=lx)
    if degree:
        state = fl.theta_state(g, degree, 0.8)
    else:
        z = np.zeros(g.shape)
        state = fl.State(g, z, z, np.full(g.shape, 0.5 + 0j))
    cfg = flow.FlowConfig(integrator="euler", t_end=50.0, tolerance=tol)
    return flow.run_flow(state, cfg)


def criterion_11(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    parts, ok = [], True
    tol = 1e-3
    for degree in (0, 1, -1):
        tr = torus_run(degree, tol=tol)
        flux = tr.column("flux")
        drift = float(np.max(np.abs(flux - flux[0])))
        df, fu = moment.critical_residuals(tr.state)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            count = moment.vortex_count(tr.state)
        good = (tr.status == "converged" and drift < 1e-10 and df < 10 * tol and fu < 10 * tol)
        ok &= good
        parts.append(f"d={degree}: flux {flux[0]:.6f} drift {drift:.1e}, t={tr.times[-1]:.2f}, "
                     f"||df||={df:.1e} ||fu||={fu:.1e} count={count}")
    return ok, "; ".join(parts)


def sign_lock(dt: float = 1e-3) -> tuple[bool, float]:
    """One Euler step of the oracle at n = k = w = 1 against one direct field
    step of a spatially constant torus state with the same value."""
    model = oracle.FinDimModel([[1]], [1.0])
    x0 = 0.5
    x1 = oracle.findim_flow(model, [x0], dt, dt).xs[-1, 0]
    g = make_grid("torus", 8)
    z = np.zeros(g.shape)
    st = flow.euler_step(fl.State(g, z, z, np.full(g.shape, x0 + 0j)), dt)
    gap = float(np.max(np.abs(st.u - x1)))
    same_sign = np.all(np.sign(np.real(st.u) - x0) == np.sign(x1.real - x0))
    return bool(same_sign and gap < 1e-14), gap


def criterion_12(seed: int = DEFAULT_SEED) -> tuple[bool, str]:
    model = oracle.FinDimModel([[1]], [1.0])
    tr = oracle.findim_flow(model, [2.0], 1e-2, 20.0)
    err = abs(abs(tr.xs[-1, 0]) - 1)
    rng = LCG(seed)
    mono = 0
    for _ in range(10):
        k, n = rng.integer(1, 3), rng.integer(1, 4)
        w = np.array([[rng.integer(-2, 3) for _ in range(n)] for _ in range(k)])
        m = oracle.FinDimModel(w, [rng.uniform(0.5, 2.0) for _ in range(k)])
        x = rng.normal(size=(n,)) + 1j * rng.normal(size=(n,))
        s = rng.normal(size=(k,))
        rep = oracle.kempf_ness_check(m, x, s)
        mono += rep.monotone and rep.zero_crossings <= 1
    lock, gap = sign_lock()
    ok = err < 1e-8 and mono == 10 and lock
    return ok, f"|x(20)|-1 = {err:.1e}, monotone {mono}/10, sign lock {lock} (gap {gap:.1e})"


CRITERIA = {
    1: ("monotone descent", criterion_1),
    2: ("single-stratum convergence", criterion_2),
    3: ("discrete gauge invariance", criterion_3),
    4: ("f-evolution consistency", criterion_4),
    5: ("h-flow matches direct flow", criterion_5),
    6: ("picard contraction", criterion_6),
    7: ("vortex projection", criterion_7),
    8: ("vortex uniqueness", criterion_8),
    9: ("spectral solvers", criterion_9),
    10: ("energy identity and bound", criterion_10),
    11: ("flux conservation", criterion_11),
    12: ("oracle lock", criterion_12),
}


def run_criterion(number: int, seed: int = DEFAULT_SEED) -> CriterionResult:
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        passed, detail = fn(seed)
    except Exception as exc:  # a crash is a failed criterion, reported with its cause
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return CriterionResult(number, title, bool(passed), detail, time.perf_counter() - t0)


def run_all(numbers=None, seed: int = DEFAULT_SEED, echo=None) -> list[CriterionResult]:
    out = []
    for n in numbers or sorted(CRITERIA):
        r = run_criterion(n, seed)
        if echo:
            echo(r.line())
        out.append(r)
    return out
