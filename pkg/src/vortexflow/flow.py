"""Time integration of the gradient flow.

Three integrators share one driver:

* ``euler``: explicit steps of (A, u) along the descent direction (torus).
* ``imex``: the augmented system for (a, F, xi) with the linear heat part
  integrated exactly in the spectral basis and the moment-map terms frozen
  over a step. a and xi are advanced with the exact time integral G of F,
  so every step is a complex gauge transformation with parameter G.
* ``picard``: windows of length t0 solved by the fixed-point iteration
  x2 <- L^{-1} Q(M x0 + x2).

On a rectangle the driver measures f with edge nodes held at the Dirichlet
value 0 and restarts F from the reconstructed state after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fields as fl
from . import moment
from .spectral import SpectralBasis, build_basis, duhamel_with_integral, phi1, phi2

INTEGRATORS = ("euler", "imex", "picard")


class NumericalFailure(RuntimeError):
    pass


class NonContraction(RuntimeError):
    pass


@dataclass
class FlowConfig:
    integrator: str = "imex"
    dt: float | None = None
    t_end: float = 50.0
    output_every: int = 1
    tolerance: float = 1e-3
    max_picard_iters: int = 50
    t0_window: float = 0.05
    picard_steps: int = 16
    picard_tol: float = 1e-10
    max_halvings: int = 20
    xi_cap: float = math.inf

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt is not None and self.t_end < self.dt:
            raise ValueError("t_end must be at least dt")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        if not (self.t0_window > 0 and self.picard_steps >= 1):
            raise ValueError("picard window must be positive")


def default_dt(grid, integrator: str) -> float:
    """Explicit stability bound h^2/8; the exponential integrator takes 10x."""
    base = grid.h ** 2 / 8
    return base if integrator == "euler" else 10 * base


@dataclass
class Triple:
    """x = (a, F, xi): A = A0 + a, u = u0 + xi, F the independent moment field."""
    ax: np.ndarray
    ay: np.ndarray
    F: np.ndarray
    xi: np.ndarray

    @classmethod
    def initial(cls, base: fl.State) -> "Triple":
        f = moment.moment_density(base, dirichlet=not base.grid.is_torus)
        z = np.zeros(base.grid.shape)
        return cls(z.copy(), z.copy(), f, np.zeros(base.grid.shape, dtype=complex))

    def state(self, base: fl.State) -> fl.State:
        return base.replace(ax=base.ax + self.ax, ay=base.ay + self.ay, u=base.u + self.xi)

    def sup_distance(self, other: "Triple") -> float:
        return max(float(np.max(np.abs(a - b))) for a, b in
                   ((self.ax, other.ax), (self.ay, other.ay),
                    (self.F, other.F), (self.xi, other.xi)))


def _check_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericalFailure("non-finite values in flow step")


def euler_step(state: fl.State, dt: float) -> fl.State:
    if not state.grid.is_torus:
        raise ValueError("direct stepping is only defined on the torus")
    (vx, vy), udot = moment.flow_gradient(state)
    ax, ay, u = state.ax + dt * vx, state.ay + dt * vy, state.u + dt * udot
    _check_finite(ax, ay, u)
    return state.replace(ax=ax, ay=ay, u=u)


def imex_step(triple: Triple, base: fl.State, dt: float, basis: SpectralBasis) -> Triple:
    """One exponential-Euler step of the augmented system.

    F' = -Lap F - |u|^2 F,  a' = *dF,  xi' = F u  with u = u0 + xi.
    """
    g = base.grid
    if not g.is_torus and np.max(np.abs(triple.F[g.boundary_mask])) > 1e-12:
        raise ValueError("F violates the Dirichlet condition")
    u = base.u + triple.xi
    c = basis.to_modes(triple.F)
    nl = basis.to_modes(-np.abs(u) ** 2 * triple.F)
    lam = basis.lam
    p1 = phi1(lam, dt)
    f_new = basis.from_modes(np.exp(-lam * dt) * c + p1 * nl)
    big_g = basis.from_modes(p1 * c + phi2(lam, dt) * nl)
    sx, sy = fl.hodge_grad(g, big_g)
    u_new = u * np.exp(big_g)
    out = Triple(triple.ax + sx, triple.ay + sy, f_new, u_new - base.u)
    _check_finite(out.ax, out.ay, out.F, out.xi)
    return out


# ------------------------------------------------------------------- picard

@dataclass
class PicardResult:
    times: np.ndarray
    ax: np.ndarray = field(repr=False)
    ay: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    ratios: list
    iterations: int
    converged: bool

    def triple(self, k: int) -> Triple:
        return Triple(self.ax[k], self.ay[k], self.F[k], self.xi[k])

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.ratios)) if self.ratios else 0.0


def _cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]), axis=0)
    return out


def picard_solve(base: fl.State, t0_window: float, m_steps: int, tol: float = 1e-10,
                 max_iters: int = 50, basis: SpectralBasis | None = None,
                 xi_cap: float = math.inf) -> PicardResult:
    """Fixed-point solve of L x2 = Q(M x0 + x2) on [0, t0] at m_steps + 1 samples.

    Raises NonContraction when successive differences stop shrinking, the
    signal to retry with a shorter window.
    """
    g = base.grid
    basis = basis or build_basis(g)
    dt = t0_window / m_steps
    times = np.arange(m_steps + 1) * dt
    f0 = moment.moment_density(base, dirichlet=not g.is_torus)
    c0 = basis.to_modes(f0)
    lam = basis.lam
    tt = times[:, None, None]
    f1 = basis.from_modes(np.exp(-lam * tt) * c0)
    i1 = basis.from_modes(phi1(lam, tt) * c0)
    a1x, a1y = fl.hodge_grad(g, i1)

    shape = (m_steps + 1, *g.shape)
    f2 = np.zeros(shape)
    xi2 = np.zeros(shape, dtype=complex)
    a2x, a2y = np.zeros(shape), np.zeros(shape)
    ratios, prev, converged = [], None, False
    it = 0
    for it in range(1, max_iters + 1):
        f = f1 + f2
        u = base.u + xi2
        f2n, i2n = duhamel_with_integral(basis, -np.abs(u) ** 2 * f, dt)
        xi2n = _cumtrapz(f * u, dt)
        a2xn, a2yn = fl.hodge_grad(g, i2n)
        _check_finite(f2n, xi2n)
        step = max(float(np.max(np.abs(f2n - f2))), float(np.max(np.abs(xi2n - xi2))),
                   float(np.max(np.abs(a2xn - a2x))), float(np.max(np.abs(a2yn - a2y))))
        f2, xi2, a2x, a2y = f2n, xi2n, a2xn, a2yn
        if np.max(np.abs(xi2)) > xi_cap:
            raise NonContraction("xi left the admissible ball")
        if prev is not None and prev > 0:
            ratios.append(step / prev)
            if ratios[-1] >= 1.0 and step > tol:
                raise NonContraction(f"contraction ratio {ratios[-1]:.3g} at iteration {it}")
        if step < tol:
            converged = True
            break
        prev = step
    if not converged:
        raise NonContraction(f"no convergence in {max_iters} iterations")
    return PicardResult(times, a1x + a2x, a1y + a2y, f1 + f2, xi2, ratios, it, converged)


# ------------------------------------------------------------------- driver

@dataclass
class FlowTrace:
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    state: fl.State | None = None
    status: str = "running"
    dt: float = 0.0
    halvings: int = 0
    functional: list = field(default_factory=list)
    consistency_defect: float = 0.0

    @property
    def final(self) -> moment.Diagnostics:
        return self.rows[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def _imex_advance(state, dt, basis, trace):
    tri = imex_step(Triple.initial(state), state, dt, basis)
    new = tri.state(state)
    f_new = moment.moment_density(new, dirichlet=not state.grid.is_torus)
    trace.consistency_defect = max(trace.consistency_defect,
                                   float(np.max(np.abs(tri.F - f_new))))
    return new, dt


def _picard_advance(state, window, basis, cfg, trace):
    for _ in range(cfg.max_halvings + 1):
        try:
            res = picard_solve(state, window, cfg.picard_steps, cfg.picard_tol,
                               cfg.max_picard_iters, basis, cfg.xi_cap)
            return res.triple(-1).state(state), window
        except NonContraction:
            window /= 2
            trace.halvings += 1
    raise NumericalFailure("picard window could not be made contracting")


def run_flow(state: fl.State, config: FlowConfig, basis: SpectralBasis | None = None) -> FlowTrace:
    g = state.grid
    integ = config.integrator
    if integ == "euler" and not g.is_torus:
        raise ValueError("euler integrator needs a torus; use imex or picard")
    if integ != "euler" and basis is None:
        basis = build_basis(g)
    dirichlet = not g.is_torus
    dt = config.dt or default_dt(g, integ)
    if integ == "picard":
        dt = config.t0_window
    trace = FlowTrace(dt=dt)

    def record(step, t, st):
        trace.steps.append(step)
        trace.times.append(t)
        trace.rows.append(moment.diagnostics(st, dirichlet))

    t, step = 0.0, 0
    func = moment.functional_value(state, dirichlet)
    trace.functional.append(func)
    record(0, 0.0, state)
    tol = config.tolerance
    if math.sqrt(2 * func) < tol:
        trace.status = "converged"
    while trace.status == "running":
        if t >= config.t_end - 1e-12 * max(1.0, config.t_end):
            trace.status = "t_end"
            break
        h = min(dt, config.t_end - t)
        if integ == "euler":
            new, taken = euler_step(state, h), h
        elif integ == "imex":
            new, taken = _imex_advance(state, h, basis, trace)
        else:
            new, taken = _picard_advance(state, h, basis, config, trace)
            if taken < h:
                dt = taken
        new_func = moment.functional_value(new, dirichlet)
        if not math.isfinite(new_func):
            raise NumericalFailure("functional became non-finite")
        if new_func > func + 1e-10 * (1 + abs(func)):
            trace.halvings += 1
            if trace.halvings > config.max_halvings:
                raise NumericalFailure(f"monotonicity lost after {config.max_halvings} dt halvings")
            dt /= 2
            continue
        state, func = new, new_func
        t += taken
        step += 1
        trace.functional.append(func)
        if math.sqrt(2 * func) < tol:
            trace.status = "converged"
        if step % config.output_every == 0 or trace.status != "running" \
                or t >= config.t_end - 1e-12 * max(1.0, config.t_end):
            record(step, t, state)
    if trace.steps[-1] != step:
        record(step, t, state)
    trace.state = state
    trace.dt = dt
    return trace
