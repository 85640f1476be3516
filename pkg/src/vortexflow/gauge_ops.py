"""Complex-gauge tools: the scalar h-flow, projection onto vortices, Coulomb
gauge and gauge-invariant comparison of states.

sigma is the real (self-adjoint) part of a complex gauge transformation,
h = e^{2 sigma}. On a rectangle sigma vanishes on the edge nodes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import fields as fl
from . import moment
from .grid import integrate, l2_inner, l2_norm
from .newton import SolveReport, krylov_solve, newton_solve, sparse_direct_solver
from .spectral import SpectralBasis, build_basis, poisson_solve


class NewtonStagnation(RuntimeError):
    pass


def reconstruct_state(base: fl.State, sigma) -> fl.State:
    return fl.apply_complex_gauge(base, sigma)


def sigma_moment(base: fl.State, sigma, dirichlet: bool | None = None) -> np.ndarray:
    """f of the gauged state: *F0 - Lap(sigma) + (tau - e^{2 sigma}|u0|^2) / 2."""
    g = base.grid
    if dirichlet is None:
        dirichlet = not g.is_torus
    f = (fl.curvature(base) - fl.laplacian(g, sigma)
         + 0.5 * (base.tau - np.exp(2 * sigma) * np.abs(base.u) ** 2))
    if dirichlet:
        f[g.boundary_mask] = 0.0
    return f


# -------------------------------------------------------------------- h-flow

@dataclass
class SigmaTrajectory:
    base: fl.State = field(repr=False)
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    sigmas: list = field(default_factory=list, repr=False)
    f_l2: list = field(default_factory=list)
    status: str = "running"
    dt: float = 0.0

    def state(self, k: int = -1) -> fl.State:
        return reconstruct_state(self.base, self.sigmas[k])

    def at(self, t: float) -> fl.State:
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, t):
            raise KeyError(f"no sample at t={t}")
        return self.state(k)


def hflow_run(base: fl.State, dt: float, t_end: float, basis: SpectralBasis | None = None,
              tolerance: float = 0.0, sample_times=None, record_every: int = 1,
              max_halvings: int = 20) -> SigmaTrajectory:
    """Semi-implicit steps of d sigma/dt = f_sigma.

    sigma_{n+1} = sigma_n + (Lap5 + 1/dt)^{-1} f_sigma(sigma_n): the stiff
    Laplacian implicit in the spectral basis, the exponential explicit.
    ``sample_times`` forces steps to land on those times and records them.
    """
    g = base.grid
    basis = basis or build_basis(g)
    sigma = np.zeros(g.shape)
    traj = SigmaTrajectory(base, dt=dt)
    samples = sorted(set(float(s) for s in (sample_times or [])))

    def norm_f(s):
        return l2_norm(g, sigma_moment(base, s))

    fn = norm_f(sigma)
    traj.steps.append(0)
    traj.times.append(0.0)
    traj.sigmas.append(sigma.copy())
    traj.f_l2.append(fn)
    t, step, halvings = 0.0, 0, 0
    eps = 1e-12 * max(1.0, t_end)
    if fn < tolerance:
        traj.status = "converged"
    while traj.status == "running":
        if t >= t_end - eps:
            traj.status = "t_end"
            break
        h = min(dt, t_end - t)
        upcoming = [s for s in samples if s > t + eps]
        if upcoming:
            h = min(h, upcoming[0] - t)
        f = sigma_moment(base, sigma)
        new = sigma + poisson_solve(basis, f, shift=1.0 / h)
        if not np.all(np.isfinite(new)):
            raise FloatingPointError("h-flow produced non-finite values")
        fn_new = norm_f(new)
        if fn_new ** 2 > fn ** 2 + 1e-10 * (1 + fn ** 2):
            halvings += 1
            if halvings > max_halvings:
                raise FloatingPointError("h-flow monotonicity lost after repeated dt halving")
            dt /= 2
            continue
        sigma, fn = new, fn_new
        t += h
        step += 1
        if fn < tolerance:
            traj.status = "converged"
        on_sample = any(abs(t - s) <= eps for s in samples)
        if on_sample or step % record_every == 0 or traj.status != "running" or t >= t_end - eps:
            traj.steps.append(step)
            traj.times.append(t)
            traj.sigmas.append(sigma.copy())
            traj.f_l2.append(fn)
    traj.dt = dt
    return traj


# ---------------------------------------------------------------- projection

def _free_nodes(grid) -> np.ndarray:
    return (~grid.boundary_mask).ravel()


def kw_operator(base: fl.State, sigma) -> sp.csr_matrix:
    """Lap + e^{2 sigma}|u0|^2 on the free nodes; the Jacobian of f_sigma
    is its negative."""
    g = base.grid
    free = _free_nodes(g)
    lap = fl.laplacian_matrix(g)[free][:, free]
    pot = (np.exp(2 * sigma) * np.abs(base.u) ** 2).ravel()[free]
    return (lap + sp.diags(pot)).tocsr()


def estimate_inverse_norm(base: fl.State, sigma=None, iters: int = 60) -> float:
    """||(Lap + |u|^2)^{-1}|| in L^2 by power iteration on K^{-T} K^{-1}."""
    g = base.grid
    sigma = np.zeros(g.shape) if sigma is None else sigma
    lu = sp.linalg.splu(sp.csc_matrix(kw_operator(base, sigma)))
    v = np.random.default_rng(0).standard_normal(lu.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = lu.solve(lu.solve(v), trans="T")
        new = math.sqrt(np.linalg.norm(w))
        v = w / np.linalg.norm(w)
        if abs(new - est) < 1e-10 * new:
            est = new
            break
        est = new
    return est


def project_to_vortex(state: fl.State, tol: float = 1e-10, max_iters: int = 15,
                      method: str = "direct", basis: SpectralBasis | None = None):
    """Newton solve of f_sigma = 0 with sigma = 0 on the boundary.

    Returns (sigma, vortex state, report). The report's ``extra`` carries
    C_est and whether ||sigma|| <= 8 C_est ||f|| held; a violation only
    warns, since the bound is a continuum estimate in different norms.
    """
    g = state.grid
    free = _free_nodes(g)
    shape = g.shape
    h2 = g.h ** 2

    def embed(v):
        out = np.zeros(g.node_count)
        out[free] = v
        return out.reshape(shape)

    def residual(v):
        return sigma_moment(state, embed(v)).ravel()[free]

    def norm(r):
        return math.sqrt(h2 * float(np.dot(r, r)))

    if method == "krylov":
        basis = basis or build_basis(g)

    def solve(v, r):
        k = kw_operator(state, embed(v))
        if method == "direct":
            return -sparse_direct_solver(k)(r)
        shift = float(np.mean(np.exp(2 * embed(v)) * np.abs(state.u) ** 2))

        def prec(y):
            return poisson_solve(basis, embed(y), shift + 1e-12).ravel()[free]
        return -krylov_solve(lambda y: k @ y, r, prec)

    f0 = l2_norm(g, moment.moment_density(state, dirichlet=not g.is_torus))
    report = newton_solve(residual, solve, np.zeros(int(free.sum())), tol, max_iters, norm)
    sigma = embed(report.solution)
    if report.status in ("stagnated", "diverged"):
        raise NewtonStagnation(f"Newton {report.status} at residual {report.final_residual:.3g}")
    c_est = estimate_inverse_norm(state)
    bound = 8 * c_est * f0
    s_norm = l2_norm(g, sigma)
    report.extra = {"c_est": c_est, "sigma_l2": s_norm, "f_l2": f0,
                    "bound": bound, "bound_ok": s_norm <= bound + 1e-14}
    if not report.extra["bound_ok"]:
        warnings.warn(f"||sigma|| = {s_norm:.3g} exceeds 8 C ||f|| = {bound:.3g}",
                      RuntimeWarning, stacklevel=2)
    return sigma, reconstruct_state(state, sigma), report


# ------------------------------------------------------------------- coulomb

def coulomb_gauge(state: fl.State, reference=None):
    """Unitary gauge theta with d*(A' - A_ref) = 0, A' = A - d theta.

    Solves Lap theta = d*(A - A_ref) with the central-difference Laplacian;
    theta vanishes on the rectangle boundary, has mean zero on the torus.
    """
    g = state.grid
    if reference is None:
        reference = (np.zeros(g.shape), np.zeros(g.shape))
    rhs = fl.codifferential(g, state.ax - reference[0], state.ay - reference[1])
    if g.is_torus:
        theta = _torus_wide_poisson(g, rhs)
    else:
        free = _free_nodes(g)
        lap = fl.laplacian_matrix(g)[free][:, free]
        theta = np.zeros(g.node_count)
        theta[free] = sparse_direct_solver(lap)(rhs.ravel()[free])
        theta = theta.reshape(g.shape)
    return theta, fl.apply_unitary_gauge(state, theta)


def _torus_wide_poisson(g, rhs):
    """Invert the wide-stencil Laplacian on its range by FFT. Its symbol
    (sin^2(kx h) + sin^2(ky h)) / h^2 also vanishes at the checkerboard
    modes, which d* never produces."""
    mx, my = g.shape
    kx = 2 * np.pi * np.fft.fftfreq(mx)
    ky = 2 * np.pi * np.fft.fftfreq(my)
    sym = (np.sin(kx)[:, None] ** 2 + np.sin(ky)[None, :] ** 2) / g.h ** 2
    c = np.fft.fft2(rhs)
    zero = sym < 1e-12 / g.h ** 2
    c = np.where(zero, 0.0, c / np.where(zero, 1.0, sym))
    return np.real(np.fft.ifft2(c))


# ---------------------------------------------------------------- invariants

@dataclass(frozen=True, eq=False)
class GaugeInvariantRecord:
    abs_u: np.ndarray = field(repr=False)
    curvature: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    f_l2: float
    vortex_count: int
    flux: float


def gauge_invariants(state: fl.State) -> GaugeInvariantRecord:
    g = state.grid
    f = moment.moment_density(state)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        count = moment.vortex_count(state)
    return GaugeInvariantRecord(
        abs_u=np.abs(state.u), curvature=fl.curvature(state), f=f,
        f_l2=l2_norm(g, moment.moment_density(state, dirichlet=not g.is_torus)),
        vortex_count=count, flux=integrate(g, fl.curvature(state)))


def record_distance(grid, r1: GaugeInvariantRecord, r2: GaugeInvariantRecord) -> float:
    """Relative L^2 distance of the stacked fields (|u|, *F, f) of two records."""
    num = sum(l2_norm(grid, a - b) ** 2 for a, b in
              ((r1.abs_u, r2.abs_u), (r1.curvature, r2.curvature), (r1.f, r2.f)))
    den = sum(l2_norm(grid, a) ** 2 for a in (r1.abs_u, r1.curvature, r1.f))
    return math.sqrt(num / den) if den > 0 else math.sqrt(num)


def kempf_ness_profile(state: fl.State, s_hat, ts) -> np.ndarray:
    """<f(g_t state), s_hat> along the imaginary direction g_t = e^{-t s_hat}.

    With u -> e^{sigma} u, multiplying the Lie algebra direction by i sends
    sigma to -t s_hat; along that path the profile is nondecreasing.
    """
    g = state.grid
    s_hat = np.asarray(s_hat, dtype=float)
    if not g.is_torus and np.any(s_hat[g.boundary_mask] != 0):
        raise ValueError("direction must vanish on the boundary")
    return np.array([l2_inner(g, sigma_moment(state, -t * s_hat), s_hat) for t in ts])
