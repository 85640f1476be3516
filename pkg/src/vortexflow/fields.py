"""Connections, sections and gauge actions for the U(1) vortex problem.

Conventions: covariant derivative D = d + iA, moment map
Phi(u) = (tau - |u|^2) / 2, unitary gauge u -> e^{i theta} u,
A -> A - d theta, complex gauge u -> e^{sigma + i theta} u,
A -> A - d theta + *d sigma with *d sigma = (-d_y sigma, d_x sigma).
Hence the curvature shifts by -Lap(sigma) with the positive Laplacian
Lap = -(d_x d_x + d_y d_y).

A degree-d bundle on the torus is the background connection (0, B x)
with B = 2 pi d / area, plus a periodic perturbation. The section is
quasi-periodic: u(x + lx, y) = exp(-2 pi i d y / ly) u(x, y).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import Grid


@dataclass(frozen=True, eq=False)
class State:
    grid: Grid
    ax: np.ndarray = field(repr=False)
    ay: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    tau: float = 1.0
    degree: int = 0

    def __post_init__(self):
        shape = self.grid.shape
        ax = np.asarray(self.ax, dtype=float)
        ay = np.asarray(self.ay, dtype=float)
        u = np.asarray(self.u, dtype=complex)
        for name, arr in (("ax", ax), ("ay", ay), ("u", u)):
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, grid is {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.degree != 0 and not self.grid.is_torus:
            raise ValueError("nonzero degree needs a torus")
        object.__setattr__(self, "ax", ax)
        object.__setattr__(self, "ay", ay)
        object.__setattr__(self, "u", u)

    def replace(self, **changes) -> "State":
        return dataclasses.replace(self, **changes)


def zero_state(grid: Grid, tau: float = 1.0) -> State:
    z = np.zeros(grid.shape)
    return State(grid, z, z, z.astype(complex), tau)


def polynomial_section(grid: Grid, zeros, scale: float = 1.0) -> np.ndarray:
    """scale * prod(z - z_k), holomorphic with A = 0."""
    u = np.full(grid.shape, complex(scale))
    for zx, zy in zeros:
        u = u * (grid.z - complex(zx, zy))
    return u


def _theta_shift(grid: Grid, degree: int, zero_x: float | None) -> float:
    d = abs(degree)
    zero_x = 0.4713 * grid.spec.lx if zero_x is None else zero_x
    return zero_x - grid.spec.lx / (2 * d)


def theta_section(grid: Grid, degree: int, scale: float = 1.0,
                  zero_x: float | None = None) -> np.ndarray:
    """Quasi-periodic section of the degree-d torus bundle with |d| zeros.

    Periodized Gaussian sum over shifts of lx/|d|; satisfies the seam rule
    exactly, so it is a valid initial section for the background bundle.
    The zeros sit at y = ly/2 and x = zero_x + k lx/|d|. The default x is
    kept off the node lattice so winding numbers are well defined.

    Moving the zeros off x = lx/(2|d|) costs a flat connection: the section
    is exactly holomorphic (d < 0) or antiholomorphic (d > 0) only together
    with the constant a_y from ``theta_offset``; ``theta_state`` pairs them.
    With D = d + iA the d < 0 section is the complex conjugate of the |d| one.
    """
    if degree == 0:
        raise ValueError("theta sections need a nonzero degree")
    if degree < 0:
        return np.conj(theta_section(grid, -degree, scale, zero_x))
    lx, ly = grid.spec.lx, grid.spec.ly
    b = background_flux_density(grid, degree)
    x0 = _theta_shift(grid, degree, zero_x)
    u = np.zeros(grid.shape, dtype=complex)
    reach = int(np.ceil(6 / (np.sqrt(b) * lx / degree))) + 2
    for n in range(-reach * degree, (reach + 1) * degree + 1):
        u += np.exp(-0.5 * b * (grid.x - x0 - n * lx / degree) ** 2
                    - 2j * np.pi * n * grid.y / ly)
    return scale * u / np.max(np.abs(u))


def theta_offset(grid: Grid, degree: int, zero_x: float | None = None) -> float:
    """Constant a_y under which theta_section has no residual d-bar (d < 0)
    or d (d > 0) component. Flat, so curvature and flux are unchanged."""
    return -background_flux_density(grid, degree) * _theta_shift(grid, degree, zero_x)


def theta_state(grid: Grid, degree: int, scale: float = 1.0, zero_x: float | None = None,
                tau: float = 1.0) -> State:
    z = np.zeros(grid.shape)
    return State(grid, z, np.full(grid.shape, theta_offset(grid, degree, zero_x)),
                 theta_section(grid, degree, scale, zero_x), tau=tau, degree=degree)


# ---------------------------------------------------------------- differences

def diff(grid: Grid, f, axis: int) -> np.ndarray:
    """Central difference; periodic on the torus, one-sided 2nd order at edges.

    ``axis`` 0 is x and 1 is y, counted on the trailing two dimensions so
    stacks of fields (e.g. time trajectories) work unchanged.
    """
    f = np.asarray(f)
    axis = axis - 2
    if grid.is_torus:
        return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * grid.h)
    return np.gradient(f, grid.h, axis=axis, edge_order=2)


def dx(grid: Grid, f) -> np.ndarray:
    return diff(grid, f, 0)


def dy(grid: Grid, f) -> np.ndarray:
    return diff(grid, f, 1)


def hodge_grad(grid: Grid, f) -> tuple[np.ndarray, np.ndarray]:
    """*df = (-d_y f, d_x f)."""
    return -dy(grid, f), dx(grid, f)


def codifferential(grid: Grid, ax, ay) -> np.ndarray:
    """d* of a 1-form: -(d_x ax + d_y ay)."""
    return -(dx(grid, ax) + dy(grid, ay))


def laplacian(grid: Grid, f) -> np.ndarray:
    """Positive Laplacian d*d built from the same central differences as
    the curvature. On the torus this is a wide (2h) stencil."""
    return -(dx(grid, dx(grid, f)) + dy(grid, dy(grid, f)))


def _diff_matrix_1d(n: int, h: float, periodic: bool) -> sp.csr_matrix:
    if periodic:
        m = sp.diags([np.full(n - 1, 0.5), np.full(n - 1, -0.5)], [1, -1], format="lil")
        m[0, n - 1] = -0.5
        m[n - 1, 0] = 0.5
    else:
        m = sp.diags([np.full(n - 1, 0.5), np.full(n - 1, -0.5)], [1, -1], format="lil")
        m[0, :3] = [-1.5, 2.0, -0.5]
        m[n - 1, n - 3:] = [0.5, -2.0, 1.5]
    return (m / h).tocsr()


def difference_matrices(grid: Grid) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse versions of dx, dy acting on C-order flattened real fields."""
    mx, my = grid.shape
    d1x = _diff_matrix_1d(mx, grid.h, grid.is_torus)
    d1y = _diff_matrix_1d(my, grid.h, grid.is_torus)
    return (sp.kron(d1x, sp.identity(my), format="csr"),
            sp.kron(sp.identity(mx), d1y, format="csr"))


def laplacian_matrix(grid: Grid) -> sp.csr_matrix:
    mdx, mdy = difference_matrices(grid)
    return (-(mdx @ mdx + mdy @ mdy)).tocsr()


# ----------------------------------------------------------------- background

def background_flux_density(grid: Grid, degree: int) -> float:
    return 2 * np.pi * degree / grid.area if degree else 0.0


def background_connection(grid: Grid, degree: int) -> tuple[np.ndarray, np.ndarray]:
    b = background_flux_density(grid, degree)
    return np.zeros(grid.shape), b * grid.x


def total_connection(state: State) -> tuple[np.ndarray, np.ndarray]:
    bx, by = background_connection(state.grid, state.degree)
    return state.ax + bx, state.ay + by


def seam_multiplier(grid: Grid, degree: int) -> np.ndarray:
    """u(x + lx, y) = m(y) u(x, y) along the x seam."""
    return np.exp(-2j * np.pi * degree * grid.y[0] / grid.spec.ly)


def section_neighbors(state: State, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """(u_{k+1}, u_{k-1}) along an axis of the torus, seam multiplier applied."""
    u = state.u
    up = np.roll(u, -1, axis)
    um = np.roll(u, 1, axis)
    if axis == 0 and state.degree:
        m = seam_multiplier(state.grid, state.degree)
        up[-1, :] = u[0, :] * m
        um[0, :] = u[-1, :] * np.conj(m)
    return up, um


def section_diff(state: State, axis: int) -> np.ndarray:
    """Plain (non-covariant) difference of u, respecting quasi-periodicity."""
    if not state.grid.is_torus:
        return diff(state.grid, state.u, axis)
    up, um = section_neighbors(state, axis)
    return (up - um) / (2 * state.grid.h)


# ------------------------------------------------------------------ operators

def curvature(state: State) -> np.ndarray:
    """*F_A = d_x a_y - d_y a_x, background flux included on the torus."""
    g = state.grid
    return (dx(g, state.ay) - dy(g, state.ax)
            + background_flux_density(g, state.degree))


def higgs_potential(state: State) -> np.ndarray:
    return 0.5 * (state.tau - np.abs(state.u) ** 2)


def _covariant_axis(u: np.ndarray, a: np.ndarray, h: float, up=None, um=None) -> np.ndarray:
    """Covariant difference along axis 0 using phase links.

    Neighbours are transported with exp(i * integral of a), the integral
    taken by rules that make |D u| exactly invariant under a -> a - d theta.
    """
    ph = np.exp(1j * h * a)
    if up is not None:
        return (ph * up - np.conj(ph) * um) / (2 * h)
    out = np.empty_like(u)
    out[1:-1] = (ph[1:-1] * u[2:] - np.conj(ph[1:-1]) * u[:-2]) / (2 * h)
    out[0] = (-3 * u[0] + 4 * np.exp(0.5j * h * (a[0] + a[1])) * u[1]
              - np.exp(2j * h * a[1]) * u[2]) / (2 * h)
    out[-1] = (3 * u[-1] - 4 * np.exp(-0.5j * h * (a[-1] + a[-2])) * u[-2]
               + np.exp(-2j * h * a[-2]) * u[-3]) / (2 * h)
    return out


def covariant_derivative(state: State) -> tuple[np.ndarray, np.ndarray]:
    """(D_x u, D_y u) with D = d + iA."""
    g = state.grid
    ax, ay = total_connection(state)
    if g.is_torus:
        upx, umx = section_neighbors(state, 0)
        upy, umy = section_neighbors(state, 1)
        return (_covariant_axis(state.u, ax, g.h, upx, umx),
                _covariant_axis(state.u, ay, g.h, upy, umy))
    d_x = _covariant_axis(state.u, ax, g.h)
    d_y = _covariant_axis(state.u.T, ay.T, g.h).T
    return d_x, d_y


def dbar(state: State) -> np.ndarray:
    d_x, d_y = covariant_derivative(state)
    return 0.5 * (d_x + 1j * d_y)


def apply_unitary_gauge(state: State, theta) -> State:
    theta = np.broadcast_to(np.asarray(theta, dtype=float), state.grid.shape)
    g = state.grid
    return state.replace(ax=state.ax - dx(g, theta), ay=state.ay - dy(g, theta),
                         u=np.exp(1j * theta) * state.u)


def apply_complex_gauge(state: State, sigma, theta=None) -> State:
    g = state.grid
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), g.shape)
    theta = np.zeros(g.shape) if theta is None else np.broadcast_to(
        np.asarray(theta, dtype=float), g.shape)
    sx, sy = hodge_grad(g, sigma)
    return state.replace(ax=state.ax - dx(g, theta) + sx,
                         ay=state.ay - dy(g, theta) + sy,
                         u=np.exp(sigma + 1j * theta) * state.u)
