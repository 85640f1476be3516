"""The functional 1/2 ||*F + Phi(u)||^2, its descent direction, the energy and
scalar diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import astuple, dataclass

import numpy as np
from scipy import ndimage

from . import fields as fl
from .grid import apply_dirichlet, integrate, l2_norm

DIAGNOSTIC_COLUMNS = ("functional", "energy", "dbar_l2", "f_l2", "f_max", "flux",
                      "min_abs_u", "energy_identity_residual")


def moment_density(state: fl.State, dirichlet: bool = False) -> np.ndarray:
    """f = *F + (tau - |u|^2)/2.

    With ``dirichlet=True`` the rectangle edge nodes are treated as
    boundary-condition nodes and set to zero; flows on a rectangle
    measure f this way.
    """
    f = fl.curvature(state) + fl.higgs_potential(state)
    return apply_dirichlet(state.grid, f) if dirichlet else f


def functional_value(state: fl.State, dirichlet: bool = False) -> float:
    f = moment_density(state, dirichlet)
    return 0.5 * integrate(state.grid, f * f)


def flow_gradient(state: fl.State, dirichlet: bool = False):
    """Descent direction ((-d_y f, d_x f), f u)."""
    f = moment_density(state, dirichlet)
    return fl.hodge_grad(state.grid, f), f * state.u


def critical_residuals(state: fl.State, dirichlet: bool = False) -> tuple[float, float]:
    """(||df||, ||f u||); both vanish at critical points of the functional."""
    g = state.grid
    f = moment_density(state, dirichlet)
    df = np.stack([fl.dx(g, f), fl.dy(g, f)])
    return l2_norm(g, df, "one_form"), l2_norm(g, f * state.u)


def descent_rate(state: fl.State) -> float:
    """Continuum rate d/dt functional = -(||df||^2 + ||f u||^2)."""
    a, b = critical_residuals(state)
    return -(a * a + b * b)


def energy(state: fl.State) -> float:
    g = state.grid
    d_x, d_y = fl.covariant_derivative(state)
    dens = (fl.curvature(state) ** 2 + fl.higgs_potential(state) ** 2
            + np.abs(d_x) ** 2 + np.abs(d_y) ** 2)
    return 0.5 * integrate(g, dens)


def topological_term(state: fl.State) -> float:
    """T = int u*omega - int d<Phi, A>, the second piece by Stokes."""
    g = state.grid
    h = g.h
    ux, uy = fl.section_diff(state, 0), fl.section_diff(state, 1)
    jac = np.imag(np.conj(ux) * uy)
    phi = fl.higgs_potential(state)
    if g.is_torus:
        # the fundamental domain integrand is not periodic when degree != 0;
        # trapezoid end correction in x plus the background seam flux
        b = fl.background_flux_density(g, state.degree)
        lx = g.spec.lx
        t = integrate(g, jac)
        if state.degree:
            dabs = np.real(np.conj(ux[0]) * state.u[0])
            t += 0.5 * h * h * np.sum(-b * lx * dabs)
            t -= b * lx * h * np.sum(phi[0])
        return float(t)
    ax, ay = state.ax, state.ay

    def line(v):
        return h * (np.sum(v) - 0.5 * (v[0] + v[-1]))

    stokes = (line(phi[:, 0] * ax[:, 0]) + line(phi[-1, :] * ay[-1, :])
              - line(phi[:, -1] * ax[:, -1]) - line(phi[0, :] * ay[0, :]))
    return integrate(g, jac) - stokes


def energy_identity_residual(state: fl.State) -> float:
    """E - (||dbar_A u||^2 + 1/2 ||f||^2 + T).

    ||dbar_A u||^2 is the 1-form norm, twice the pointwise |dbar|^2.
    """
    g = state.grid
    f = moment_density(state)
    db = fl.dbar(state)
    rhs = integrate(g, 2 * np.abs(db) ** 2 + 0.5 * f * f) + topological_term(state)
    return energy(state) - rhs


def _corner_lattice(state: fl.State) -> np.ndarray:
    """Node values with the first row and column repeated past the seams
    on a torus, so cell (i, j) always has corners [i:i+2, j:j+2]."""
    u = state.u
    if not state.grid.is_torus:
        return u
    mx, my = u.shape
    ext = np.empty((mx + 1, my + 1), dtype=complex)
    ext[:mx, :my] = u
    ext[mx, :my] = u[0] * fl.seam_multiplier(state.grid, state.degree)
    ext[:, my] = ext[:, 0]
    return ext


def _loop_winding(values: np.ndarray) -> int:
    turns = np.angle(np.roll(values, -1) * np.conj(values))
    return int(np.rint(turns.sum() / (2 * np.pi)))


def plaquette_windings(state: fl.State) -> tuple[np.ndarray, np.ndarray]:
    """Winding number of u around each grid cell, and a mask of cells with
    |u| < 1e-12 at a corner (their winding is undefined and reported as 0)."""
    u = _corner_lattice(state)
    corners = [u[:-1, :-1], u[1:, :-1], u[1:, 1:], u[:-1, 1:]]
    bad = np.zeros(corners[0].shape, dtype=bool)
    for c in corners:
        bad |= np.abs(c) < 1e-12
    total = np.zeros(corners[0].shape)
    for k in range(4):
        total += np.angle(corners[(k + 1) % 4] * np.conj(corners[k]))
    wind = np.rint(total / (2 * np.pi)).astype(int)
    wind[bad] = 0
    return wind, bad


def vortex_count(state: fl.State) -> int:
    """Sum of cell windings. Cells touching a node where u vanishes are
    grouped into clusters and counted by the winding around the cluster's
    bounding box; only clusters whose box also touches a zero are dropped."""
    wind, bad = plaquette_windings(state)
    count = int(wind.sum())
    if not bad.any():
        return count
    u = _corner_lattice(state)
    labels, n = ndimage.label(bad)
    lost = 0
    for box in ndimage.find_objects(labels):
        i0, i1 = box[0].start, box[0].stop
        j0, j1 = box[1].start, box[1].stop
        loop = np.concatenate([u[i0:i1, j0], u[i1, j0:j1], u[i1:i0:-1, j1], u[i0, j1:j0:-1]])
        inside = wind[box][labels[box] == 0].sum()
        if np.min(np.abs(loop)) < 1e-12:
            lost += int((labels[box] > 0).sum())
            continue
        count += _loop_winding(loop) - int(inside)
    if lost:
        warnings.warn(f"{lost} cells have |u| < 1e-12 on their contour",
                      RuntimeWarning, stacklevel=2)
    return count


@dataclass(frozen=True)
class Diagnostics:
    functional: float
    energy: float
    dbar_l2: float
    f_l2: float
    f_max: float
    flux: float
    min_abs_u: float
    energy_identity_residual: float

    def as_tuple(self) -> tuple:
        return astuple(self)


def diagnostics(state: fl.State, dirichlet: bool | None = None) -> Diagnostics:
    """Scalar summary of a state. On a rectangle f is measured with the
    Dirichlet condition applied unless ``dirichlet=False``."""
    g = state.grid
    if dirichlet is None:
        dirichlet = not g.is_torus
    f = moment_density(state, dirichlet)
    f_l2 = l2_norm(g, f)
    return Diagnostics(
        functional=0.5 * integrate(g, f * f),
        energy=energy(state),
        dbar_l2=l2_norm(g, fl.dbar(state)),
        f_l2=f_l2,
        f_max=float(np.max(np.abs(f))),
        flux=integrate(g, fl.curvature(state)),
        min_abs_u=float(np.min(np.abs(state.u))),
        energy_identity_residual=energy_identity_residual(state),
    )
