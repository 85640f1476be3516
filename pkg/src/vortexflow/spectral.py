"""Eigenbasis of the 5-point Laplacian and the heat / Duhamel solution operators.

Dirichlet bases live on the interior nodes of a rectangle (sine modes),
periodic bases on all torus nodes (real Fourier modes). Both are tensor
products of 1D modes, so the modal transform is two dense matrix
products rather than one huge eigenvector matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import Grid


def _sine_modes(n: int, h: float, length: float):
    k = np.arange(1, n)
    i = np.arange(1, n)
    lam = (2 - 2 * np.cos(np.pi * k / n)) / h**2
    vec = np.sqrt(2 / length) * np.sin(np.pi * np.outer(i, k) / n)
    return lam, vec


def _fourier_modes(n: int, h: float, length: float):
    i = np.arange(n)
    cols, lams = [np.full(n, 1 / np.sqrt(length))], [0.0]
    for k in range(1, (n - 1) // 2 + 1):
        lam = (2 - 2 * np.cos(2 * np.pi * k / n)) / h**2
        cols += [np.sqrt(2 / length) * np.cos(2 * np.pi * k * i / n),
                 np.sqrt(2 / length) * np.sin(2 * np.pi * k * i / n)]
        lams += [lam, lam]
    if n % 2 == 0:
        cols.append((-1.0) ** i / np.sqrt(length))
        lams.append(4 / h**2)
    return np.array(lams), np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    grid: Grid
    boundary_kind: str
    lam: np.ndarray = field(repr=False)      # 2D array of mode eigenvalues
    vx: np.ndarray = field(repr=False)       # 1D modes along x (columns)
    vy: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)    # flat mode indices, ascending lam

    @property
    def size(self) -> int:
        return self.lam.size

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.lam.ravel()[self.order]

    @property
    def support(self) -> tuple[slice, slice]:
        return self.grid.interior

    def eigenvector(self, i: int) -> np.ndarray:
        """i-th eigenvector (ascending eigenvalue) as a full grid field."""
        kx, ky = np.unravel_index(self.order[i], self.lam.shape)
        out = np.zeros(self.grid.shape)
        out[self.support] = np.outer(self.vx[:, kx], self.vy[:, ky])
        return out

    def to_modes(self, g) -> np.ndarray:
        """Coefficients <g, e_kl> (2D array, same layout as ``lam``)."""
        g = np.asarray(g)
        if g.shape[-2:] != self.grid.shape:
            raise ValueError(f"field shape {g.shape} does not match grid {self.grid.shape}")
        h2 = self.grid.h ** 2
        inner = g[(..., *self.support)]
        return h2 * (self.vx.T @ inner @ self.vy)

    def from_modes(self, c) -> np.ndarray:
        c = np.asarray(c)
        out = np.zeros(c.shape[:-2] + self.grid.shape, dtype=np.result_type(c, float))
        out[(..., *self.support)] = self.vx @ c @ self.vy.T
        return out


def build_basis(grid: Grid, boundary_kind: str | None = None) -> SpectralBasis:
    if boundary_kind is None:
        boundary_kind = "periodic" if grid.is_torus else "dirichlet"
    if boundary_kind not in ("dirichlet", "periodic"):
        raise ValueError(f"unknown boundary kind {boundary_kind!r}")
    if (boundary_kind == "periodic") != grid.is_torus:
        raise ValueError(f"{boundary_kind} basis does not fit a {grid.spec.topology}")
    s, h = grid.spec, grid.h
    modes = _fourier_modes if grid.is_torus else _sine_modes
    lx, vx = modes(s.nx, h, s.lx)
    ly, vy = modes(s.ny, h, s.ly)
    lam = lx[:, None] + ly[None, :]
    lam[np.abs(lam) < 1e-9] = 0.0
    order = np.argsort(lam.ravel(), kind="stable")
    return SpectralBasis(grid, boundary_kind, lam, vx, vy, order)


def laplacian5_matrix(grid: Grid) -> sp.csr_matrix:
    """5-point positive Laplacian on the basis support (interior or all nodes)."""
    s, h = grid.spec, grid.h

    def one_d(n):
        if grid.is_torus:
            m = sp.diags([np.full(n, 2.0), np.full(n - 1, -1.0), np.full(n - 1, -1.0)],
                         [0, 1, -1], format="lil")
            m[0, n - 1] = m[n - 1, 0] = -1.0
        else:
            m = sp.diags([np.full(n - 1, 2.0), np.full(n - 2, -1.0), np.full(n - 2, -1.0)],
                         [0, 1, -1], format="lil")
        return m.tocsr() / h**2

    ax, ay = one_d(s.nx), one_d(s.ny)
    return (sp.kron(ax, sp.identity(ay.shape[0])) + sp.kron(sp.identity(ax.shape[0]), ay)).tocsr()


def apply_laplacian5(basis: SpectralBasis, g) -> np.ndarray:
    out = np.zeros(basis.grid.shape)
    inner = np.asarray(g)[basis.support]
    out[basis.support] = (laplacian5_matrix(basis.grid) @ inner.ravel()).reshape(inner.shape)
    return out


def dense_eigenvalues(grid: Grid) -> np.ndarray:
    """Cross-check: eigenvalues of the assembled 5-point matrix."""
    return np.linalg.eigvalsh(laplacian5_matrix(grid).toarray())


def _phi_series(x, order: int, terms: int = 10):
    """sum_n (-x)^n / (n + order)!, the entire part of the phi functions."""
    out = np.zeros_like(x)
    fact = math.factorial(order)
    for n in range(terms):
        out = out + (-x) ** n / fact
        fact *= n + order + 1
    return out


def phi1(lam, t):
    """(1 - e^{-lam t}) / lam = int_0^t e^{-lam s} ds."""
    lam = np.asarray(lam, dtype=float)
    x = lam * t
    small = np.abs(x) < 1e-3
    safe = np.where(small, 1.0, lam)
    return np.where(small, t * _phi_series(x, 1, 4), -np.expm1(-x) / safe)


def phi2(lam, t):
    """int_0^t phi1(lam, v) dv = (t - phi1) / lam."""
    lam = np.asarray(lam, dtype=float)
    x = lam * t
    small = np.abs(x) < 0.1
    safe = np.where(small, 1.0, lam)
    return np.where(small, t**2 * _phi_series(x, 2), (t - phi1(lam, t)) / safe)


def phi3(lam, t):
    """int_0^t v phi1(lam, v) dv."""
    lam = np.asarray(lam, dtype=float)
    x = lam * t
    small = np.abs(x) < 0.1
    safe = np.where(small, 1.0, lam)
    closed = (t**2 / 2 - (1 - np.exp(-x) * (1 + x)) / safe**2) / safe
    n = np.arange(10)
    coef = np.array([1.0 / ((k + 3) * math.factorial(k + 1)) for k in n])
    series = t**3 * sum(c * (-x) ** k for k, c in zip(n, coef))
    return np.where(small, series, closed)


def heat_evolve(basis: SpectralBasis, g, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("negative time")
    return basis.from_modes(np.exp(-basis.lam * t) * basis.to_modes(g))


def heat_integral(basis: SpectralBasis, g, t: float) -> np.ndarray:
    """int_0^t heat_evolve(g, s) ds."""
    if t < 0:
        raise ValueError("negative time")
    return basis.from_modes(phi1(basis.lam, t) * basis.to_modes(g))


def duhamel_weights(lam, dt):
    """Exact per-mode weights (decay, w0, w1) for piecewise-linear forcing."""
    decay = np.exp(-lam * dt)
    p1 = phi1(lam, dt)
    w1 = phi2(lam, dt) / dt
    return decay, p1 - w1, w1


def duhamel(basis: SpectralBasis, forcing, dt: float) -> np.ndarray:
    """Solution of s' + Lap s = forcing, s(0) = 0, at the forcing sample times."""
    forcing = np.asarray(forcing)
    c = basis.to_modes(forcing)
    decay, w0, w1 = duhamel_weights(basis.lam, dt)
    out = np.zeros_like(c)
    for n in range(1, len(c)):
        out[n] = decay * out[n - 1] + w0 * c[n - 1] + w1 * c[n]
    return basis.from_modes(out)


def duhamel_with_integral(basis: SpectralBasis, forcing, dt: float):
    """duhamel plus its running time integral int_0^t s, both exact for the
    same piecewise-linear forcing. Trapezoid integration of s would smear
    the fast initial transients of high modes."""
    forcing = np.asarray(forcing)
    c = basis.to_modes(forcing)
    lam = basis.lam
    decay, w0, w1 = duhamel_weights(lam, dt)
    p1, p2, p3 = phi1(lam, dt), phi2(lam, dt), phi3(lam, dt)
    v0, v1 = p3 / dt, p2 - p3 / dt
    out = np.zeros_like(c)
    integ = np.zeros_like(c)
    for n in range(1, len(c)):
        integ[n] = integ[n - 1] + p1 * out[n - 1] + v0 * c[n - 1] + v1 * c[n]
        out[n] = decay * out[n - 1] + w0 * c[n - 1] + w1 * c[n]
    return basis.from_modes(out), basis.from_modes(integ)


def poisson_solve(basis: SpectralBasis, rhs, shift: float = 0.0) -> np.ndarray:
    """(Lap + shift)^{-1} rhs by modal division."""
    if shift < 0:
        raise ValueError("shift must be nonnegative")
    c = basis.to_modes(rhs)
    denom = basis.lam + shift
    zero = denom == 0
    if zero.any():
        scale = max(np.max(np.abs(c)), 1e-300)
        if np.max(np.abs(c[zero])) > 1e-10 * max(scale, 1.0):
            raise ValueError("rhs has a component along the zero mode")
        c = np.where(zero, 0.0, c)
        denom = np.where(zero, 1.0, denom)
    return basis.from_modes(c / denom)
