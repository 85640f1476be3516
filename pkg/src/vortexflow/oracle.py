"""Finite-dimensional moment-map flow on C^n with a torus action.

The torus T^k acts on x_i with integer weights w[j, i]. The moment map is
Phi_j(x) = (tau_j - sum_i w[j, i] |x_i|^2) / 2, the field theory's Phi at
n = k = w = 1, and the descent of |Phi|^2 / 2 is x_i' = (w^T Phi)_i x_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FinDimModel:
    weights: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights))
        if not np.all(w == np.round(w)):
            raise ValueError("weights must be integers")
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if tau.shape != (w.shape[0],):
            raise ValueError("tau needs one level per torus factor")
        if not np.all(np.isfinite(tau)):
            raise ValueError("tau must be finite")
        object.__setattr__(self, "weights", w.astype(float))
        object.__setattr__(self, "tau", tau)

    @property
    def n(self) -> int:
        return self.weights.shape[1]

    @property
    def k(self) -> int:
        return self.weights.shape[0]


def _point(model: FinDimModel, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    if x.shape != (model.n,):
        raise ValueError(f"expected {model.n} coordinates, got shape {x.shape}")
    return x


def findim_moment(model: FinDimModel, x) -> np.ndarray:
    x = _point(model, x)
    return 0.5 * (model.tau - model.weights @ np.abs(x) ** 2)


def findim_functional(model: FinDimModel, x) -> float:
    phi = findim_moment(model, x)
    return 0.5 * float(phi @ phi)


def descent_direction(model: FinDimModel, x) -> np.ndarray:
    x = _point(model, x)
    return (model.weights.T @ findim_moment(model, x)) * x


@dataclass
class OracleTrajectory:
    times: np.ndarray
    xs: np.ndarray
    functional: np.ndarray


def findim_flow(model: FinDimModel, x0, dt: float, t_end: float) -> OracleTrajectory:
    """Explicit Euler descent of |Phi|^2 / 2."""
    x = _point(model, x0).copy()
    phi = findim_moment(model, x)
    limit = 1.0 / max(np.max(np.abs(phi)) * np.max(np.abs(model.weights)), 1e-300)
    if dt >= limit:
        raise ValueError(f"dt={dt} above the stability limit {limit:.3g} at x0")
    steps = int(round(t_end / dt))
    xs = np.empty((steps + 1, model.n), dtype=complex)
    vals = np.empty(steps + 1)
    xs[0], vals[0] = x, findim_functional(model, x)
    for s in range(1, steps + 1):
        x = x + dt * descent_direction(model, x)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("oracle flow produced non-finite values")
        xs[s], vals[s] = x, findim_functional(model, x)
    return OracleTrajectory(np.arange(steps + 1) * dt, xs, vals)


@dataclass
class KempfNessReport:
    ts: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    monotone: bool
    zero_crossings: int


def kempf_ness_check(model: FinDimModel, x, s, samples: int = 101) -> KempfNessReport:
    """Sample t -> <Phi(exp(i t s) x), s> on [0, 1].

    The imaginary direction i s acts on x_i by exp(-t (w^T s)_i), so the
    derivative is sum_i (w^T s)_i^2 |x_i(t)|^2 >= 0.
    """
    x = _point(model, x)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if not np.any(s):
        raise ValueError("s must be nonzero")
    ws = model.weights.T @ s
    ts = np.linspace(0.0, 1.0, samples)
    vals = np.array([findim_moment(model, np.exp(-t * ws) * x) @ s for t in ts])
    der = np.diff(vals) / np.diff(ts)
    sign = np.sign(vals)
    crossings = int(np.sum(sign[1:] * sign[:-1] < 0) + np.sum(vals == 0))
    return KempfNessReport(ts, vals, der, bool(np.all(der >= -1e-12)), crossings)


def gradient_check(model: FinDimModel, x, eps: float = 1e-6) -> float:
    """Relative gap between the descent direction and minus the central
    finite-difference gradient of |Phi|^2 / 2 in the real coordinates."""
    x = _point(model, x)
    grad = np.zeros(model.n, dtype=complex)
    for i in range(model.n):
        for unit in (1.0, 1j):
            e = np.zeros(model.n, dtype=complex)
            e[i] = eps * unit
            d = (findim_functional(model, x + e) - findim_functional(model, x - e)) / (2 * eps)
            grad[i] += unit * d
    v = descent_direction(model, x)
    scale = max(float(np.linalg.norm(v)), 1e-300)
    return float(np.linalg.norm(v + grad)) / scale
