"""Uniform node grids on a flat torus or a rectangle, with trapezoid quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOPOLOGIES = ("torus", "rectangle")
INNER_KINDS = ("scalar", "one_form", "complex")


@dataclass(frozen=True)
class GridSpec:
    topology: str
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx, ny must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need nx, ny >= 4, got ({self.nx}, {self.ny})")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("side lengths must be positive")
        hx, hy = self.lx / self.nx, self.ly / self.ny
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise ValueError(f"non-uniform spacing: lx/nx={hx} but ly/ny={hy}")


@dataclass(frozen=True, eq=False)
class Grid:
    """Node-colocated grid.

    Arrays are indexed ``[i, j]`` with axis 0 along x. A rectangle with
    ``nx`` cells per side has ``nx + 1`` nodes per row including both
    edges; a torus has ``nx`` nodes (the node at ``x = lx`` is the image
    of ``x = 0``).
    """

    spec: GridSpec
    h: float
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    boundary_mask: np.ndarray = field(repr=False)
    area_weight: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.shape

    @property
    def node_count(self) -> int:
        return self.x.size

    @property
    def is_torus(self) -> bool:
        return self.spec.topology == "torus"

    @property
    def area(self) -> float:
        return self.spec.lx * self.spec.ly

    @property
    def interior(self) -> tuple[slice, slice]:
        if self.is_torus:
            return (slice(None), slice(None))
        return (slice(1, -1), slice(1, -1))

    @property
    def z(self) -> np.ndarray:
        return self.x + 1j * self.y

    @property
    def center(self) -> complex:
        return complex(self.spec.lx / 2, self.spec.ly / 2)


def build_grid(spec: GridSpec) -> Grid:
    h = spec.lx / spec.nx
    if spec.topology == "torus":
        mx, my = spec.nx, spec.ny
    else:
        mx, my = spec.nx + 1, spec.ny + 1
    x, y = np.meshgrid(np.arange(mx) * h, np.arange(my) * h, indexing="ij")
    mask = np.zeros((mx, my), dtype=bool)
    if spec.topology == "torus":
        weight = np.full((mx, my), h * h)
    else:
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        wx = np.full(mx, h)
        wx[[0, -1]] = h / 2
        wy = np.full(my, h)
        wy[[0, -1]] = h / 2
        weight = np.outer(wx, wy)
    for arr in (x, y, mask, weight):
        arr.setflags(write=False)
    return Grid(spec=spec, h=h, x=x, y=y, boundary_mask=mask, area_weight=weight)


def make_grid(topology: str, nx: int, ny: int | None = None,
              lx: float = 1.0, ly: float | None = None) -> Grid:
    """Square-cell shorthand: ``ny`` and ``ly`` default to keep h uniform."""
    ny = nx if ny is None else ny
    ly = lx * ny / nx if ly is None else ly
    return build_grid(GridSpec(topology, nx, ny, lx, ly))


def _check_field(grid: Grid, f) -> np.ndarray:
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    return f


def integrate(grid: Grid, f) -> float:
    f = _check_field(grid, f)
    return float(np.sum(f * grid.area_weight))


def l2_inner(grid: Grid, f, g, kind: str = "scalar") -> float:
    """Quadrature-weighted real inner product.

    ``one_form`` fields are stacked as ``(2, *grid.shape)``; ``complex``
    pairs use ``Re(conj(f) g)``.
    """
    if kind not in INNER_KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    f, g = np.asarray(f), np.asarray(g)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    if kind == "one_form":
        if f.shape != (2, *grid.shape):
            raise ValueError(f"one-form must have shape (2, {grid.shape})")
        return integrate(grid, f[0] * g[0]) + integrate(grid, f[1] * g[1])
    _check_field(grid, f)
    if kind == "complex":
        return integrate(grid, np.real(np.conj(f) * g))
    if np.iscomplexobj(f) or np.iscomplexobj(g):
        raise ValueError("scalar kind expects real fields")
    return integrate(grid, f * g)


def l2_norm(grid: Grid, f, kind: str | None = None) -> float:
    f = np.asarray(f)
    if kind is None:
        kind = "complex" if np.iscomplexobj(f) else "scalar"
    return float(np.sqrt(max(l2_inner(grid, f, f, kind), 0.0)))


def apply_dirichlet(grid: Grid, f) -> np.ndarray:
    """Copy of ``f`` with rectangle edge nodes set to zero (no-op on a torus)."""
    out = np.array(f, copy=True)
    if not grid.is_torus:
        out[grid.boundary_mask] = 0
    return out
