"""Uniform space-time grids, parabolic geometry and finite differences.

Conventions used throughout the package:

* a field ``u`` lives on a tensor grid ``[a,b]^n x [t0,t1]`` with the time
  index first, so ``values`` has shape ``(nt, nx)`` in 1d and
  ``(nt, nx, nx)`` in 2d;
* the parabolic cylinder ``Q_r(x,t)`` is the set of points ``(y,s)`` with
  ``|x-y| + |t-s|**0.5 < r`` (future times included);
* spatial derivatives are second-order central differences at interior
  nodes and second-order one-sided stencils at the box boundary, so they
  are exact on quadratics; time differences are first order (forward,
  backward at the final level), exact on fields linear in t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [a,b]^spatial_dim x [t0,t1] with nx points per axis."""

    spatial_dim: int
    a: float
    b: float
    nx: int
    t0: float
    t1: float
    nt: int

    def __post_init__(self):
        if self.spatial_dim not in (1, 2):
            raise ValueError(f"spatial_dim must be 1 or 2, got {self.spatial_dim}")
        if self.nx < 3 or self.nt < 3:
            raise ValueError(f"need nx >= 3 and nt >= 3, got nx={self.nx}, nt={self.nt}")
        if not (self.b > self.a and self.t1 > self.t0):
            raise ValueError("empty spatial or temporal extent")
        if not np.isfinite(self.parabolic_ratio):
            raise ValueError("non-finite parabolic ratio ht/hx^2")

    @property
    def hx(self) -> float:
        return (self.b - self.a) / (self.nx - 1)

    @property
    def ht(self) -> float:
        return (self.t1 - self.t0) / (self.nt - 1)

    @property
    def parabolic_ratio(self) -> float:
        """Mesh ratio ht/hx^2, recorded for diagnostics."""
        return self.ht / self.hx**2

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.nx)

    @property
    def ts(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.nt)

    @property
    def shape(self) -> tuple:
        return (self.nt,) + (self.nx,) * self.spatial_dim

    def spatial_coords(self) -> tuple:
        """Meshgrid of spatial coordinates, one (nx, ...) array per axis."""
        axes = [self.xs] * self.spatial_dim
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def node_coords(self) -> tuple:
        """Arrays (t, x1[, x2]) broadcast to the full field shape."""
        ts = self.ts.reshape((self.nt,) + (1,) * self.spatial_dim)
        ts = np.broadcast_to(ts, self.shape)
        out = [ts]
        for k, xk in enumerate(self.spatial_coords()):
            out.append(np.broadcast_to(xk[None], self.shape))
        return tuple(out)

    def shifted(self, dx: float = 0.0, dt: float = 0.0) -> "Grid":
        """Same lattice with translated coordinates (used to re-center fields)."""
        return Grid(self.spatial_dim, self.a + dx, self.b + dx, self.nx,
                    self.t0 + dt, self.t1 + dt, self.nt)


@dataclass
class SpaceTimeField:
    """Scalar samples on a Grid, time index first."""

    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "SpaceTimeField":
        """Sample fn(x, t) (1d) or fn(x, y, t) (2d) on the grid."""
        coords = grid.node_coords()
        t = coords[0]
        if grid.spatial_dim == 1:
            vals = fn(coords[1], t)
        else:
            vals = fn(coords[1], coords[2], t)
        return cls(grid, np.asarray(vals, dtype=float) + np.zeros(grid.shape))

    def interp(self, x, t):
        """Multilinear interpolation at points (x, t); x has a trailing
        component axis in 2d."""
        from scipy.interpolate import RegularGridInterpolator

        g = self.grid
        if g.spatial_dim == 1:
            pts = np.stack([np.asarray(t, dtype=float), np.asarray(x, dtype=float)], axis=-1)
            axes = (g.ts, g.xs)
        else:
            x = np.asarray(x, dtype=float)
            pts = np.concatenate(
                [np.asarray(t, dtype=float)[..., None], x], axis=-1)
            axes = (g.ts, g.xs, g.xs)
        itp = RegularGridInterpolator(axes, self.values, method="linear",
                                      bounds_error=True)
        return itp(pts)


@dataclass(frozen=True)
class ParabolicCylinder:
    """Q_r(center) = {(y,s): |x-y| + |t-s|^(1/2) < r}; s may exceed t."""

    center_x: tuple
    center_t: float
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("cylinder radius must be positive")
        if np.isscalar(self.center_x) or isinstance(self.center_x, float):
            object.__setattr__(self, "center_x", (float(self.center_x),))
        else:
            object.__setattr__(self, "center_x", tuple(float(c) for c in self.center_x))

    def contains(self, x, t):
        """Vectorized membership test; x is (..., n) or (...,) in 1d."""
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center_x)
        if c.size == 1 and (x.ndim == 0 or x.shape[-1:] != (1,)):
            dist = np.abs(x - c[0])
        else:
            dist = np.sqrt(np.sum((x - c) ** 2, axis=-1))
        return dist + np.sqrt(np.abs(np.asarray(t, dtype=float) - self.center_t)) < self.r


def cylinder(center_x, center_t, r) -> ParabolicCylinder:
    return ParabolicCylinder(center_x, center_t, r)


@dataclass
class RegionNodes:
    """Grid nodes of a field inside a cylinder."""

    index: tuple          # tuple of index arrays, one per field axis
    t: np.ndarray
    x: np.ndarray         # (count,) in 1d, (count, 2) in 2d
    values: np.ndarray
    subresolution: bool   # r below one grid cell: emptiness expected

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def empty(self) -> bool:
        return self.count == 0


def restrict(u: SpaceTimeField, region: ParabolicCylinder) -> RegionNodes:
    """Nodes of u.grid inside region (may be empty)."""
    g = u.grid
    coords = g.node_coords()
    t = coords[0]
    if g.spatial_dim == 1:
        x = coords[1]
        mask = region.contains(x, t)
    else:
        x = np.stack([coords[1], coords[2]], axis=-1)
        mask = region.contains(x, t)
    idx = np.nonzero(mask)
    sub = region.r < max(g.hx, np.sqrt(g.ht))
    if g.spatial_dim == 1:
        xs = coords[1][idx]
    else:
        xs = np.stack([coords[1][idx], coords[2][idx]], axis=-1)
    return RegionNodes(index=idx, t=t[idx], x=xs, values=u.values[idx],
                       subresolution=sub)


def _d1(vals: np.ndarray, h: float, axis: int) -> np.ndarray:
    """First derivative: central interior, 3-point one-sided at the ends.

    Exact on quadratics along the axis.
    """
    v = np.moveaxis(vals, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def _dt_first_order(vals: np.ndarray, ht: float) -> np.ndarray:
    """Forward time difference; backward at the final level."""
    out = np.empty_like(vals)
    out[:-1] = (vals[1:] - vals[:-1]) / ht
    out[-1] = (vals[-1] - vals[-2]) / ht
    return out


@dataclass
class DerivativeBundle:
    """Finite-difference derivatives of a field.

    grad has shape (n, nt, nx...), hess (n, n, nt, nx...), ut (nt, nx...).
    """

    grad: np.ndarray
    hess: np.ndarray
    ut: np.ndarray

    @property
    def grad_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.grad**2, axis=0))


def finite_differences(u: SpaceTimeField) -> DerivativeBundle:
    """Gradient, Hessian and time derivative of u (see module docstring)."""
    g = u.grid
    if not np.all(np.isfinite(u.values)):
        raise ValueError("non-finite values in field")
    if g.nx < 3 or g.nt < 2:
        raise ValueError("grid too small for finite differences")
    n = g.spatial_dim
    grad = np.stack([_d1(u.values, g.hx, axis=1 + k) for k in range(n)])
    hess = np.stack([
        np.stack([_d1(grad[i], g.hx, axis=1 + j) for j in range(n)])
        for i in range(n)
    ])
    ut = _dt_first_order(u.values, g.ht)
    return DerivativeBundle(grad=grad, hess=hess, ut=ut)
