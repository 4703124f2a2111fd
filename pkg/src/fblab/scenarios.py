"""Scenario definitions: grids plus parabolic-boundary data.

Boundary data is stored as a full (nt, nx...) array of psi samples; the
solver reads only the initial level and the lateral columns, and lateral
values at substep times are linearly interpolated in t (exact for the
built-in scenarios, whose lateral data are piecewise linear in time).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import Grid, SpaceTimeField

LABELS = ("time_only", "local_cap", "self_similar_1d", "elliptic_cross",
          "collapsing_interval", "custom")

# monotonicity constant each scenario's data actually satisfies
DEFAULT_C = {"time_only": 0.0, "local_cap": 0.0, "self_similar_1d": 1.0,
             "elliptic_cross": 0.0, "collapsing_interval": 1.0, "custom": 0.0}


@dataclass
class ScenarioSpec:
    label: str
    grid: Grid
    psi: np.ndarray          # boundary/initial data samples, full field shape
    c: float                  # asserted lower bound for psi_t (0 = not asserted)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown scenario label {self.label!r}")
        self.psi = np.asarray(self.psi, dtype=float)
        if self.psi.shape != self.grid.shape:
            raise ValueError("psi shape does not match grid")
        if self.c < 0:
            raise ValueError("monotonicity constant c must be >= 0")
        if self.c > 0:
            self._check_lateral_slope()

    def _check_lateral_slope(self):
        ht = self.grid.ht
        lat = self.lateral_values()
        slopes = np.diff(lat, axis=0) / ht
        if slopes.size and slopes.min() < self.c - 1e-9:
            raise ValueError(
                f"lateral data violates psi_t >= c: min slope {slopes.min():.3e} < {self.c}")

    def lateral_values(self) -> np.ndarray:
        """Lateral data as (nt, n_boundary_nodes)."""
        if self.grid.spatial_dim == 1:
            return np.stack([self.psi[:, 0], self.psi[:, -1]], axis=1)
        edge = np.zeros(self.grid.shape[1:], dtype=bool)
        edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
        return self.psi[:, edge]

    @property
    def initial(self) -> np.ndarray:
        return self.psi[0]


def _sampled(grid: Grid, fn) -> np.ndarray:
    return SpaceTimeField.from_function(grid, fn).values


def time_only(nx: int = 201, nt: int = 201, t0: float = -0.5, t1: float = 0.5) -> ScenarioSpec:
    """Data of u = max(t, 0) on [-1,1]; exact solution of the equation."""
    grid = Grid(1, -1.0, 1.0, nx, t0, t1, nt)
    psi = _sampled(grid, lambda x, t: np.maximum(t, 0.0))
    return ScenarioSpec("time_only", grid, psi, c=0.0)


def local_cap(nx: int = 201, nt: int = 201, t1: float = 1.0) -> ScenarioSpec:
    """psi identically zero on B_1 x (0,T]; the least solution is zero."""
    grid = Grid(1, -1.0, 1.0, nx, 0.0, t1, nt)
    psi = np.zeros(grid.shape)
    return ScenarioSpec("local_cap", grid, psi, c=0.0)


def collapsing_interval(nx: int = 401, nt: int | None = None, t1: float = 0.6) -> ScenarioSpec:
    """Initial 2x^2-1 on [-1,1], lateral t+1; negative set shrinks to a point."""
    if nt is None:
        nt = nx
    grid = Grid(1, -1.0, 1.0, nx, 0.0, t1, nt)
    psi = _sampled(grid, lambda x, t: np.where(t == 0.0, 2 * x**2 - 1, t + 1.0))
    # interior values at t>0 are irrelevant to the solver; lateral columns
    # carry t+1, the initial level carries 2x^2-1 (corners agree: both 1)
    psi[0] = 2 * grid.xs**2 - 1
    return ScenarioSpec("collapsing_interval", grid, psi, c=1.0)


def moving_ramp(nx: int = 201, nt: int = 201, t0: float = -0.25, t1: float = 0.75) -> ScenarioSpec:
    """Data of u = t - |x| on [-1,1]: explicit Lipschitz free-boundary graph."""
    grid = Grid(1, -1.0, 1.0, nx, t0, t1, nt)
    psi = _sampled(grid, lambda x, t: t - np.abs(x))
    return ScenarioSpec("custom", grid, psi, c=1.0, meta={"name": "moving_ramp"})


def elliptic_cross_field(nx: int = 129, nt: int = 5) -> SpaceTimeField:
    """Frozen time-independent 2d field with a cross of vanishing gradient.

    Stand-in profile (x^2-y^2)^2/(2(x^2+y^2)): degree-2 homogeneous, gradient
    vanishing on {|x|=|y|}; used only as a measurement target, never solved.
    """
    grid = Grid(2, -1.0, 1.0, nx, 0.0, 1.0, nt)

    def profile(x, y, t):
        r2 = x**2 + y**2
        with np.errstate(invalid="ignore", divide="ignore"):
            v = (x**2 - y**2) ** 2 / (2 * r2)
        return np.where(r2 == 0, 0.0, v)

    return SpaceTimeField.from_function(grid, profile)


def by_label(label: str, **kwargs) -> ScenarioSpec:
    builders = {
        "time_only": time_only,
        "local_cap": local_cap,
        "collapsing_interval": collapsing_interval,
    }
    if label not in builders:
        raise ValueError(f"scenario {label!r} has no solver-facing builder")
    return builders[label](**kwargs)
