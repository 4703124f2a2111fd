"""Semi-implicit solver for the regularized problem and the eps -> 0 limit.

Each time step solves (I - ht*Lap_h) u_new = u_old + ht*f_eps(u_star) with
u_star Picard-iterated to a fixed point. The reaction slope 1/eps makes the
Picard map contract at rate ~ht/eps, so the effective time step is kept
below eps/2 by substepping between stored grid levels; substep boundary
values interpolate the lateral data linearly in time.

Driving eps down a schedule yields the least solution: solutions increase
as eps decreases, and all solves in one schedule share the finest substep
grid so the discrete comparison principle applies exactly (different time
grids would otherwise blur the ordering by their O(ht) integration error).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .grids import SpaceTimeField
from .scenarios import ScenarioSpec

MONOTONE_TOL = 1e-10
MAX_SUBSTEPS = 1 << 20


class PicardError(RuntimeError):
    """Picard iteration failed to converge; carries the last sup-change."""

    def __init__(self, msg, worst_change=None, max_used=None):
        super().__init__(msg)
        self.worst_change = worst_change
        self.max_used = max_used


class MonotonicityError(RuntimeError):
    """u^eps ordering violated beyond tolerance; carries the worst node."""

    def __init__(self, msg, node=None, violation=None):
        super().__init__(msg)
        self.node = node
        self.violation = violation


class ConvergenceError(RuntimeError):
    """Schedule exhausted before the stop tolerance; carries tail diffs."""

    def __init__(self, msg, diffs=None):
        super().__init__(msg)
        self.diffs = diffs


def f_eps(x, eps: float):
    """Regularized indicator: 0 below 0, x/eps on [0, eps], 1 above."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return np.clip(np.asarray(x, dtype=float) / eps, 0.0, 1.0)


@dataclass(frozen=True)
class RegularizationSchedule:
    eps_values: tuple
    stop_tol: float = 1e-6
    max_picard: int = 200
    picard_tol: float = 1e-12

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_values)
        object.__setattr__(self, "eps_values", eps)
        if any(e <= 0 for e in eps):
            raise ValueError("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps values must be strictly decreasing")
        if self.stop_tol <= 0 or self.picard_tol <= 0 or self.max_picard < 1:
            raise ValueError("tolerances must be positive")

    @classmethod
    def default(cls, eps_min: float | None = None, **kwargs) -> "RegularizationSchedule":
        """Geometric schedule 0.1 * 2^-k, k = 0..12 (or down to eps_min)."""
        eps = [0.1 * 2.0**-k for k in range(13)]
        if eps_min is not None:
            eps = [e for e in eps if e >= eps_min * (1 - 1e-12)]
            if len(eps) < 2:
                raise ValueError("eps_min leaves fewer than two schedule values")
        return cls(tuple(eps), **kwargs)


def substeps_for(ht: float, eps: float) -> int:
    """Smallest power of two m with ht/m < eps/2 (Picard stability margin)."""
    m = 1
    while ht / m >= eps / 2:
        m *= 2
        if m > MAX_SUBSTEPS:
            raise ValueError(f"eps={eps} needs more than {MAX_SUBSTEPS} substeps")
    return m


def _lateral_substep_values(spec: ScenarioSpec, nsub: int):
    """Boundary values at substep times (1d), linear in t between levels."""
    g = spec.grid
    ts_sub = g.t0 + (g.t1 - g.t0) * np.arange(nsub + 1) / nsub
    va = np.interp(ts_sub, g.ts, spec.psi[:, 0])
    vb = np.interp(ts_sub, g.ts, spec.psi[:, -1])
    return va, vb


def solve_regularized(spec: ScenarioSpec, eps: float,
                      picard_tol: float = 1e-12, max_picard: int = 200,
                      substeps: int | None = None) -> SpaceTimeField:
    """Solve the eps-problem on the scenario grid.

    substeps overrides the automatic choice; the stability precheck
    ht_eff < eps/2 is enforced either way.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    g = spec.grid
    m = substeps if substeps is not None else substeps_for(g.ht, eps)
    ht_sub = g.ht / m
    if ht_sub >= eps / 2:
        raise ValueError(
            f"effective step {ht_sub:.3e} violates ht < eps/2 = {eps / 2:.3e}; "
            f"increase substeps")
    if g.spatial_dim == 1:
        u = _solve_1d(spec, eps, m, picard_tol, max_picard)
    else:
        u = _solve_2d(spec, eps, m, picard_tol, max_picard)
    u.meta.update(eps=eps, substeps=m, ht_eff=ht_sub)
    return u


def _solve_1d(spec, eps, m, picard_tol, max_picard):
    g = spec.grid
    nsub = (g.nt - 1) * m
    ht_sub = (g.t1 - g.t0) / nsub
    lam = ht_sub / g.hx**2
    va, vb = _lateral_substep_values(spec, nsub)
    out = np.empty(g.shape)
    out[0] = spec.initial
    status, max_used, worst = _kernels.step_chain_1d(
        np.ascontiguousarray(spec.initial, dtype=float), va, vb, m, lam,
        ht_sub, eps, picard_tol, max_picard, out)
    if status != 0:
        err = PicardError(
            f"Picard stalled at sup-change {worst:.3e} (> {picard_tol:.1e}) "
            f"with eps={eps}", worst_change=worst, max_used=max_used)
        err.last_iterate = out  # partially filled chain for post-mortems
        raise err
    fld = SpaceTimeField(g, out)
    fld.meta["picard_max_used"] = int(max_used)
    return fld


def _solve_2d(spec, eps, m, picard_tol, max_picard):
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    g = spec.grid
    nsub = (g.nt - 1) * m
    ht_sub = (g.t1 - g.t0) / nsub
    lam = ht_sub / g.hx**2
    ni = g.nx - 2
    lap = sp.diags([np.full(ni - 1, 1.0), np.full(ni, -2.0), np.full(ni - 1, 1.0)],
                   [-1, 0, 1], format="csr")
    eye = sp.identity(ni, format="csr")
    A = (sp.identity(ni * ni, format="csr")
         - lam * (sp.kron(lap, eye) + sp.kron(eye, lap))).tocsc()
    solve = spla.factorized(A)  # direct factor reused across steps; the
    # conjugate-gradient route is equivalent here and far slower in python

    ts_sub = g.t0 + (g.t1 - g.t0) * np.arange(nsub + 1) / nsub
    psi = spec.psi
    out = np.empty(g.shape)
    out[0] = psi[0]
    u = psi[0].copy()
    interior = (slice(1, -1), slice(1, -1))
    level = 0
    for j in range(nsub):
        tnew = ts_sub[j + 1]
        # boundary values at the substep time by linear interpolation
        k = min(np.searchsorted(g.ts, tnew, side="right"), g.nt - 1)
        w = (tnew - g.ts[k - 1]) / g.ht
        bc = (1 - w) * psi[k - 1] + w * psi[k]
        unew_b = u.copy()
        unew_b[0, :], unew_b[-1, :] = bc[0, :], bc[-1, :]
        unew_b[:, 0], unew_b[:, -1] = bc[:, 0], bc[:, -1]
        rhs_base = u[interior].copy()
        rhs_base[0, :] += lam * unew_b[0, 1:-1]
        rhs_base[-1, :] += lam * unew_b[-1, 1:-1]
        rhs_base[:, 0] += lam * unew_b[1:-1, 0]
        rhs_base[:, -1] += lam * unew_b[1:-1, -1]
        ustar = u[interior].copy()
        for _ in range(max_picard):
            rhs = rhs_base + ht_sub * f_eps(ustar, eps)
            unew = solve(rhs.ravel()).reshape(ni, ni)
            change = float(np.max(np.abs(unew - ustar)))
            ustar = unew
            if change < picard_tol:
                break
        else:
            raise PicardError(f"2d Picard stalled at {change:.3e}",
                              worst_change=change)
        u = unew_b
        u[interior] = ustar
        if (j + 1) % m == 0:
            level += 1
            out[level] = u
    return SpaceTimeField(g, out)


def laplacian(values: np.ndarray, hx: float, spatial_dim: int) -> np.ndarray:
    """Scheme-consistent 3/5-point Laplacian; zero on the boundary ring."""
    lap = np.zeros_like(values)
    if spatial_dim == 1:
        lap[:, 1:-1] = (values[:, 2:] - 2 * values[:, 1:-1] + values[:, :-2]) / hx**2
    else:
        lap[:, 1:-1, 1:-1] = (
            values[:, 2:, 1:-1] + values[:, :-2, 1:-1]
            + values[:, 1:-1, 2:] + values[:, 1:-1, :-2]
            - 4 * values[:, 1:-1, 1:-1]) / hx**2
    return lap


def scheme_residual(u: SpaceTimeField, chi: np.ndarray | None = None) -> np.ndarray:
    """Residual u_t - Lap_h u - chi with the scheme's backward stencil.

    Level 0 and the spatial boundary are left at zero (no residual defined
    there). chi defaults to the strict indicator of {u > 0}.
    """
    g = u.grid
    if chi is None:
        chi = (u.values > 0).astype(float)
    res = np.zeros_like(u.values)
    ut = (u.values[1:] - u.values[:-1]) / g.ht
    lap = laplacian(u.values, g.hx, g.spatial_dim)
    core = ut - lap[1:] - chi[1:]
    if g.spatial_dim == 1:
        res[1:, 1:-1] = core[:, 1:-1]
    else:
        res[1:, 1:-1, 1:-1] = core[:, 1:-1, 1:-1]
    return res


def off_interface_mask(u: SpaceTimeField, strip: float) -> np.ndarray:
    """Interior nodes (level >= 1) away from the regularization strip.

    Excludes nodes with u in (0, strip] and backward steps straddling the
    sign change, where the indicator and f_eps legitimately disagree.
    """
    v = u.values
    mask = np.zeros(v.shape, dtype=bool)
    inner = (slice(1, -1),) * u.grid.spatial_dim
    mask[(slice(1, None), *inner)] = True
    in_strip = (v > 0) & (v <= strip)
    mask &= ~in_strip
    straddle = np.zeros_like(mask)
    straddle[1:] = ((v[1:] > 0) & (v[:-1] <= strip)) | ((v[1:] <= 0) & (v[:-1] > 0))
    mask &= ~straddle
    return mask


@dataclass
class LeastSolutionResult:
    u: SpaceTimeField
    per_eps_solutions: list
    eps_values: tuple
    chi: np.ndarray
    residual: np.ndarray
    diffs: list                   # sup |u^{eps_{k+1}} - u^{eps_k}|
    converged: bool
    monotone_margin: float        # most negative ordering violation seen


def least_solution(spec: ScenarioSpec, sched: RegularizationSchedule | None = None,
                   on_no_convergence: str = "raise") -> LeastSolutionResult:
    """Run the schedule, check eps-monotonicity, return the smallest-eps field."""
    if sched is None:
        sched = RegularizationSchedule.default()
    if len(sched.eps_values) < 2:
        raise ValueError("schedule needs at least two eps values")
    g = spec.grid
    m_common = substeps_for(g.ht, min(sched.eps_values))
    fields = []
    diffs = []
    margin = 0.0
    converged = False
    for k, eps in enumerate(sched.eps_values):
        fld = solve_regularized(spec, eps, picard_tol=sched.picard_tol,
                                max_picard=sched.max_picard, substeps=m_common)
        fields.append(fld)
        if k > 0:
            gap = fields[k - 1].values - fld.values   # should be <= tol
            worst = float(gap.max())
            margin = max(margin, worst)
            if worst > MONOTONE_TOL:
                node = np.unravel_index(int(np.argmax(gap)), gap.shape)
                raise MonotonicityError(
                    f"u^eps ordering violated by {worst:.3e} at node {node} "
                    f"(eps {sched.eps_values[k - 1]:.3e} -> {eps:.3e})",
                    node=node, violation=worst)
            diffs.append(float(np.max(np.abs(fld.values - fields[k - 1].values))))
            if diffs[-1] < sched.stop_tol:
                converged = True
                break
    if not converged:
        msg = (f"schedule exhausted at tail diff {diffs[-1]:.3e} "
               f"(stop_tol {sched.stop_tol:.1e})")
        if on_no_convergence == "raise":
            raise ConvergenceError(msg, diffs=diffs)
    u = fields[-1]
    chi = (u.values > 0).astype(float)
    res = scheme_residual(u, chi)
    return LeastSolutionResult(
        u=u, per_eps_solutions=fields,
        eps_values=tuple(sched.eps_values[: len(fields)]), chi=chi,
        residual=res, diffs=diffs, converged=converged, monotone_margin=margin)


def heat_with_unit_forcing(spec: ScenarioSpec) -> SpaceTimeField:
    """Semi-implicit solve of u_t - Lap u = 1 with the scenario's data.

    This is the forced caloric companion used to log alternative solutions
    in degenerate scenarios (with zero data it is positive in the interior
    while the least solution is identically zero).
    """
    import scipy.linalg as sla

    g = spec.grid
    if g.spatial_dim != 1:
        raise NotImplementedError("unit-forcing companion implemented in 1d")
    lam = g.ht / g.hx**2
    n = g.nx - 2
    ab = np.zeros((2, n))
    ab[0, 1:] = -lam
    ab[1, :] = 1 + 2 * lam
    out = np.empty(g.shape)
    out[0] = spec.initial
    for m in range(1, g.nt):
        rhs = out[m - 1][1:-1] + g.ht
        rhs[0] += lam * spec.psi[m, 0]
        rhs[-1] += lam * spec.psi[m, -1]
        inner = sla.solveh_banded(ab, rhs)
        out[m, 0] = spec.psi[m, 0]
        out[m, -1] = spec.psi[m, -1]
        out[m, 1:-1] = inner
    return SpaceTimeField(g, out)


@dataclass
class TimeMonotonicityReport:
    min_slope: float
    c: float
    tol: float
    passed: bool
    argmin_node: tuple


def check_time_monotonicity(u: SpaceTimeField, c: float,
                            tol: float = 1e-3) -> TimeMonotonicityReport:
    """Minimum of (u(x,t2)-u(x,t1))/(t2-t1) over all x and t1 < t2.

    Any difference quotient is a mean of the consecutive-level quotients
    it spans, so the minimum over all pairs equals the minimum over
    consecutive levels; only those are evaluated.
    """
    if c < 0:
        raise ValueError("c must be >= 0")
    slopes = np.diff(u.values, axis=0) / u.grid.ht
    k = int(np.argmin(slopes))
    node = np.unravel_index(k, slopes.shape)
    min_slope = float(slopes[node])
    return TimeMonotonicityReport(min_slope=min_slope, c=c, tol=tol,
                                  passed=min_slope >= c - tol,
                                  argmin_node=node)
