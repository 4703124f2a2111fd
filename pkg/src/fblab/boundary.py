"""Free-boundary extraction and regularity measurements.

With data increasing at rate c > 0 in time, u(x, .) crosses zero at most
once per spatial node, so the boundary of the positivity set is a graph
t = H(x). H is read off by linear interpolation between the bracketing
time levels; space-time normals are built from (grad u, u_t) through the
Gauss map, with u_t always taken from the positive side of the graph
(forward difference just above H), since the time derivative may jump
across the interface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import DerivativeBundle, SpaceTimeField, finite_differences


class CrossingError(RuntimeError):
    """A column shows more than one sign change (c-violation or noise)."""


@dataclass
class FreeBoundaryGraph:
    xs: np.ndarray        # spatial sample points (1d only)
    H: np.ndarray         # crossing time per x (nan where invalid)
    gradH: np.ndarray     # discrete spatial gradient of H (nan where invalid)
    valid: np.ndarray     # mask: a sign change exists inside (t0, t1)
    level_below: np.ndarray  # index of the last level with u <= 0 (or -1)

    @property
    def count(self) -> int:
        return int(self.valid.sum())

    @property
    def empty(self) -> bool:
        return self.count == 0


def extract_graph(u: SpaceTimeField, c: float) -> FreeBoundaryGraph:
    """Crossing-time graph H(x) of the boundary of {u > 0}.

    With c > 0 the crossing is unique by time monotonicity; with c = 0
    uniqueness is merely asserted per column (fields like max(t,0) still
    have a well-defined graph). CrossingError flags any column with more
    than one sign change. Columns with no crossing are left invalid; an
    everywhere-invalid graph is legal.
    """
    if c < 0:
        raise ValueError("graph extraction requires c >= 0")
    g = u.grid
    if g.spatial_dim != 1:
        raise NotImplementedError("graph extraction is implemented for 1d fields")
    v = u.values
    pos = v > 0
    flips = pos[1:] != pos[:-1]
    nflips = flips.sum(axis=0)
    if np.any(nflips > 1):
        bad = int(np.argmax(nflips > 1))
        raise CrossingError(
            f"column x={g.xs[bad]:.6g} has {int(nflips[bad])} sign changes; "
            f"u_t >= c={c} should make the crossing unique")
    valid = nflips == 1
    H = np.full(g.nx, np.nan)
    level_below = np.full(g.nx, -1, dtype=int)
    if valid.any():
        rows = np.argmax(flips, axis=0)   # index m with u[m] <= 0 < u[m+1]
        cols = np.nonzero(valid)[0]
        m = rows[cols]
        down = v[m, cols] > 0
        if down.any():
            j = cols[int(np.argmax(down))]
            raise CrossingError(
                f"column x={g.xs[j]:.6g} crosses downward; "
                f"check_time_monotonicity(c={c}) cannot hold")
        u0 = v[m, cols]
        u1 = v[m + 1, cols]
        H[cols] = g.ts[m] + g.ht * (0.0 - u0) / (u1 - u0)
        level_below[cols] = m
    gradH = np.full(g.nx, np.nan)
    idx = np.nonzero(valid)[0]
    if idx.size >= 2:
        # central differences on the contiguous valid range, one-sided ends
        runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
        for run in runs:
            if run.size >= 2:
                gradH[run] = np.gradient(H[run], g.xs[run])
    return FreeBoundaryGraph(xs=g.xs.copy(), H=H, gradH=gradH, valid=valid,
                             level_below=level_below)


def _positive_side_level(g, H_val: float) -> int:
    """First time level at or above the crossing (clamped one below nt-1)."""
    m = int(np.searchsorted(g.ts, H_val, side="left"))
    return min(max(m, 0), g.nt - 2)


def ut_positive_side(u: SpaceTimeField, graph: FreeBoundaryGraph) -> np.ndarray:
    """Forward-difference u_t evaluated just above H(x), per valid column."""
    g = u.grid
    out = np.full(g.nx, np.nan)
    for j in np.nonzero(graph.valid)[0]:
        m = _positive_side_level(g, graph.H[j])
        if u.values[m, j] <= 0 and m + 2 <= g.nt - 1:
            m += 1                      # step fully onto the positive side
        out[j] = (u.values[m + 1, j] - u.values[m, j]) / g.ht
    return out


@dataclass
class NormalField:
    xs: np.ndarray
    H: np.ndarray
    nu: np.ndarray         # (count, n+1) unit normals, time component last
    theta: np.ndarray      # angle to the pure-time direction
    grad_norm: np.ndarray  # |grad u| at the samples
    ut: np.ndarray         # u_t from the positive side
    c: float


def normal_field(u: SpaceTimeField, graph: FreeBoundaryGraph, c: float,
                 bundle: DerivativeBundle | None = None) -> NormalField:
    """Space-time normals nu = (grad u, u_t)/|.| along the graph."""
    if graph.empty:
        raise ValueError("graph has no valid samples")
    g = u.grid
    if bundle is None:
        bundle = finite_differences(u)
    cols = np.nonzero(graph.valid)[0]
    ut = ut_positive_side(u, graph)[cols]
    gx = np.empty(cols.size)
    for i, j in enumerate(cols):
        m = _positive_side_level(g, graph.H[j])
        gx[i] = bundle.grad[0][m + 1 if u.values[m, j] <= 0 and m + 2 <= g.nt - 1
                               else m, j]
    xi = np.stack([gx, ut], axis=1)
    norms = np.sqrt((xi**2).sum(axis=1))
    if np.any(norms == 0):
        raise ValueError("vanishing (grad u, u_t) vector; normal undefined")
    nu = xi / norms[:, None]
    theta = np.arctan2(np.abs(gx), ut)
    return NormalField(xs=g.xs[cols], H=graph.H[cols], nu=nu, theta=theta,
                       grad_norm=np.abs(gx), ut=ut, c=c)


@dataclass
class LipschitzReport:
    lip: float
    grad_sup: float        # C_r = sup |grad u| over the stated cylinder
    bound: float           # C_r / c
    cylinder: tuple        # (center_x, center_t, r) the sup was taken on
    passed: bool
    slack: float = 0.1


def lipschitz_report(graph: FreeBoundaryGraph, u: SpaceTimeField, c: float,
                     bundle: DerivativeBundle | None = None) -> LipschitzReport:
    """Measured Lip(H) against the gradient-over-c bound.

    In 1d the difference quotient over any pair is a mean of consecutive
    quotients, so Lip(H) equals the max over consecutive valid pairs.
    """
    if graph.empty or graph.count < 2:
        raise ValueError("graph needs at least two valid samples")
    if c < 0:
        raise ValueError("lipschitz bound requires c >= 0")
    if bundle is None:
        bundle = finite_differences(u)
    xs = graph.xs[graph.valid]
    Hs = graph.H[graph.valid]
    quot = np.abs(np.diff(Hs)) / np.diff(xs)
    lip = float(quot.max())
    g = u.grid
    cx = float(np.median(xs))
    ct = float(np.median(Hs))
    r = max(np.abs(xs - cx).max() + np.sqrt(np.abs(Hs - ct).max()), 2 * g.hx)
    mask = (np.abs(g.xs[None, :] - cx)
            + np.sqrt(np.abs(g.ts[:, None] - ct))) < r
    grad_sup = float(bundle.grad_norm[mask].max()) if mask.any() else float(
        bundle.grad_norm.max())
    bound = grad_sup / c if c > 0 else float("inf")
    return LipschitzReport(lip=lip, grad_sup=grad_sup, bound=bound,
                           cylinder=(cx, ct, r), passed=lip <= bound * 1.1)


@dataclass
class PinchingReport:
    status: str            # "pass" | "fail" | "inconclusive"
    exponent: float
    target: float          # 1 + alpha
    rhos: np.ndarray
    sups: np.ndarray
    grad_at_center: float
    grad_tol: float


def critical_grad_tol(u: SpaceTimeField, alpha: float,
                      bundle: DerivativeBundle | None = None) -> float:
    """Threshold below which a spatial gradient counts as vanishing.

    Scales as 10 * [grad u]_{alpha} * hx^alpha with the parabolic seminorm
    of the gradient measured over the middle of the domain.
    """
    from .grids import ParabolicCylinder
    from .holder import discrete_holder_norm

    g = u.grid
    if bundle is None:
        bundle = finite_differences(u)
    gn = SpaceTimeField(g, bundle.grad_norm)
    reg = ParabolicCylinder((0.5 * (g.a + g.b),) * g.spatial_dim,
                            0.5 * (g.t0 + g.t1),
                            0.45 * (g.b - g.a))
    try:
        semi = discrete_holder_norm(gn, alpha, reg, mode="parabolic").seminorm
    except ValueError:
        semi = float(np.abs(bundle.grad_norm).max())
    # cap: a point whose gradient is comparable to the field's typical
    # gradient is never critical, even when the modulus is large (kinks)
    cap = 0.5 * float(bundle.grad_norm.max())
    return min(10.0 * max(semi, 1e-12) * g.hx**alpha, max(cap, 1e-12))


def pinching_check(graph: FreeBoundaryGraph, u: SpaceTimeField, x0: float,
                   alpha: float, c: float, grad_tol: float | None = None,
                   slack: float = 0.15) -> PinchingReport:
    """Fit sup_{|y-x0|<=rho} |H(y)-H(x0)| ~ rho^(1+alpha) over dyadic rho.

    Requires the spatial gradient to vanish at (x0, H(x0)) within grad_tol;
    otherwise the check is inconclusive by design. Passes when the fitted
    exponent is at least 1 + alpha - slack.
    """
    g = u.grid
    if grad_tol is None:
        grad_tol = critical_grad_tol(u, alpha)
    j0 = int(np.argmin(np.abs(g.xs - x0)))
    if not graph.valid[j0]:
        return PinchingReport("inconclusive", np.nan, 1 + alpha,
                              np.array([]), np.array([]), np.nan, grad_tol)
    m = _positive_side_level(g, graph.H[j0])
    # one-sided slopes so a kink (where the central difference cancels)
    # still counts as a nonvanishing gradient
    jl, jr = max(j0 - 1, 0), min(j0 + 1, g.nx - 1)
    grad0 = max(
        abs(u.values[m, jr] - u.values[m, j0]) / (g.hx * max(jr - j0, 1)),
        abs(u.values[m, j0] - u.values[m, jl]) / (g.hx * max(j0 - jl, 1)))
    if grad0 >= grad_tol:
        return PinchingReport("inconclusive", np.nan, 1 + alpha,
                              np.array([]), np.array([]), grad0, grad_tol)
    xs = graph.xs[graph.valid]
    Hs = graph.H[graph.valid]
    dist = np.abs(xs - g.xs[j0])
    rho_max = float(dist.max())
    rhos, sups = [], []
    rho = rho_max
    while rho >= 2 * g.hx:
        sel = dist <= rho
        if sel.sum() >= 2:
            s = float(np.abs(Hs[sel] - graph.H[j0]).max())
            if s > 0:
                rhos.append(rho)
                sups.append(s)
        rho /= 2
    rhos = np.asarray(rhos)
    sups = np.asarray(sups)
    if rhos.size < 3:
        return PinchingReport("inconclusive", np.nan, 1 + alpha, rhos, sups,
                              grad0, grad_tol)
    slope = float(np.polyfit(np.log(rhos), np.log(sups), 1)[0])
    status = "pass" if slope >= 1 + alpha - slack else "fail"
    return PinchingReport(status, slope, 1 + alpha, rhos, sups, grad0, grad_tol)


@dataclass
class NormalHolderReport:
    seminorm: float
    alpha: float
    sin_theta_margin: float     # max over samples of sin(theta) - bound
    refinement_ratio: float | None
    stable: bool | None


def normal_holder_report(nf: NormalField, alpha: float,
                         nf_fine: NormalField | None = None) -> NormalHolderReport:
    """Seminorm sup |nu_x - nu_y| / |x-y|^(alpha/2) over graph samples.

    The final regularity statement is for the graph in x, so only spatial
    separation enters the denominator. When a refined-grid normal field is
    supplied, stability means the two seminorms differ by less than 2x.
    Also checks the angle cone sin(theta) <= |grad u|/sqrt(|grad u|^2+c^2)
    pointwise.
    """
    if nf.xs.size < 2:
        raise ValueError("need at least two boundary samples")
    dx = np.abs(nf.xs[:, None] - nf.xs[None, :])
    dnu = np.sqrt(((nf.nu[:, None, :] - nf.nu[None, :, :]) ** 2).sum(-1))
    iu = np.triu_indices(nf.xs.size, k=1)
    semi = float(np.max(dnu[iu] / dx[iu] ** (alpha / 2)))
    bound = nf.grad_norm / np.sqrt(nf.grad_norm**2 + nf.c**2)
    margin = float(np.max(np.sin(nf.theta) - bound))
    ratio = None
    stable = None
    if nf_fine is not None:
        semi_f = normal_holder_report(nf_fine, alpha).seminorm
        hi = max(semi, semi_f)
        lo = max(min(semi, semi_f), 1e-300)
        ratio = hi / lo if hi > 0 else 1.0
        stable = ratio < 2.0
    return NormalHolderReport(seminorm=semi, alpha=alpha,
                              sin_theta_margin=margin,
                              refinement_ratio=ratio, stable=stable)
