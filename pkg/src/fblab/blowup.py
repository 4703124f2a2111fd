"""Collapse-point location and the time-derivative blow-up proxy.

The collapsing-interval scenario shrinks its negative set to a point; the
time derivative has no uniform bound there, which at desk scale shows up
as a trend: sup |u_t| near the collapse grows as the sampling radius
shrinks and as the grid is refined. Time differences are taken by forward
differences on {u > ht} only, so no difference straddles the interface
(u_t jumps across it by construction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import SpaceTimeField


@dataclass
class CollapseEstimate:
    x_star: float
    t_star: float
    bracket: tuple            # adjacent time levels around t_star
    level: int                # last level with a negative value
    x_index: int


def locate_collapse(u: SpaceTimeField) -> CollapseEstimate:
    """Last time with min_x u < 0, bracketed by adjacent levels.

    The negative set must be nonempty at the first level and must vanish
    before the horizon.
    """
    g = u.grid
    if g.spatial_dim != 1:
        raise NotImplementedError("collapse location implemented in 1d")
    mins = u.values.min(axis=1)
    if mins[0] >= 0:
        raise ValueError("no negative set at the initial level")
    neg = np.nonzero(mins < 0)[0]
    last = int(neg[-1])
    if last == g.nt - 1:
        raise ValueError("negative set persists to the horizon; extend t1")
    if np.any(np.diff(neg) != 1):
        raise ValueError("negative set reappears after vanishing")
    j = int(np.argmin(u.values[last]))
    m0, m1 = mins[last], mins[last + 1]
    # linear interpolation of the minimum value between the two levels
    t_star = g.ts[last] + g.ht * (0.0 - m0) / (m1 - m0)
    return CollapseEstimate(x_star=float(g.xs[j]), t_star=float(t_star),
                            bracket=(float(g.ts[last]), float(g.ts[last + 1])),
                            level=last, x_index=j)


def negative_set_is_interval(u: SpaceTimeField) -> bool:
    """The nodes with u < 0 form a contiguous index range at every level."""
    for row in u.values:
        idx = np.nonzero(row < 0)[0]
        if idx.size and np.any(np.diff(idx) != 1):
            return False
    return True


def ut_forward_masked(u: SpaceTimeField) -> tuple:
    """Forward-difference u_t and its validity mask on {u > ht}.

    A node participates only if its value exceeds ht, which under
    u_t >= c ~ 1 guarantees the forward step stays on the positive side.
    """
    g = u.grid
    ut = (u.values[1:] - u.values[:-1]) / g.ht
    mask = (u.values[:-1] > g.ht) & (u.values[1:] > 0)
    return ut, mask


def ut_sup_table(u: SpaceTimeField, collapse: CollapseEstimate,
                 rhos, mode: str = "nested") -> np.ndarray:
    """sup |u_t| restricted to the positive side, per rho.

    mode "nested": sup over all of Q_rho(x*, t*) (nonincreasing in rho by
    inclusion; its growth under refinement tracks the blow-up).
    mode "annulus": sup at scale rho, over Q_rho minus Q_{rho/2} (the
    quantity that grows as rho shrinks when u_t diverges at the center).
    """
    g = u.grid
    ut, mask = ut_forward_masked(u)
    ts_mid = g.ts[:-1]
    X = np.broadcast_to(g.xs[None, :], ut.shape)
    T = np.broadcast_to(ts_mid[:, None], ut.shape)
    dist = np.abs(X - collapse.x_star) + np.sqrt(np.abs(T - collapse.t_star))
    out = np.empty(len(rhos))
    for i, rho in enumerate(rhos):
        sel = mask & (dist < rho)
        if mode == "annulus":
            sel &= dist >= rho / 2
        out[i] = np.abs(ut[sel]).max() if sel.any() else np.nan
    return out


@dataclass
class TrendReport:
    rhos: np.ndarray
    sups: np.ndarray          # nested sups, (n_resolutions, n_rhos)
    sups_at_scale: np.ndarray  # annulus sups, same layout
    nxs: list
    verdict: str              # "unbounded-consistent" | "saturating" | "inconclusive"
    log_slope: float          # annulus sup vs rho at the finest resolution
    increases_with_resolution: bool
    increases_as_rho_shrinks: bool


def ut_blowup_trend(solutions: list, rhos=None, centers=None,
                    min_gain: float = 1.02) -> TrendReport:
    """Two-way monotonicity of sup|u_t| near the collapse.

    solutions: fields at increasing resolution (>= 3). centers overrides
    collapse location with an explicit (x, t) per field (used for controls
    without a negative set). The verdict is unbounded-consistent iff at
    each fixed rho the sup grows with resolution (by at least min_gain per
    refinement) and at the finest resolution the sup grows as rho shrinks;
    ratios staying within min_gain of 1 in both directions report
    "saturating".
    """
    if len(solutions) < 3:
        raise ValueError("need solutions at three or more resolutions")
    if centers is None:
        collapses = [locate_collapse(u) for u in solutions]
    else:
        collapses = [CollapseEstimate(x_star=float(cx), t_star=float(ct),
                                      bracket=(float(ct), float(ct)),
                                      level=-1, x_index=-1)
                     for (cx, ct) in centers]
    coarsest = solutions[0].grid
    if rhos is None:
        rho_max = 0.4 * min(coarsest.b - coarsest.a,
                            2 * np.sqrt(coarsest.t1 - collapses[0].t_star))
        # a scale is resolvable when it spans a couple of cells in x and
        # its square spans a few levels in t (positive-side nodes exist)
        rho_min = max(2 * coarsest.hx, np.sqrt(4 * coarsest.ht))
        rhos = rho_max * 2.0 ** -np.arange(6)
        rhos = rhos[rhos >= rho_min]
        if rhos.size < 2:
            raise ValueError("no resolvable scale range at the coarsest grid")
    rhos = np.asarray(sorted(rhos, reverse=True), dtype=float)
    sups = np.stack([ut_sup_table(u, cpt, rhos)
                     for u, cpt in zip(solutions, collapses)])
    shell = np.stack([ut_sup_table(u, cpt, rhos, mode="annulus")
                      for u, cpt in zip(solutions, collapses)])
    nxs = [u.grid.nx for u in solutions]
    if np.any(~np.isfinite(sups)) or np.any(~np.isfinite(shell)):
        return TrendReport(rhos, sups, shell, nxs, "inconclusive", np.nan,
                           False, False)
    # resolution trend on the nested sups (each fixed rho); radius trend on
    # the scale-localized sups at the finest resolution (a nested sup can
    # never grow as rho shrinks)
    inc_res = bool(np.all(sups[1:] >= min_gain * sups[:-1]))
    fin = shell[-1]
    inc_rho = bool(np.all(fin[1:] >= min_gain * fin[:-1]))
    slope = float(np.polyfit(np.log(rhos), np.log(fin), 1)[0])
    flat = (np.all(np.abs(sups[1:] / sups[:-1] - 1) <= min_gain - 1)
            and np.all(np.abs(fin[1:] / fin[:-1] - 1) <= min_gain - 1))
    if inc_res and inc_rho:
        verdict = "unbounded-consistent"
    elif flat:
        verdict = "saturating"
    else:
        verdict = "inconclusive"
    return TrendReport(rhos=rhos, sups=sups, sups_at_scale=shell, nxs=nxs,
                       verdict=verdict, log_slope=slope,
                       increases_with_resolution=inc_res,
                       increases_as_rho_shrinks=inc_rho)


@dataclass
class CollapseReport:
    t_star: float
    t_bracket: tuple
    x_star: float
    resolutions: list
    rhos: list
    ut_sup_per_rho: list      # nested sups, rows parallel to resolutions
    ut_sup_at_scale: list     # annulus sups, same layout
    verdict: str
    log_slope: float
    negative_set_interval: bool
    min_positive_slope: float   # min forward u_t on {u > ht} (vs c)

    def to_manifest(self) -> dict:
        return {
            "t_star": self.t_star,
            "t_bracket": list(self.t_bracket),
            "x_star": self.x_star,
            "resolutions": list(self.resolutions),
            "rhos": list(self.rhos),
            "ut_sup_per_rho": [list(map(float, row))
                               for row in self.ut_sup_per_rho],
            "ut_sup_at_scale": [list(map(float, row))
                                for row in self.ut_sup_at_scale],
            "verdict": self.verdict,
            "log_slope": self.log_slope,
            "negative_set_interval": self.negative_set_interval,
            "min_positive_slope": self.min_positive_slope,
        }


def collapse_report(solutions: list, rhos=None) -> CollapseReport:
    trend = ut_blowup_trend(solutions, rhos=rhos)
    finest = solutions[-1]
    cpt = locate_collapse(finest)
    ut, mask = ut_forward_masked(finest)
    min_slope = float(ut[mask].min()) if mask.any() else np.nan
    return CollapseReport(
        t_star=cpt.t_star, t_bracket=cpt.bracket, x_star=cpt.x_star,
        resolutions=trend.nxs, rhos=list(map(float, trend.rhos)),
        ut_sup_per_rho=[list(map(float, row)) for row in trend.sups],
        verdict=trend.verdict, log_slope=trend.log_slope,
        negative_set_interval=negative_set_is_interval(finest),
        min_positive_slope=min_slope)
