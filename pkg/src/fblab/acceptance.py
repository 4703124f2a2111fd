"""Acceptance suite: ten criteria, one pass/fail line each.

Heavy solver runs are shared: the default-schedule collapsing run feeds
criteria 5 and 6; the three-resolution protocol feeds 7 (solution part),
8 (rescaled data), 9 and 10. Every tolerance is pinned here, straight
from the criteria; nothing is calibrated at run time.

Criterion 5's convergence clause is asserted exactly as stated (tail
sup-difference below 1e-6 over the default schedule, which ends at
eps = 0.1 * 2^-12). The measured tail tracks 0.35 * eps, so the clause
lands near 8e-6 and the criterion reports FAIL; the same run extended to
eps = 0.1 * 2^-16 does reach 1e-6, which the details line reports as
evidence that the method converges and only the schedule/tolerance
pairing is inconsistent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import blowup, boundary, hodograph, scenarios, selfsimilar, solver, weiss
from .grids import Grid, SpaceTimeField

SQRT2 = np.sqrt(2.0)
C_VALUES = (0.1, 1.0, 10.0)


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    details: str
    elapsed: float
    budget: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"{mark}  {self.index:2d} {self.name:<28s} "
                f"[{self.elapsed:6.1f}s/{self.budget:.0f}s]  {self.details}")


class SharedRuns:
    """Lazily computed solver artifacts reused across criteria."""

    def __init__(self):
        self._cache = {}

    def collapse_default_401(self):
        if "c401" not in self._cache:
            spec = scenarios.collapsing_interval(nx=401, nt=401, t1=0.6)
            res = solver.least_solution(spec, solver.RegularizationSchedule.default(),
                                        on_no_convergence="warn")
            self._cache["c401"] = (spec, res)
        return self._cache["c401"]

    def local_cap_default_401(self):
        if "l401" not in self._cache:
            spec = scenarios.local_cap(nx=401, nt=401)
            res = solver.least_solution(spec, solver.RegularizationSchedule.default(),
                                        on_no_convergence="warn")
            self._cache["l401"] = (spec, res)
        return self._cache["l401"]

    def collapse_triple(self):
        if "tri" not in self._cache:
            sols = []
            for nx in (201, 401, 801):
                spec = scenarios.collapsing_interval(nx=nx, nt=nx, t1=0.6)
                sched = solver.RegularizationSchedule.default(
                    eps_min=max(2 * spec.grid.ht, 1e-3))
                sols.append(solver.least_solution(
                    spec, sched, on_no_convergence="warn").u)
            self._cache["tri"] = sols
        return self._cache["tri"]


def _run(idx, name, budget, fn, shared) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        passed, details = fn(shared)
    except Exception as e:  # noqa: BLE001 - a crash is a failed criterion
        passed, details = False, f"exception {type(e).__name__}: {e}"
    dt = time.perf_counter() - t0
    if dt > budget:
        passed = False
        details += f" [over budget: {dt:.1f}s > {budget:.0f}s]"
    return CriterionResult(idx, name, passed, details, dt, budget)


def crit_1_series_anchors(shared) -> tuple:
    worst3 = worst4 = worst2 = 0.0
    for c in C_VALUES:
        s = selfsimilar.series_coefficients(c, N=12)
        worst3 = max(worst3, abs(s.coeffs[3] + SQRT2 / 12))
        worst4 = max(worst4, abs(s.coeffs[4] + 1 / 48))
        worst2 = max(worst2, abs(s.coeffs[2] - (SQRT2 / 4 * c - 0.5)))
    ok = worst3 <= 1e-12 and worst4 <= 1e-12 and worst2 <= 1e-15
    return ok, (f"|a3+sqrt2/12|={worst3:.2e} |a4+1/48|={worst4:.2e} "
                f"|a2-((sqrt2/4)c-1/2)|={worst2:.2e}")


def crit_2_sign_propagation(shared) -> tuple:
    ok = True
    for c in C_VALUES:
        s = selfsimilar.series_coefficients(c, N=210)
        ok &= s.signs_negative(200)
    return ok, f"a_n < 0 for 3<=n<=200 at c in {C_VALUES}: {ok}"


def crit_3_eventual_negativity(shared) -> tuple:
    ok = True
    xz = {}
    worst = 0.0
    for c in C_VALUES:
        r = selfsimilar.negativity_finder(c, 20.0)
        ok &= r.verdict == "negativity confirmed" and r.x_zero is not None
        if r.x_zero is not None:
            ok &= SQRT2 < r.x_zero < 20.0
            xz[c] = round(float(r.x_zero), 4)
        s = selfsimilar.series_coefficients(c, N=40)
        xs = np.linspace(SQRT2, SQRT2 + 0.5, 26)
        prof = selfsimilar.ode_integrate(c, SQRT2 + 0.6, samples=xs)
        ode_vals = prof.value(xs)
        diff = max(abs(selfsimilar.evaluate_series(s, x).value - v)
                   for x, v in zip(xs, ode_vals))
        worst = max(worst, diff)
    ok &= worst <= 1e-6
    return ok, f"x_zero={xz} series-vs-ode max diff={worst:.2e}"


def crit_4_exact_solution_residuals(shared) -> tuple:
    eps = 0.02
    # time-only data: the solver field is max(t,0) up to the eps lag
    spec_t = scenarios.time_only(nx=201, nt=201)
    u_t = solver.solve_regularized(spec_t, eps)
    res_t = solver.scheme_residual(u_t)
    mask_t = solver.off_interface_mask(u_t, strip=eps)
    r1 = float(np.abs(res_t[mask_t]).max())
    g_t = boundary.extract_graph(u_t, c=0.0)
    # synthetic fields carry the stated graphs exactly
    exact_t = SpaceTimeField.from_function(spec_t.grid,
                                           lambda x, t: np.maximum(t, 0.0))
    g_exact = boundary.extract_graph(exact_t, c=0.0)
    h_flat = float(np.nanmax(np.abs(g_exact.H)))

    spec_r = scenarios.moving_ramp(nx=201, nt=201)
    u_r = solver.solve_regularized(spec_r, eps)
    res_r = solver.scheme_residual(u_r)
    mask_r = solver.off_interface_mask(u_r, strip=eps)
    r2 = float(np.abs(res_r[mask_r]).max())
    exact_r = SpaceTimeField.from_function(spec_r.grid,
                                           lambda x, t: t - np.abs(x))
    g_ramp = boundary.extract_graph(exact_r, c=1.0)
    rep = boundary.lipschitz_report(g_ramp, exact_r, c=1.0)
    ok = (r1 < 1e-8 and r2 < 1e-8 and h_flat == 0.0
          and abs(rep.lip - 1.0) < 1e-10 and rep.passed)
    return ok, (f"residuals: time_only={r1:.1e} ramp={r2:.1e}; "
                f"max|H|(max(t,0))={h_flat:.1e}; "
                f"ramp Lip={rep.lip:.6f} bound={rep.bound:.6f}")


def crit_5_eps_monotone_convergence(shared) -> tuple:
    _, res_l = shared.local_cap_default_401()
    _, res_c = shared.collapse_default_401()
    parts = []
    ok = True
    for name, res in (("local_cap", res_l), ("collapsing", res_c)):
        mono = res.monotone_margin <= 1e-10
        dec = all(b <= a * (1 + 1e-12) for a, b in zip(res.diffs, res.diffs[1:]))
        conv = res.converged and (not res.diffs or res.diffs[-1] < 1e-6)
        ok &= mono and dec and conv
        tail = res.diffs[-1] if res.diffs else 0.0
        parts.append(f"{name}: margin={res.monotone_margin:.1e} "
                     f"decreasing={dec} tail={tail:.2e} converged={res.converged}")
    if not ok:
        parts.append("(extended halving to eps=0.1*2^-16 reaches tail "
                     "5.7e-7; see README, known red criterion)")
    return ok, "; ".join(parts)


def crit_6_ut_propagation(shared) -> tuple:
    spec, res = shared.collapse_default_401()
    rep = solver.check_time_monotonicity(res.u, c=1.0, tol=1e-3)
    return rep.passed, f"min slope={rep.min_slope:.8f} (need >= 1 - 1e-3)"


def crit_7_weiss_anchors(shared) -> tuple:
    g = Grid(1, -10.0, 10.0, 1001, -0.7, -0.002, 2801)
    u_lin = SpaceTimeField.from_function(g, lambda x, t: t + 0 * x)
    worst = 0.0
    for r in (0.1, 0.2, 0.4):
        for variant in ("paper-def", "proof-2x"):
            wv = weiss.weiss_energy(u_lin, r, variant=variant)
            worst = max(worst, abs(wv.psi + 7.5))
    ok_anchor = worst <= 1e-3

    g2 = Grid(1, -13.0, 13.0, 1301, -1.1, -0.002, 2201)
    u_tilt = SpaceTimeField.from_function(g2, lambda x, t: t + 0.1 * x)
    chk = weiss.weiss_derivative_check(u_tilt, r=0.5, dr=0.01)
    ok_deriv = chk.rel_error < 0.05

    sols = shared.collapse_triple()
    u8 = sols[-1]
    cpt = blowup.locate_collapse(u8)
    rs = np.geomspace(np.sqrt(4 * u8.grid.ht) * 1.2, 0.1, 5)
    curve = weiss.weiss_curve(u8, rs, origin=(cpt.x_star, cpt.t_star))
    ok_mono = curve.min_fd_slope() >= -1e-3
    ok = ok_anchor and ok_deriv and ok_mono
    return ok, (f"|Psi+15/2|={worst:.2e}; deriv rel err={chk.rel_error:.3%}; "
                f"min dPsi/dr={curve.min_fd_slope():.3g}")


def crit_8_hodograph_identities(shared) -> tuple:
    g = Grid(2, -0.4, 0.4, 65, 0.0, 1.0, 3)
    u = SpaceTimeField.from_function(g, lambda x1, xn, t: xn + 0.1 * np.sin(x1))
    h = hodograph.hodograph_transform(u, delta=0.5)
    ids = hodograph.derivative_identities(u, h)
    worst = max(ids.values())
    ok_ids = worst < 1e-5

    sols = shared.collapse_triple()
    u8 = sols[-1]
    graph = boundary.extract_graph(u8, 1.0)
    _, _, p = hodograph.select_noncritical_point(u8, graph, M=20.0, alpha=0.5)
    ur = hodograph.rescale(u8, p)
    hh = hodograph.hodograph_transform(ur, delta=0.5)
    cm = hodograph.coefficient_matrix(hh)
    ok_elliptic = cm.lam_min > 0
    ok = ok_ids and ok_elliptic
    return ok, (f"max identity residual={worst:.2e}; "
                f"lam_min={cm.lam_min:.4f} lam_max={cm.lam_max:.4f} at M=20")


def crit_9_blowup_trend(shared) -> tuple:
    sols = shared.collapse_triple()
    trend = blowup.ut_blowup_trend(sols)
    ok_main = (trend.verdict == "unbounded-consistent"
               and trend.log_slope < 0)
    ctrl, centers = [], []
    for nx in (201, 401, 801):
        gg = Grid(1, -1.0, 1.0, nx, -0.5, 0.5, nx)
        ctrl.append(SpaceTimeField.from_function(
            gg, lambda x, t: np.maximum(t, 0.0)))
        centers.append((0.0, 0.0))
    tr_ctrl = blowup.ut_blowup_trend(ctrl, centers=centers)
    ok_ctrl = tr_ctrl.verdict == "saturating"
    ok = ok_main and ok_ctrl
    return ok, (f"verdict={trend.verdict} slope={trend.log_slope:.3f}; "
                f"control={tr_ctrl.verdict}")


def crit_10_pinching_exponent(shared) -> tuple:
    sols = shared.collapse_triple()
    u8 = sols[-1]
    cpt = blowup.locate_collapse(u8)
    graph = boundary.extract_graph(u8, 1.0)
    pr = boundary.pinching_check(graph, u8, cpt.x_star, alpha=0.5, c=1.0)
    ok = pr.status == "pass" and pr.exponent >= 1.35
    return ok, f"status={pr.status} exponent={pr.exponent:.3f} (need >= 1.35)"


CRITERIA = [
    (1, "series-anchors", 1.0, crit_1_series_anchors),
    (2, "sign-propagation", 1.0, crit_2_sign_propagation),
    (3, "eventual-negativity", 5.0, crit_3_eventual_negativity),
    (4, "exact-solution-residuals", 10.0, crit_4_exact_solution_residuals),
    (5, "eps-monotone-convergence", 60.0, crit_5_eps_monotone_convergence),
    (6, "ut-propagation", 60.0, crit_6_ut_propagation),
    (7, "weiss-anchors", 30.0, crit_7_weiss_anchors),
    (8, "hodograph-identities", 20.0, crit_8_hodograph_identities),
    (9, "blowup-trend", 300.0, crit_9_blowup_trend),
    (10, "pinching-exponent", 300.0, crit_10_pinching_exponent),
]


def run_all(quick: bool = False, shared: SharedRuns | None = None) -> list:
    shared = shared or SharedRuns()
    results = []
    for idx, name, budget, fn in CRITERIA:
        if quick and idx in (9, 10):
            continue
        r = _run(idx, name, budget, fn, shared)
        print(r.line())
        results.append(r)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return results
