"""Stage orchestration: solve -> boundary -> hodograph -> weiss -> blowup.

Each stage runs inside a guard; a failed stage records its error and marks
stages depending on it as skipped rather than failed. The run manifest
gathers every number a stage reports, the artifact paths, and wall-clock
timings (kept under their own key so determinism checks can ignore them).
"""

from __future__ import annotations

import os
import time
from pathlib import Path

import numpy as np

from . import __version__, blowup, boundary, container, hodograph, scenarios, solver, weiss
from .config import RunConfig, write_manifest

_NEEDS_SOLVE = ("boundary", "hodograph", "weiss", "blowup")


def _out_dir(cfg: RunConfig) -> Path:
    base = os.environ.get("FBLAB_OUT_DIR", cfg.out_dir)
    d = Path(base) / cfg.scenario
    d.mkdir(parents=True, exist_ok=True)
    return d


def _build_spec(cfg: RunConfig):
    kwargs = {"nx": cfg.nx}
    if cfg.nt is not None:
        kwargs["nt"] = cfg.nt
    if cfg.t1 is not None:
        kwargs["t1"] = cfg.t1
    return scenarios.by_label(cfg.scenario, **kwargs)


def _schedule(cfg: RunConfig, grid) -> solver.RegularizationSchedule:
    eps_min = cfg.eps_min
    if eps_min is None:
        eps_min = None  # full default schedule
    return solver.RegularizationSchedule.default(
        eps_min=eps_min, stop_tol=cfg.stop_tol, max_picard=cfg.max_picard,
        picard_tol=cfg.picard_tol)


def run_scenario(cfg: RunConfig) -> dict:
    out = _out_dir(cfg)
    resolved = {k: getattr(cfg, k) for k in (
        "nx", "nt", "t1", "eps_start", "eps_min", "stop_tol", "max_picard",
        "picard_tol", "c", "alpha", "gamma", "m_big", "weiss_variant",
        "slope_convention", "solution_path")}
    manifest = {
        "version": __version__,
        "scenario": cfg.scenario,
        "config": dict(sorted(cfg.raw.items())),
        "config_resolved": resolved,
        "stages": {},
        "artifacts": {},
        "timings": {},
    }
    state = {}
    t_total = time.perf_counter()
    for stage in cfg.stages:
        if stage in _NEEDS_SOLVE and manifest["stages"].get("solve", {}).get(
                "status") not in (None, "ok"):
            manifest["stages"][stage] = {"status": "skipped",
                                         "reason": "solve did not complete"}
            continue
        t0 = time.perf_counter()
        try:
            runner = _STAGE_RUNNERS[stage]
            report = runner(cfg, state, out)
            report["status"] = "ok"
        except Exception as e:  # noqa: BLE001 - stage isolation is the point
            report = {"status": "failed", "error": f"{type(e).__name__}: {e}"}
        manifest["stages"][stage] = report
        manifest["timings"][stage] = time.perf_counter() - t0
    manifest["timings"]["total"] = time.perf_counter() - t_total
    for name, path in state.get("artifacts", {}).items():
        manifest["artifacts"][name] = str(path)
    manifest["ok"] = all(s.get("status") == "ok"
                         for s in manifest["stages"].values())
    path = write_manifest(manifest, out / "manifest.json")
    manifest["manifest_path"] = str(path)
    return manifest


def _stage_solve(cfg: RunConfig, state: dict, out: Path) -> dict:
    if cfg.solution_path:
        u = container.read_field(cfg.solution_path)
        state["u"] = u
        c = cfg.c if cfg.c is not None else scenarios.DEFAULT_C[cfg.scenario]
        state["spec"] = scenarios.ScenarioSpec(
            cfg.scenario, u.grid, u.values.copy(), c=c)
        return {"loaded_from": str(cfg.solution_path)}
    if cfg.scenario == "elliptic_cross":
        u = scenarios.elliptic_cross_field(nx=min(cfg.nx, 129))
        state["u"] = u
        g = u.grid
        # degree-2 spatial homogeneity: u(r x) = r^2 u(x) up to interpolation
        xs = g.xs
        sel = np.abs(xs) <= 0.5
        X1, X2 = np.meshgrid(xs[sel], xs[sel], indexing="ij")
        pts = np.stack([2 * X1, 2 * X2], axis=-1)
        u2 = u.interp(pts, np.full(X1.shape, g.ts[0]))
        base = u.values[0][np.ix_(sel, sel)]
        defect = float(np.abs(u2 - 4 * base).max() / (1 + np.abs(u.values).max()))
        diag = np.abs(np.diagonal(u.values[0]))
        art = container.write_field(u, _out_dir(cfg) / "elliptic_cross.fbf")
        state.setdefault("artifacts", {})["frozen_field"] = art
        return {"frozen_field": True, "note": "diagnostic input, not solved",
                "homogeneity_defect_deg2": defect,
                "cross_line_max": float(diag.max())}
    spec = _build_spec(cfg)
    sched = _schedule(cfg, spec.grid)
    res = solver.least_solution(spec, sched, on_no_convergence="warn")
    state["spec"] = spec
    state["result"] = res
    state["u"] = res.u
    mask = solver.off_interface_mask(res.u, strip=2 * res.eps_values[-1])
    resid = float(np.abs(res.residual[mask]).max()) if mask.any() else np.nan
    mono = solver.check_time_monotonicity(res.u, spec.c)
    art = container.write_field(res.u, out / "solution.fbf")
    state.setdefault("artifacts", {})["solution"] = art
    report = {
        "eps_values": list(res.eps_values),
        "diffs": list(res.diffs),
        "converged": res.converged,
        "monotone_margin": res.monotone_margin,
        "residual_off_interface": resid,
        "min_time_slope": mono.min_slope,
        "time_slope_pass": mono.passed,
        "c": spec.c,
    }
    if cfg.scenario == "local_cap":
        # nonuniqueness log: the forced caloric companion also solves the
        # equation with this data (positive inside, chi = 1 there), while
        # the least solution stays identically zero (chi = 0 at u = 0)
        alt = solver.heat_with_unit_forcing(spec)
        alt_res = solver.scheme_residual(alt)
        amask = solver.off_interface_mask(alt, strip=2 * res.eps_values[-1])
        report["alternative_solution"] = {
            "positive_interior": bool(alt.values[1:, 1:-1].min() > 0),
            "residual_off_interface": float(np.abs(alt_res[amask]).max()),
            "note": "translations in t are further solutions",
        }
        report["least_solution_is_zero"] = bool(
            np.abs(res.u.values).max() == 0.0)
    if cfg.scenario == "time_only":
        report["nonuniqueness_note"] = (
            "any translation u(x, t - tau), tau > 0, shares the data at t <= 0")
    return report


def _stage_boundary(cfg: RunConfig, state: dict, out: Path) -> dict:
    u = state["u"]
    spec = state.get("spec")
    c = cfg.c if cfg.c is not None else (spec.c if spec is not None else 1.0)
    graph = boundary.extract_graph(u, c)
    state["graph"] = graph
    if graph.empty:
        return {"empty": True}
    rep = boundary.lipschitz_report(graph, u, c)
    nf = boundary.normal_field(u, graph, c)
    nh = boundary.normal_holder_report(nf, cfg.alpha)
    x_top = float(graph.xs[graph.valid][np.argmax(graph.H[graph.valid])])
    pinch = boundary.pinching_check(graph, u, x_top, cfg.alpha, c)
    csv = out / "boundary.csv"
    data = np.column_stack([
        nf.xs, nf.H, graph.gradH[graph.valid], nf.grad_norm, nf.ut, nf.theta])
    np.savetxt(csv, data, delimiter=",",
               header="x,H,gradH,grad_norm,ut_plus,theta", comments="",
               fmt="%.17g")
    state.setdefault("artifacts", {})["boundary"] = csv
    return {
        "count": graph.count,
        "lipschitz": {"lip": rep.lip, "bound": rep.bound, "passed": rep.passed},
        "normal_seminorm": nh.seminorm,
        "sin_theta_margin": nh.sin_theta_margin,
        "pinching": {"status": pinch.status, "exponent": pinch.exponent,
                     "target": pinch.target, "at_x": x_top},
    }


def _stage_hodograph(cfg: RunConfig, state: dict, out: Path) -> dict:
    u = state["u"]
    graph = state.get("graph")
    if graph is None or graph.empty:
        raise ValueError("hodograph stage needs a nonempty boundary graph")
    from .grids import finite_differences

    bundle = finite_differences(u)
    x0, t0, p = hodograph.select_noncritical_point(
        u, graph, M=cfg.m_big, alpha=cfg.alpha, bundle=bundle)
    ur = hodograph.rescale(u, p)
    rep = hodograph.verify_rescale_properties(ur, p)
    h = hodograph.hodograph_transform(ur, delta=0.5)
    cm = hodograph.coefficient_matrix(h)
    csv = hodograph.coefficient_matrix_csv(cm, h, out / "coefficients.csv")
    state.setdefault("artifacts", {})["coefficients"] = csv
    scaling = hodograph.ut_scaling_trend(u, graph, c=state["spec"].c,
                                         M=cfg.m_big, gamma=cfg.gamma)
    return {
        "center": [x0, t0],
        "r": p.r, "rho": p.rho, "grad": p.grad_norm,
        "rescale_checks": rep.checks,
        "eq_residual": rep.eq_residual,
        "roundtrip": h.roundtrip,
        "lam_min": cm.lam_min, "lam_max": cm.lam_max,
        "ut_scaling": {"slope": scaling.slope, "gamma": scaling.gamma,
                       "passed": scaling.passed,
                       "n_points": int(scaling.rhos.size)},
    }


def _stage_weiss(cfg: RunConfig, state: dict, out: Path) -> dict:
    u = state["u"]
    cpt = blowup.locate_collapse(u)
    origin = (cpt.x_star, cpt.t_star)
    g = u.grid
    # keep r*(1 - dr_frac) resolvable for the centered derivative probes
    r_lo = np.sqrt(4 * g.ht) * 1.2
    r_hi = min(0.16, np.sqrt(cpt.t_star / 4) * 0.95)
    if r_lo >= r_hi:
        raise ValueError(
            f"no resolvable radius window: sqrt(4 ht) = {np.sqrt(4 * g.ht):.3g} "
            f"against r_max = {r_hi:.3g}; increase nt")
    rs = np.geomspace(r_lo, r_hi, 5)
    curve = weiss.weiss_curve(u, rs, origin=origin, variant=cfg.weiss_variant)
    csv = curve.to_csv(out / "weiss_curve.csv")
    state.setdefault("artifacts", {})["weiss_curve"] = csv
    gs = weiss.growth_series(u, rs, origin=origin)
    defects = {f"{r:.4g}": weiss.homogeneity_defect(u, r, origin=origin)
               for r in (0.25, 0.5, 0.75)}
    return {
        "origin": list(origin),
        "rs": list(map(float, curve.rs)),
        "psi": list(map(float, curve.psi)),
        "min_fd_slope": curve.min_fd_slope(),
        "variant": curve.variant,
        "growth_S": list(map(float, gs.S)),
        "growth_ratio": gs.ratio,
        "homogeneity_defect": defects,
    }


def _stage_blowup(cfg: RunConfig, state: dict, out: Path) -> dict:
    nx_f = cfg.nx
    nxs = [max(51, (nx_f - 1) // 4 + 1), (nx_f - 1) // 2 + 1, nx_f]
    sols = []
    for nx in nxs:
        if nx == nx_f and "u" in state:
            sols.append(state["u"])
            continue
        spec = scenarios.by_label(cfg.scenario, nx=nx, nt=nx,
                                  **({"t1": cfg.t1} if cfg.t1 else {}))
        sched = solver.RegularizationSchedule.default(
            eps_min=max(2 * spec.grid.ht, 1e-3))
        sols.append(solver.least_solution(
            spec, sched, on_no_convergence="warn").u)
    rep = blowup.collapse_report(sols)
    csv = out / "blowup_trend.csv"
    header = "rho," + ",".join(f"sup_ut_nx{nx}" for nx in rep.resolutions)
    np.savetxt(csv, np.column_stack(
        [rep.rhos] + [row for row in np.asarray(rep.ut_sup_per_rho)]),
        delimiter=",", header=header, comments="", fmt="%.17g")
    state.setdefault("artifacts", {})["blowup_trend"] = csv
    return rep.to_manifest()


def _stage_series(cfg: RunConfig, state: dict, out: Path) -> dict:
    from . import selfsimilar as ss

    c = cfg.c if cfg.c is not None else 1.0
    sol = ss.series_coefficients(c, N=210)
    neg = ss.negativity_finder(c, 20.0, slope_convention=cfg.slope_convention)
    window = ss.agreement_window(c)
    coeff_csv = out / "series_coefficients.csv"
    np.savetxt(coeff_csv, np.column_stack([np.arange(sol.N + 1), sol.coeffs]),
               delimiter=",", header="n,a_n", comments="", fmt="%.17g")
    prof_csv = out / "profile.csv"
    pair = ss.ProfilePair(c, neg.profile)
    xs = np.linspace(0.0, float(neg.profile.xs[-1]), 401)
    np.savetxt(prof_csv, np.column_stack([xs, pair.value(xs)]),
               delimiter=",", header="x,f", comments="", fmt="%.17g")
    state.setdefault("artifacts", {}).update(
        series_coefficients=coeff_csv, profile=prof_csv)
    return {
        "c": c,
        "a2": float(sol.coeffs[2]), "a3": float(sol.coeffs[3]),
        "a4": float(sol.coeffs[4]),
        "signs_negative_3_200": sol.signs_negative(200),
        "verdict": neg.verdict,
        "x_zero": neg.x_zero,
        "series_ode_window": window,
        "slope_convention": cfg.slope_convention,
    }


_STAGE_RUNNERS = {
    "solve": _stage_solve,
    "boundary": _stage_boundary,
    "hodograph": _stage_hodograph,
    "weiss": _stage_weiss,
    "blowup": _stage_blowup,
    "series": _stage_series,
}
