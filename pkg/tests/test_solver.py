import numpy as np
import pytest

from fblab import scenarios, solver
from fblab.grids import SpaceTimeField


def test_f_eps_branches():
    assert solver.f_eps(-1.0, 0.1) == 0.0
    assert solver.f_eps(0.05, 0.1) == pytest.approx(0.5)
    assert solver.f_eps(0.2, 0.1) == 1.0
    assert solver.f_eps(0.0, 0.1) == 0.0  # strict indicator convention
    with pytest.raises(ValueError):
        solver.f_eps(0.0, 0.0)
    with pytest.raises(ValueError):
        solver.f_eps(0.0, -1.0)


def test_f_eps_lipschitz_constant():
    xs = np.linspace(-0.5, 0.5, 2001)
    vals = solver.f_eps(xs, 0.05)
    slopes = np.abs(np.diff(vals) / np.diff(xs))
    assert slopes.max() <= 1 / 0.05 + 1e-9


def test_schedule_validation():
    with pytest.raises(ValueError):
        solver.RegularizationSchedule((0.1, 0.2))
    with pytest.raises(ValueError):
        solver.RegularizationSchedule((0.1, -0.05))
    s = solver.RegularizationSchedule.default()
    assert len(s.eps_values) == 13
    assert s.eps_values[0] == pytest.approx(0.1)
    assert s.eps_values[-1] == pytest.approx(0.1 * 2**-12)


def test_substeps_precheck():
    spec = scenarios.time_only(nx=51, nt=51)
    with pytest.raises(ValueError, match="ht < eps/2"):
        solver.solve_regularized(spec, eps=0.001, substeps=1)
    # automatic substepping satisfies the margin
    u = solver.solve_regularized(spec, eps=0.001)
    assert u.meta["ht_eff"] < 0.001 / 2


def test_negative_data_stays_caloric():
    # psi = -1 everywhere: forcing never activates, solution stays -1
    grid_spec = scenarios.time_only(nx=41, nt=41)
    psi = np.full(grid_spec.grid.shape, -1.0)
    spec = scenarios.ScenarioSpec("custom", grid_spec.grid, psi, c=0.0)
    u = solver.solve_regularized(spec, eps=0.05)
    assert np.abs(u.values + 1.0).max() < 1e-12


def test_time_only_exact_solution():
    # nt chosen so ht < eps/2 without substepping: the stored levels then
    # satisfy the scheme identity exactly and the residual is roundoff
    spec = scenarios.time_only(nx=101, nt=201)
    eps = 0.02
    u = solver.solve_regularized(spec, eps)
    assert u.meta["substeps"] == 1
    res = solver.scheme_residual(u)
    mask = solver.off_interface_mask(u, strip=eps)
    assert np.abs(res[mask]).max() < 1e-8
    exact = SpaceTimeField.from_function(spec.grid,
                                         lambda x, t: np.maximum(t, 0.0))
    # the regularization lag is the only deviation and shrinks with eps
    lag = np.abs(u.values - exact.values).max()
    assert lag < 3 * eps
    u2 = solver.solve_regularized(spec, eps / 4)
    assert np.abs(u2.values - exact.values).max() < lag


def test_comparison_principle():
    # ordered data give ordered solutions at equal eps and substeps
    base = scenarios.collapsing_interval(nx=101, nt=101, t1=0.5)
    lower = scenarios.ScenarioSpec("custom", base.grid, base.psi - 0.1, c=1.0)
    u_hi = solver.solve_regularized(base, eps=0.01)
    u_lo = solver.solve_regularized(lower, eps=0.01,
                                    substeps=u_hi.meta["substeps"])
    assert (u_lo.values - u_hi.values).max() <= 1e-10


def test_eps_monotonicity_pairwise():
    spec = scenarios.collapsing_interval(nx=101, nt=101, t1=0.5)
    m = solver.substeps_for(spec.grid.ht, 0.005)
    u1 = solver.solve_regularized(spec, 0.02, substeps=m)
    u2 = solver.solve_regularized(spec, 0.005, substeps=m)
    assert (u1.values - u2.values).max() <= 1e-10  # smaller eps is larger


def test_time_translation_exactness():
    # shifting the data by a whole number of levels shifts the solution
    spec = scenarios.time_only(nx=51, nt=81, t0=-0.5, t1=0.5)
    g = spec.grid
    tau = 8 * g.ht
    psi_shift = SpaceTimeField.from_function(
        g, lambda x, t: np.maximum(t - tau, 0.0)).values
    spec_shift = scenarios.ScenarioSpec("custom", g, psi_shift, c=0.0)
    m = solver.substeps_for(g.ht, 0.02)
    u = solver.solve_regularized(spec, 0.02, substeps=m)
    v = solver.solve_regularized(spec_shift, 0.02, substeps=m)
    # v(x, t) should equal u(x, t - tau) on the overlapping levels
    assert np.abs(v.values[8:] - u.values[:-8]).max() < 1e-12


def test_least_solution_time_only_matches_exact():
    spec = scenarios.time_only(nx=101, nt=201)
    sched = solver.RegularizationSchedule.default(eps_min=5e-3)
    res = solver.least_solution(spec, sched, on_no_convergence="warn")
    exact = SpaceTimeField.from_function(spec.grid,
                                         lambda x, t: np.maximum(t, 0.0))
    assert np.abs(res.u.values - exact.values).max() < 0.05
    assert res.monotone_margin <= 1e-10


def test_least_solution_local_cap_is_zero():
    spec = scenarios.local_cap(nx=101, nt=101)
    res = solver.least_solution(spec, solver.RegularizationSchedule.default())
    assert res.converged
    assert np.abs(res.u.values).max() == 0.0
    assert np.all(res.chi == 0.0)
    # fine-grid reference at 4x resolution agrees (also identically zero)
    fine = scenarios.local_cap(nx=401, nt=401)
    res_f = solver.least_solution(fine, solver.RegularizationSchedule.default())
    assert np.abs(res_f.u.values).max() == 0.0


def test_local_cap_alternative_solution_is_positive():
    # the forced caloric companion solves the same problem with chi = 1
    spec = scenarios.local_cap(nx=101, nt=101)
    w = solver.heat_with_unit_forcing(spec)
    assert w.values[1:, 1:-1].min() > 0
    res = solver.scheme_residual(w)
    mask = solver.off_interface_mask(w, strip=0.0)
    assert np.abs(res[mask]).max() < 1e-10


def test_collapse_time_bracket_refines():
    # bisection on the sign of min_x u at two resolutions
    brackets = []
    for nx in (101, 201):
        spec = scenarios.collapsing_interval(nx=nx, nt=nx, t1=0.6)
        sched = solver.RegularizationSchedule.default(
            eps_min=max(2 * spec.grid.ht, 1e-3))
        res = solver.least_solution(spec, sched, on_no_convergence="warn")
        mins = res.u.values.min(axis=1)
        neg = np.nonzero(mins < 0)[0]
        last = neg[-1]
        brackets.append((spec.grid.ts[last], spec.grid.ts[last + 1]))
        assert 0.0 < spec.grid.ts[last] < spec.grid.t1  # t* in (0, horizon)
    (a0, b0), (a1, b1) = brackets
    # finer bracket sits inside the coarse one up to a coarse step
    coarse_ht = 0.6 / 100
    assert a1 >= a0 - coarse_ht and b1 <= b0 + coarse_ht


def test_check_time_monotonicity_examples():
    g = scenarios.time_only(nx=41, nt=41).grid
    u = SpaceTimeField.from_function(g, lambda x, t: np.maximum(t, 0.0))
    assert solver.check_time_monotonicity(u, 0.0).passed
    assert not solver.check_time_monotonicity(u, 1.0).passed
    v = SpaceTimeField.from_function(g, lambda x, t: 2 * t)
    rep = solver.check_time_monotonicity(v, 1.0)
    assert rep.passed
    assert rep.min_slope == pytest.approx(2.0)


def test_min_slope_equals_all_pairs_minimum():
    # consecutive-level reduction equals the brute-force pair minimum
    rng = np.random.default_rng(2)
    g = scenarios.time_only(nx=7, nt=9).grid
    u = SpaceTimeField(g, rng.normal(size=g.shape))
    rep = solver.check_time_monotonicity(u, 0.0)
    best = np.inf
    for j in range(g.nx):
        for m1 in range(g.nt):
            for m2 in range(m1 + 1, g.nt):
                q = (u.values[m2, j] - u.values[m1, j]) / (g.ts[m2] - g.ts[m1])
                best = min(best, q)
    assert rep.min_slope == pytest.approx(best, rel=1e-12)


def test_least_solution_strict_raises_on_stall():
    spec = scenarios.collapsing_interval(nx=101, nt=101, t1=0.5)
    sched = solver.RegularizationSchedule((0.1, 0.05, 0.025), stop_tol=1e-9)
    with pytest.raises(solver.ConvergenceError) as ei:
        solver.least_solution(spec, sched)
    assert ei.value.diffs  # tail differences attached


def test_residual_invariant_scale():
    # the measured constant C in |residual| <= C (hx^2 + ht) must not blow
    # up under refinement; the first levels are excluded (data corner layer,
    # where u_t is genuinely discontinuous)
    consts = []
    for nx in (101, 201):
        spec = scenarios.collapsing_interval(nx=nx, nt=nx, t1=0.5)
        sched = solver.RegularizationSchedule.default(eps_min=2e-3)
        res = solver.least_solution(spec, sched, on_no_convergence="warn")
        mask = solver.off_interface_mask(res.u, strip=2 * res.eps_values[-1])
        mask[:5] = False
        worst = np.abs(res.residual[mask]).max()
        g = spec.grid
        consts.append(worst / (g.hx**2 + g.ht))
    assert consts[1] <= 2.0 * consts[0] + 1.0


def test_2d_solver_smoke():
    # small 2d runs: psi = -1 stays caloric; max(t,0) data follows the
    # exact solution once past the regularization strip
    from fblab.grids import Grid

    g = Grid(2, -1.0, 1.0, 17, 0.0, 0.25, 9)
    psi = np.full(g.shape, -1.0)
    spec = scenarios.ScenarioSpec("custom", g, psi, c=0.0)
    u = solver.solve_regularized(spec, eps=0.1)
    assert np.abs(u.values + 1.0).max() < 1e-10

    g2 = Grid(2, -1.0, 1.0, 17, -0.25, 0.25, 33)
    psi2 = SpaceTimeField.from_function(
        g2, lambda x, y, t: np.maximum(t, 0.0)).values
    spec2 = scenarios.ScenarioSpec("custom", g2, psi2, c=0.0)
    eps = 0.04
    u2 = solver.solve_regularized(spec2, eps)
    res = solver.scheme_residual(u2)
    mask = solver.off_interface_mask(u2, strip=eps)
    assert np.abs(res[mask]).max() < 1e-8
    exact = SpaceTimeField.from_function(
        g2, lambda x, y, t: np.maximum(t, 0.0))
    assert np.abs(u2.values - exact.values).max() < 3 * eps
