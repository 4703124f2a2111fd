import numpy as np
import pytest

from fblab import boundary, hodograph as hg
from fblab.grids import Grid, SpaceTimeField


@pytest.fixture(scope="module")
def sine_field():
    g = Grid(2, -0.4, 0.4, 65, 0.0, 1.0, 3)
    return SpaceTimeField.from_function(g, lambda x1, xn, t: xn + 0.1 * np.sin(x1))


def test_identity_transform():
    g = Grid(2, -0.5, 0.5, 33, 0.0, 1.0, 3)
    u = SpaceTimeField.from_function(g, lambda x1, xn, t: xn + 0 * x1)
    h = hg.hodograph_transform(u, delta=0.5)
    coords = g.node_coords()
    assert np.abs(h.v[h.valid] - coords[2][h.valid]).max() < 1e-13


def test_double_slope_inverse():
    g = Grid(2, -0.5, 0.5, 33, 0.0, 1.0, 3)
    u = SpaceTimeField.from_function(g, lambda x1, xn, t: 2.0 * xn)
    h = hg.hodograph_transform(u, delta=0.5)
    coords = g.node_coords()
    m = h.valid
    assert np.abs(h.v[m] - coords[2][m] / 2).max() < 1e-13
    ids = hg.derivative_identities(u, h)
    assert ids["un_vn"] < 1e-10  # 2 * (1/2) = 1


def test_closed_form_inverse_and_identities(sine_field):
    h = hg.hodograph_transform(sine_field, delta=0.5)
    g = sine_field.grid
    coords = g.node_coords()
    vexact = coords[2] - 0.1 * np.sin(coords[1])
    assert np.abs(h.v - vexact)[h.valid].max() < 1e-12
    assert h.roundtrip < 1e-10
    ids = hg.derivative_identities(sine_field, h)
    assert max(ids.values()) < 1e-6


def test_monotonicity_violation_raises():
    g = Grid(2, -0.5, 0.5, 17, 0.0, 1.0, 3)
    u = SpaceTimeField.from_function(g, lambda x1, xn, t: xn**2)
    with pytest.raises(hg.MonotoneColumnError):
        hg.hodograph_transform(u, delta=0.1)


def test_coefficient_matrix_hand_values():
    # v_n = 1/2, v_1 = 0: diag (1/v_n, (1+0)/v_n^3) = (2, 8)
    g = Grid(2, -0.5, 0.5, 17, 0.0, 1.0, 3)
    u = SpaceTimeField.from_function(g, lambda x1, xn, t: 2.0 * xn)
    h = hg.hodograph_transform(u, delta=0.5)
    cm = hg.coefficient_matrix(h)
    core = cm.valid
    assert np.allclose(cm.entries[core][:, 0, 0], 2.0, atol=1e-9)
    assert np.allclose(cm.entries[core][:, 1, 1], 8.0, atol=1e-8)
    assert cm.lam_min == pytest.approx(2.0, abs=1e-8)
    assert cm.lam_max == pytest.approx(8.0, abs=1e-7)


def test_identity_matrix_case():
    g = Grid(2, -0.5, 0.5, 17, 0.0, 1.0, 3)
    u = SpaceTimeField.from_function(g, lambda x1, xn, t: xn + 0 * x1)
    cm = hg.coefficient_matrix(hg.hodograph_transform(u, delta=0.5))
    assert cm.lam_min == pytest.approx(1.0, abs=1e-10)
    assert cm.lam_max == pytest.approx(1.0, abs=1e-10)


def test_rescale_static_ramp_exact():
    g = Grid(1, -1.0, 1.0, 201, -1.0, 1.0, 201)
    u = SpaceTimeField.from_function(g, lambda x, t: x + 0 * t)
    p = hg.RescaleParams.at(u, 0.0, 0.0, M=5.0, alpha=0.5)
    assert p.grad_norm == pytest.approx(1.0)
    ur = hg.rescale(u, p)
    sub = ur.grid
    coords = sub.node_coords()
    assert np.abs(ur.values - coords[1]).max() < 1e-10  # u_r(y, s) = y exactly
    rep = hg.verify_rescale_properties(ur, p)
    assert rep.checks["q1_grad_origin"]
    assert rep.checks["q2_grad_range"]
    assert rep.checks["q4_sup"]
    assert rep.grad_range[0] == pytest.approx(1.0, abs=1e-9)


def test_rescale_negative_control_wrong_radius():
    # doubling r breaks the normalization M r^(1+alpha): |grad u_r| lands
    # near 2^(-alpha), well outside 1 +- 1/M, so q2 must fail
    g = Grid(1, -1.0, 1.0, 401, -1.0, 1.0, 401)
    u = SpaceTimeField.from_function(g, lambda x, t: np.sin(1.5 * x) + 2.0 * t)
    p = hg.RescaleParams.at(u, 0.0, 0.0, M=5.0, alpha=0.5)
    bad = hg.RescaleParams(center_x=p.center_x, center_t=p.center_t, M=p.M,
                           alpha=p.alpha, gamma=p.gamma, grad=p.grad,
                           r=2 * p.r, rho=p.rho)
    ur_bad = hg.rescale(u, bad)
    rep = hg.verify_rescale_properties(ur_bad, bad)
    assert not rep.checks["q2_grad_range"]
    # the consistent radius passes the same check
    assert hg.verify_rescale_properties(hg.rescale(u, p), p).checks[
        "q2_grad_range"]


def test_r_leq_rho_invariant():
    g = Grid(1, -1.0, 1.0, 101, -1.0, 1.0, 101)
    u = SpaceTimeField.from_function(g, lambda x, t: 0.5 * x + 0 * t)
    for alpha, gamma in ((0.5, 0.25), (0.3, 0.5), (0.7, 0.2)):
        p = hg.RescaleParams.at(u, 0.0, 0.0, M=5.0, alpha=alpha, gamma=gamma)
        assert p.r <= p.rho
    with pytest.raises(ValueError):
        hg.RescaleParams.at(u, 0.0, 0.0, M=5.0, alpha=0.5, gamma=0.6)


def test_rescale_domain_guard():
    g = Grid(1, -1.0, 1.0, 101, -1.0, 1.0, 101)
    u = SpaceTimeField.from_function(g, lambda x, t: x + 0 * t)
    p = hg.RescaleParams.at(u, 0.9, 0.0, M=1.05, alpha=0.9, gamma=0.05)
    with pytest.raises(ValueError, match="exits the computational domain"):
        hg.rescale(u, p)


def test_zero_gradient_rejected():
    g = Grid(1, -1.0, 1.0, 101, -1.0, 1.0, 101)
    u = SpaceTimeField.from_function(g, lambda x, t: t + 0 * x)
    with pytest.raises(ValueError, match="zero gradient"):
        hg.RescaleParams.at(u, 0.0, 0.0)


def test_ellipticity_interval_encloses_measured(shared_runs):
    u8 = shared_runs.collapse_triple()[2]
    graph = boundary.extract_graph(u8, 1.0)
    _, _, p = hg.select_noncritical_point(u8, graph, M=20.0, alpha=0.5)
    ur = hg.rescale(u8, p)
    h = hg.hodograph_transform(ur, delta=0.5)
    cm = hg.coefficient_matrix(h)
    lo, hi = hg.ellipticity_interval(20.0, n=1)
    # measured range sits inside the interval-arithmetic enclosure widened
    # by the discretization slack of the q2 check
    rep = hg.verify_rescale_properties(ur, p)
    pad = 3 * rep.slack
    assert cm.lam_min > 0
    assert lo - pad <= cm.lam_min <= cm.lam_max <= hi + pad


def test_ut_holder_trivial_field():
    g = Grid(1, -1.0, 1.0, 101, -1.0, 1.0, 101)
    u = SpaceTimeField.from_function(g, lambda x, t: t + 0.5 * x)
    rep = hg.ut_holder_diagnostic(u, 0.0, 0.0, radius=0.5, alpha=0.5)
    assert rep.ratio == pytest.approx(1.0, abs=1e-10)  # u_t == 1: seminorm 0
    assert rep.norm_half == pytest.approx(1.0, abs=1e-10)


def test_ut_holder_refinement_stable(shared_runs):
    u4 = shared_runs.collapse_triple()[1]
    u8 = shared_runs.collapse_triple()[2]
    from fblab import blowup

    cpt = blowup.locate_collapse(u8)
    # a noncritical window: away from the collapse point
    rep = hg.ut_holder_diagnostic(u4, 0.55, cpt.t_star / 2, radius=0.25,
                                  alpha=0.5, delta=0.05, u_fine=u8)
    assert np.isfinite(rep.ratio)
    assert rep.stable
