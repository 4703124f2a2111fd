import numpy as np
import pytest

from fblab.grids import Grid, ParabolicCylinder, SpaceTimeField
from fblab.holder import discrete_holder_norm, holder_norm_from_samples


def _grid_field(fn, nx=5, nt=5):
    g = Grid(1, -1.0, 1.0, nx, -1.0, 1.0, nt)
    return g, SpaceTimeField.from_function(g, fn)


def test_constant_field_norm_is_sup():
    g, u = _grid_field(lambda x, t: 7.0 + 0 * x)
    hn = discrete_holder_norm(u, 0.5, ParabolicCylinder((0.0,), 0.0, 10.0))
    assert hn.norm == pytest.approx(7.0)
    assert hn.seminorm == 0.0
    assert hn.exact


def test_brute_force_match_isotropic():
    # exhaustive pair enumeration on a 5x5 grid is the oracle
    g, u = _grid_field(lambda x, t: x, nx=5, nt=5)
    hn = discrete_holder_norm(u, 0.5, ParabolicCylinder((0.0,), 0.0, 100.0),
                              mode="isotropic")
    best = 0.0
    pts = [(x, t) for t in g.ts for x in g.xs]
    for i, (x1, t1) in enumerate(pts):
        for x2, t2 in pts[i + 1:]:
            den = ((x1 - x2) ** 2 + (t1 - t2) ** 2) ** 0.25
            if den > 0:
                best = max(best, abs(x1 - x2) / den)
    assert hn.seminorm == pytest.approx(best, rel=1e-12)
    assert hn.sup == pytest.approx(1.0)


def test_parabolic_alpha_one_exact_cancellation():
    # u = t with alpha = 1: quotient |dt| / |dt|^(1/2) peaks at the width
    g, u = _grid_field(lambda x, t: t, nx=5, nt=9)
    region = ParabolicCylinder((0.0,), 0.0, 0.9)
    hn = discrete_holder_norm(u, 1.0, region, mode="parabolic")
    nodes_t = [t for t in g.ts for x in g.xs
               if abs(x) + np.sqrt(abs(t)) < 0.9]
    width = max(nodes_t) - min(nodes_t)
    assert hn.seminorm == pytest.approx(np.sqrt(width), rel=1e-12)


def test_alphabound_factor_two_between_denominators():
    # parabolic denominator vs (|dx| + |dt|^(1/2))^alpha differ by <= 2
    rng = np.random.default_rng(3)
    alpha = 0.6
    xs = rng.uniform(-1, 1, 40)
    ts = rng.uniform(-1, 1, 40)
    vals = rng.normal(size=40)
    semi_parab = 0.0
    semi_comb = 0.0
    for i in range(40):
        for j in range(i + 1, 40):
            dx = abs(xs[i] - xs[j])
            dt = abs(ts[i] - ts[j])
            dv = abs(vals[i] - vals[j])
            semi_parab = max(semi_parab, dv / (dx**alpha + dt ** (alpha / 2)))
            semi_comb = max(semi_comb, dv / (dx + dt**0.5) ** alpha)
    assert semi_parab <= semi_comb <= 2 * semi_parab


def test_empty_region_rejected():
    g, u = _grid_field(lambda x, t: x)
    with pytest.raises(ValueError):
        discrete_holder_norm(u, 0.5, ParabolicCylinder((0.013,), 0.57, 1e-6))


def test_subsample_deterministic_and_flagged():
    rng = np.random.default_rng(11)
    n = 30_000
    x = rng.uniform(-1, 1, n)
    t = rng.uniform(-1, 1, n)
    v = np.sin(3 * x) + t
    a = holder_norm_from_samples(x, t, v, 0.5, exact_limit=20_000)
    b = holder_norm_from_samples(x, t, v, 0.5, exact_limit=20_000)
    assert not a.exact
    assert a.norm == b.norm
    assert a.n_pairs >= 900_000
    # the subsample cannot exceed the exhaustive value
    c = holder_norm_from_samples(x[:3000], t[:3000], v[:3000], 0.5)
    assert c.exact


def test_alpha_validation():
    g, u = _grid_field(lambda x, t: x)
    with pytest.raises(ValueError):
        discrete_holder_norm(u, 0.0, ParabolicCylinder((0.0,), 0.0, 10.0))
    with pytest.raises(ValueError):
        discrete_holder_norm(u, 1.5, ParabolicCylinder((0.0,), 0.0, 10.0))
