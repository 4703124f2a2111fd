"""Weiss-type monotonicity functional over backward parabolic strips.

Psi(r, u) integrates (|grad u|^2 - K max(u,0) + u^2/t) G(x,t) over the
strip R^n x (-4r^2, -r^2), scaled by r^-4, with G the backward heat
kernel. The differentiated form of the functional carries K = 2 while its
definition displays K = 1; both variants are implemented behind a flag and
the proof-consistent K = 2 is the default, recorded in every report.

Quadrature is trapezoidal at the native grid resolution: over the grid
levels falling strictly inside the strip, extended by the exact strip
endpoints, where the field and its derivatives are interpolated linearly
in time and the kernel is evaluated exactly. Space is truncated at
R_cut = 24 r (Gaussian tail below 1e-15) or at the data boundary,
whichever comes first; boundary truncation is recorded in the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import DerivativeBundle, SpaceTimeField, finite_differences

VARIANTS = {"paper-def": 1.0, "proof-2x": 2.0}
R_CUT_FACTOR = 12.0          # R_cut = factor * sqrt(4 r^2) = 24 r


def backward_heat_kernel(x, t, n: int = 1):
    """G(x,t) = (4 pi (-t))^(-n/2) exp(-|x|^2 / (4(-t))), defined for t < 0.

    x is scalar or (...,) in 1d, (..., n) otherwise; unit spatial mass for
    every t < 0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t >= 0):
        raise ValueError("backward heat kernel requires t < 0")
    x = np.asarray(x, dtype=float)
    r2 = x**2 if n == 1 else np.sum(x**2, axis=-1)
    return (4 * np.pi * (-t)) ** (-n / 2) * np.exp(-r2 / (4 * (-t)))


@dataclass(frozen=True)
class ParabolicStrip:
    r: float
    r_cut: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("strip radius must be positive")
        if self.r_cut < 6 * 2 * self.r:
            raise ValueError("R_cut below 6*sqrt(4 r^2); Gaussian tail too fat")

    @classmethod
    def for_radius(cls, r: float) -> "ParabolicStrip":
        return cls(r, R_CUT_FACTOR * 2 * r)

    @property
    def t_lo(self) -> float:
        return -4 * self.r**2

    @property
    def t_hi(self) -> float:
        return -self.r**2


@dataclass
class _StripQuadrature:
    """Shared machinery: node window, spatial weights, time partition."""

    taus: np.ndarray         # shifted times of the partition (all < 0)
    weights_t: bool          # kept for clarity; trapezoid over taus
    slices_u: list           # u values per partition point, (nx_window,)
    slices_grad: list        # list of (n, nx_window) gradient slices
    slices_ut: list
    xs: np.ndarray           # shifted spatial coordinates in the window
    wx: np.ndarray
    truncated: bool


def _build_quadrature(u: SpaceTimeField, r: float, origin,
                      bundle: DerivativeBundle) -> _StripQuadrature:
    g = u.grid
    if g.spatial_dim != 1:
        raise NotImplementedError("strip quadrature is implemented in 1d")
    if r**2 < 4 * g.ht:
        raise ValueError(
            f"r^2 = {r**2:.3g} under-resolved: below 4 ht = {4 * g.ht:.3g}")
    strip = ParabolicStrip.for_radius(r)
    ox, ot = float(origin[0]), float(origin[1])
    tau = g.ts - ot
    if tau[0] > strip.t_lo or tau[-1] < strip.t_hi:
        raise ValueError(
            f"strip ({strip.t_lo:.4g}, {strip.t_hi:.4g}) outside shifted data "
            f"range ({tau[0]:.4g}, {tau[-1]:.4g})")
    xs = g.xs - ox
    sel = np.abs(xs) <= strip.r_cut
    idx = np.nonzero(sel)[0]
    if idx.size < 3:
        raise ValueError("truncation window holds fewer than 3 nodes")
    wx = np.full(idx.size, g.hx)
    wx[0] = wx[-1] = g.hx / 2
    truncated = (idx[0] == 0 and xs[0] > -strip.r_cut) or (
        idx[-1] == g.nx - 1 and xs[-1] < strip.r_cut)

    inside = np.nonzero((tau > strip.t_lo) & (tau < strip.t_hi))[0]
    taus = np.concatenate([[strip.t_lo], tau[inside], [strip.t_hi]])
    slices_u, slices_grad, slices_ut = [], [], []

    def interp_slice(arr2d, t_target):
        k = int(np.searchsorted(tau, t_target, side="right"))
        k = min(max(k, 1), g.nt - 1)
        w = (t_target - tau[k - 1]) / (tau[k] - tau[k - 1])
        return (1 - w) * arr2d[k - 1] + w * arr2d[k]

    for t_target in (strip.t_lo, strip.t_hi):
        slices_u.append(interp_slice(u.values[:, idx], t_target))
        slices_grad.append(interp_slice(bundle.grad[0][:, idx], t_target))
        slices_ut.append(interp_slice(bundle.ut[:, idx], t_target))
    su = [slices_u[0]] + [u.values[k, idx] for k in inside] + [slices_u[1]]
    sg = [slices_grad[0]] + [bundle.grad[0][k, idx] for k in inside] + [slices_grad[1]]
    st = [slices_ut[0]] + [bundle.ut[k, idx] for k in inside] + [slices_ut[1]]
    return _StripQuadrature(taus=taus, weights_t=True, slices_u=su,
                            slices_grad=sg, slices_ut=st, xs=xs[idx], wx=wx,
                            truncated=truncated)


@dataclass
class WeissValue:
    psi: float
    r: float
    variant: str
    truncated_at_boundary: bool
    n_levels: int


def weiss_energy(u: SpaceTimeField, r: float, origin=(0.0, 0.0),
                 variant: str = "proof-2x",
                 bundle: DerivativeBundle | None = None) -> WeissValue:
    """Psi(r, u) with the reference point shifted to origin=(x, t)."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {sorted(VARIANTS)}")
    K = VARIANTS[variant]
    if bundle is None:
        bundle = finite_differences(u)
    q = _build_quadrature(u, r, origin, bundle)
    vals = np.empty(q.taus.size)
    for i, s in enumerate(q.taus):
        G = backward_heat_kernel(q.xs, s, n=1)
        uu = q.slices_u[i]
        integ = q.slices_grad[i] ** 2 - K * np.maximum(uu, 0.0) + uu**2 / s
        vals[i] = (integ * G) @ q.wx
    psi = float(np.trapezoid(vals, q.taus) / r**4)
    return WeissValue(psi=psi, r=r, variant=variant,
                      truncated_at_boundary=q.truncated,
                      n_levels=int(q.taus.size - 2))


def weiss_derivative_formula(u: SpaceTimeField, r: float, origin=(0.0, 0.0),
                             bundle: DerivativeBundle | None = None) -> float:
    """Right side of the monotonicity identity:
    r^-5 int (1/(-t)) (2 t u_t + <x, grad u> - 2u)^2 G dx dt over the strip.

    Nonnegative by construction; variant-independent.
    """
    if bundle is None:
        bundle = finite_differences(u)
    q = _build_quadrature(u, r, origin, bundle)
    vals = np.empty(q.taus.size)
    for i, s in enumerate(q.taus):
        G = backward_heat_kernel(q.xs, s, n=1)
        core = (2 * s * q.slices_ut[i] + q.xs * q.slices_grad[i]
                - 2 * q.slices_u[i]) ** 2
        vals[i] = (core * G / (-s)) @ q.wx
    return float(np.trapezoid(vals, q.taus) / r**5)


@dataclass
class DerivativeCheck:
    r: float
    dr: float
    fd_slope: float
    formula: float
    rel_error: float
    monotone: bool
    variant: str


def weiss_derivative_check(u: SpaceTimeField, r: float, dr: float,
                           origin=(0.0, 0.0), variant: str = "proof-2x",
                           tol: float = 1e-3,
                           bundle: DerivativeBundle | None = None) -> DerivativeCheck:
    """Centered difference of Psi against the derivative formula at r."""
    if bundle is None:
        bundle = finite_differences(u)
    lo = weiss_energy(u, r - dr, origin, variant, bundle).psi
    hi = weiss_energy(u, r + dr, origin, variant, bundle).psi
    fd = (hi - lo) / (2 * dr)
    formula = weiss_derivative_formula(u, r, origin, bundle)
    denom = max(abs(fd), abs(formula), 1e-300)
    rel = abs(fd - formula) / denom
    return DerivativeCheck(r=r, dr=dr, fd_slope=fd, formula=formula,
                           rel_error=rel, monotone=fd >= -tol, variant=variant)


@dataclass
class WeissCurve:
    rs: np.ndarray
    psi: np.ndarray
    dpsi_fd: np.ndarray
    dpsi_formula: np.ndarray
    variant: str

    def min_fd_slope(self) -> float:
        return float(self.dpsi_fd.min())

    def to_csv(self, path):
        data = np.column_stack([self.rs, self.psi, self.dpsi_fd,
                                self.dpsi_formula,
                                np.full(self.rs.size, VARIANTS[self.variant])])
        np.savetxt(path, data, delimiter=",",
                   header="r,psi,dpsi_fd,dpsi_formula,variant_flag",
                   comments="", fmt="%.17g")
        return path


def weiss_curve(u: SpaceTimeField, rs, origin=(0.0, 0.0),
                variant: str = "proof-2x", dr_frac: float = 0.05) -> WeissCurve:
    """Psi over a radius sequence plus both derivative routes per radius."""
    rs = np.asarray(sorted(rs, reverse=True), dtype=float)
    bundle = finite_differences(u)
    psi = np.array([weiss_energy(u, r, origin, variant, bundle).psi for r in rs])
    fd = np.empty_like(psi)
    formula = np.empty_like(psi)
    for i, r in enumerate(rs):
        chk = weiss_derivative_check(u, r, dr_frac * r, origin, variant,
                                     bundle=bundle)
        fd[i] = chk.fd_slope
        formula[i] = chk.formula
    return WeissCurve(rs=rs, psi=psi, dpsi_fd=fd, dpsi_formula=formula,
                      variant=variant)


def homogeneity_defect(u: SpaceTimeField, r: float, origin=(0.0, 0.0)) -> float:
    """sup |u(r x, r^2 t) - r^2 u(x,t)| / (1 + r^2 sup|u|) over shared nodes."""
    g = u.grid
    if g.spatial_dim != 1:
        raise NotImplementedError("homogeneity defect implemented in 1d")
    ox, ot = float(origin[0]), float(origin[1])
    xs = g.xs - ox
    ts = g.ts - ot
    T, X = np.meshgrid(ts, xs, indexing="ij")
    ok = ((r * X >= xs[0]) & (r * X <= xs[-1])
          & (r**2 * T >= ts[0]) & (r**2 * T <= ts[-1]))
    if not ok.any():
        return 0.0
    u_at = u.interp(r * X[ok] + ox, r**2 * T[ok] + ot)
    defect = np.abs(u_at - r**2 * u.values[ok])
    return float(defect.max() / (1 + r**2 * np.abs(u.values).max()))


@dataclass
class GrowthSeries:
    rs: np.ndarray
    S: np.ndarray
    ratio: float            # max/min over the resolvable range
    log_slope: float        # trend of log S against log r (nan if S <= 0)


def growth_series(u: SpaceTimeField, rs, origin=(0.0, 0.0)) -> GrowthSeries:
    """S_r = sup over Q_1 nodes (x,t) of u(r x, r^2 t)/r^2 about the origin.

    One fixed node set (the grid nodes of Q_1(origin) whose scaled images
    stay in the domain) is sampled at its r-scaled images by multilinear
    interpolation, so values at different r are directly comparable.
    """
    g = u.grid
    if g.spatial_dim != 1:
        raise NotImplementedError("growth series implemented in 1d")
    ox, ot = float(origin[0]), float(origin[1])
    xs = g.xs - ox
    ts = g.ts - ot
    T, X = np.meshgrid(ts, xs, indexing="ij")
    in_q1 = np.abs(X) + np.sqrt(np.abs(T)) < 1.0
    rs = np.asarray(sorted(rs, reverse=True), dtype=float)
    S = np.empty(rs.size)
    for i, r in enumerate(rs):
        ok = (in_q1 & (r * X >= xs[0]) & (r * X <= xs[-1])
              & (r**2 * T >= ts[0]) & (r**2 * T <= ts[-1]))
        if not ok.any():
            raise ValueError(f"no usable Q_1 nodes at r={r}")
        vals = u.interp(r * X[ok] + ox, r**2 * T[ok] + ot)
        S[i] = float(vals.max()) / r**2
    ratio = float(S.max() / S.min()) if S.min() > 0 else np.inf
    slope = np.nan
    if np.all(S > 0) and rs.size >= 2:
        slope = float(np.polyfit(np.log(rs), np.log(S), 1)[0])
    return GrowthSeries(rs=rs, S=S, ratio=ratio, log_slope=slope)
