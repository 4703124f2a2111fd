"""Compiled inner loops for the 1d semi-implicit solver.

The implicit diffusion matrix (I - ht*Lap_h) with Dirichlet rows eliminated
is constant during a solve, so the Thomas forward coefficients are factored
once and every Picard iteration is a single O(nx) sweep.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def step_chain_1d(u0, va, vb, store_every, lam, ht_sub, eps,
                  picard_tol, max_picard, out):
    """March the semi-implicit scheme over len(va)-1 substeps.

    u0:  (nx,) initial values
    va, vb: lateral Dirichlet values at every substep time (nsub+1,)
    store_every: write the state into out every this many substeps
    out: (nlevels, nx) with out[0] already holding u0
    Returns (status, max_picard_used, worst_final_change); status 0 ok,
    1 Picard failed to reach picard_tol within max_picard.
    """
    nx = u0.size
    n = nx - 2
    cp = np.empty(n)
    dn = np.empty(n)
    b = 1.0 + 2.0 * lam
    a = -lam
    dn[0] = b
    cp[0] = a / b
    for i in range(1, n):
        dn[i] = b - a * cp[i - 1]
        cp[i] = a / dn[i]

    u = u0.copy()
    rhs = np.empty(n)
    d = np.empty(n)
    w = np.empty(n)
    unew = np.empty(n)
    nsub = va.size - 1
    status = 0
    max_used = 0
    worst = 0.0
    level = 0
    for j in range(nsub):
        ua = va[j + 1]
        ub = vb[j + 1]
        for i in range(n):
            rhs[i] = u[i + 1]
        rhs[0] += lam * ua
        rhs[n - 1] += lam * ub
        # Picard on the lagged reaction term
        for i in range(n):
            unew[i] = u[i + 1]
        change = 0.0
        it = 0
        for it in range(max_picard):
            for i in range(n):
                v = unew[i]
                if v <= 0.0:
                    fv = 0.0
                elif v >= eps:
                    fv = 1.0
                else:
                    fv = v / eps
                d[i] = rhs[i] + ht_sub * fv
            # Thomas forward/backward sweeps
            w[0] = d[0] / dn[0]
            for i in range(1, n):
                w[i] = (d[i] - a * w[i - 1]) / dn[i]
            x_last = w[n - 1]
            change = abs(x_last - unew[n - 1])
            unew[n - 1] = x_last
            for i in range(n - 2, -1, -1):
                xi = w[i] - cp[i] * unew[i + 1]
                diff = abs(xi - unew[i])
                if diff > change:
                    change = diff
                unew[i] = xi
            if change < picard_tol:
                break
        if it + 1 > max_used:
            max_used = it + 1
        if change >= picard_tol:
            status = 1
            if change > worst:
                worst = change
        u[0] = ua
        u[nx - 1] = ub
        for i in range(n):
            u[i + 1] = unew[i]
        if (j + 1) % store_every == 0:
            level += 1
            for i in range(nx):
                out[level, i] = u[i]
    return status, max_used, worst
