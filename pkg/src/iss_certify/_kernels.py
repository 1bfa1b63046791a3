"""Compiled inner loops: Thomas factorisation and the IMEX time march."""

import numpy as np
from numba import njit

OK = 0
BLOWUP = 1
SINGULAR = 2
DT_GUARD = 3


@njit(cache=True, nogil=True)
def thomas_factor(lower, diag, upper, cp, inv):
    """Forward sweep of the Thomas algorithm for a fixed matrix.

    Returns 0 on success, otherwise 1 + index of the vanishing pivot.
    """
    n = diag.shape[0]
    piv = diag[0]
    if piv == 0.0 or not np.isfinite(piv):
        return 1
    inv[0] = 1.0 / piv
    cp[0] = upper[0] * inv[0]
    for i in range(1, n):
        piv = diag[i] - lower[i] * cp[i - 1]
        if piv == 0.0 or not np.isfinite(piv):
            return i + 1
        inv[i] = 1.0 / piv
        cp[i] = upper[i] * inv[i] if i < n - 1 else 0.0
    return 0


@njit(cache=True, nogil=True)
def thomas_solve(lower, cp, inv, rhs, out):
    n = rhs.shape[0]
    out[0] = rhs[0] * inv[0]
    for i in range(1, n):
        out[i] = (rhs[i] - lower[i] * out[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]


@njit(cache=True, nogil=True)
def solve_tridiagonal(lower, diag, upper, rhs):
    """One-shot Thomas solve; ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = diag.shape[0]
    cp = np.empty(n)
    inv = np.empty(n)
    out = np.empty(n)
    status = thomas_factor(lower, diag, upper, cp, inv)
    if status != 0:
        out[:] = np.nan
        return out, status
    thomas_solve(lower, cp, inv, rhs, out)
    return out, 0


@njit(cache=True, nogil=True)
def _odd_poly(mu, s):
    out = 0.0
    s2 = s * s
    p = s
    for m in mu:
        out += m * p
        p *= s2
    return out


@njit(cache=True, nogil=True)
def _odd_poly_deriv(mu, s):
    out = 0.0
    s2 = s * s
    p = 1.0
    for i in range(mu.shape[0]):
        out += (2 * i + 1) * mu[i] * p
        p *= s2
    return out


@njit(cache=True, nogil=True)
def _nonlinear(mu, w_in, w_out, u, shift, has_shift, out):
    """out = w_in * h(w_out * (u + shift)); returns max |h'| over the arguments."""
    n = u.shape[0]
    dmax = 0.0
    for j in range(n):
        arg = u[j]
        if has_shift:
            arg += shift[j]
        arg *= w_out[j]
        out[j] = w_in[j] * _odd_poly(mu, arg)
        d = abs(_odd_poly_deriv(mu, arg))
        if d > dmax:
            dmax = d
    return dmax


@njit(cache=True, nogil=True)
def _apply(lower, diag, upper, u, out):
    n = u.shape[0]
    for j in range(n):
        acc = diag[j] * u[j]
        if j > 0:
            acc += lower[j] * u[j - 1]
        if j < n - 1:
            acc += upper[j] * u[j + 1]
        out[j] = acc


@njit(cache=True, nogil=True)
def march(
    a_low, a_diag, a_up,
    dir0, dir1, g0, g1, data0, data1,
    F, has_source,
    u0, mu, w_in, w_out, S, has_shift,
    theta, startup, heun, dt, c_abs, dt_safety, blowup,
):
    """Advance u_t = A u + g(t) + F - N(u) on a uniform time grid.

    ``A`` is tridiagonal with Dirichlet rows zeroed; ``data0``/``data1`` hold
    the Dirichlet node values (``dir*`` true) or the Robin data multiplied by
    ``g0``/``g1``. Returns ``(values, status, step)``.
    """
    nt1 = data0.shape[0]
    n = u0.shape[0]
    values = np.empty((nt1, n))
    values[0, :] = u0
    has_h = mu.shape[0] > 0

    # two factorisations: implicit Euler start-up and the main scheme
    lows = np.empty((2, n))
    diags = np.empty((2, n))
    ups = np.empty((2, n))
    cps = np.empty((2, n))
    invs = np.empty((2, n))
    thetas = np.array([1.0, theta])
    for m in range(2):
        th = thetas[m]
        for j in range(n):
            lows[m, j] = -th * dt * a_low[j]
            diags[m, j] = 1.0 - th * dt * a_diag[j]
            ups[m, j] = -th * dt * a_up[j]
        if dir0:
            diags[m, 0] = 1.0
            ups[m, 0] = 0.0
        if dir1:
            diags[m, n - 1] = 1.0
            lows[m, n - 1] = 0.0
        status = thomas_factor(lows[m], diags[m], ups[m], cps[m], invs[m])
        if status != 0:
            return values, SINGULAR, 0

    Au = np.empty(n)
    base = np.empty(n)
    rhs = np.empty(n)
    nl_old = np.zeros(n)
    nl_new = np.zeros(n)
    ustar = np.empty(n)
    unew = np.empty(n)
    zero_shift = np.zeros(n)
    guard = dt_safety

    for step in range(nt1 - 1):
        m = 0 if step < startup else 1
        th = thetas[m]
        u = values[step]
        _apply(a_low, a_diag, a_up, u, Au)
        for j in range(n):
            base[j] = u[j] + (1.0 - th) * dt * Au[j]
            if has_source:
                base[j] += dt * (th * F[step + 1, j] + (1.0 - th) * F[step, j])
        if not dir0:
            base[0] += dt * g0 * (th * data0[step + 1] + (1.0 - th) * data0[step])
        if not dir1:
            base[n - 1] += dt * g1 * (th * data1[step + 1] + (1.0 - th) * data1[step])

        if has_h:
            dmax = _nonlinear(mu, w_in, w_out, u, S[step] if has_shift else zero_shift, has_shift, nl_old)
            if dt * (2.0 * dmax + c_abs + 1.0) > guard:
                return values, DT_GUARD, step
        for j in range(n):
            rhs[j] = base[j] - dt * nl_old[j] if has_h else base[j]
        if dir0:
            rhs[0] = data0[step + 1]
        if dir1:
            rhs[n - 1] = data1[step + 1]
        thomas_solve(lows[m], cps[m], invs[m], rhs, unew)

        if has_h and heun and m == 1:
            for j in range(n):
                ustar[j] = unew[j]
            _nonlinear(mu, w_in, w_out, ustar, S[step + 1] if has_shift else zero_shift, has_shift, nl_new)
            for j in range(n):
                rhs[j] = base[j] - 0.5 * dt * (nl_old[j] + nl_new[j])
            if dir0:
                rhs[0] = data0[step + 1]
            if dir1:
                rhs[n - 1] = data1[step + 1]
            thomas_solve(lows[m], cps[m], invs[m], rhs, unew)

        for j in range(n):
            v = unew[j]
            if not np.isfinite(v) or abs(v) > blowup:
                values[step + 1, :] = unew
                return values, BLOWUP, step + 1
            values[step + 1, j] = v
    return values, OK, nt1 - 1
