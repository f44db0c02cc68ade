"""Hot numerical kernels: rate evaluation, the RKF45 stepper, power iteration.

Every kernel is written once, in the numba-compatible subset of numpy. When
numba is importable (and not disabled) the module rebinds each function to its
``@njit``-compiled version at import time; otherwise the same source runs as
vectorized numpy. Set ``BIVIRUS_NUMBA=0`` to force the pure-numpy path.
``benchmarks/benchmark_backends.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("BIVIRUS_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "off", "no")

NUMBA_ENABLED = False
if _want_numba:
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

# Rate-model kind codes shared with the Python layer.
INFECT_LINEAR = 0
INFECT_LOG = 1
RECOVER_LINEAR = 0
RECOVER_POLY = 1

# Integrator termination codes.
STATUS_CONVERGED = 0
STATUS_MAX_TIME = 1
STATUS_STEP_FAILURE = 2
STATUS_STEP_BUDGET = 3

# Steps leaving the invariant set by more than this are rejected and retried.
DOMAIN_REJECT_TOL = 1e-12
STEP_UNDERFLOW = 1e-14


def infection_rate(code, param, adj, x):
    if code == INFECT_LINEAR:
        return param * np.dot(adj, x)
    # INFECT_LOG: per-node sum of a_ij * ln(1 + param * x_j)
    return np.dot(adj, np.log1p(param * x))


def recovery_rate(code, param, x):
    if code == RECOVER_LINEAR:
        return param * x
    # RECOVER_POLY: (1 + x_i)^param - 1
    return (1.0 + x) ** param - 1.0


def infection_jacobian(code, param, adj, x):
    if code == INFECT_LINEAR:
        return param * adj
    # column j scaled by param / (1 + param * x_j)
    return adj * (param / (1.0 + param * x))


def recovery_jacobian_diag(code, param, x):
    if code == RECOVER_LINEAR:
        return np.full(x.shape[0], param)
    return param * (1.0 + x) ** (param - 1.0)


def bivirus_rhs(adj_a, adj_b, ic1, p1, rc1, q1, ic2, p2, rc2, q2, x, y):
    s = 1.0 - x - y
    dx = s * infection_rate(ic1, p1, adj_a, x) - recovery_rate(rc1, q1, x)
    dy = s * infection_rate(ic2, p2, adj_b, y) - recovery_rate(rc2, q2, y)
    return dx, dy


def clamp_to_domain(x, y):
    """Project a state onto {x, y >= 0, x + y <= 1} (snaps tiny violations)."""
    xc = np.minimum(np.maximum(x, 0.0), 1.0)
    yc = np.minimum(np.maximum(y, 0.0), 1.0)
    s = xc + yc
    scale = 1.0 / np.maximum(s, 1.0)
    return xc * scale, yc * scale


def rkf45_bivirus(adj_a, adj_b, ic1, p1, rc1, q1, ic2, p2, rc2, q2,
                  x0, y0, t_max, conv_tol, rtol, atol, max_steps):
    """Adaptive Runge-Kutta-Fehlberg 4(5) for the two-virus vector field.

    Integrates from (x0, y0) until t_max, stopping early once the max-norm of
    the field drops below conv_tol (conv_tol <= 0 disables the early stop).
    Candidate steps leaving the invariant set beyond DOMAIN_REJECT_TOL are
    rejected and retried at half step; accepted states are clamped exactly
    into the set. Returns (times, xs, ys, status, residual).
    """
    n = x0.shape[0]
    cap = 256
    times = np.empty(cap)
    xs = np.empty((cap, n))
    ys = np.empty((cap, n))

    x, y = clamp_to_domain(x0, y0)
    t = 0.0
    times[0] = 0.0
    xs[0, :] = x
    ys[0, :] = y
    m = 1

    k1x, k1y = bivirus_rhs(adj_a, adj_b, ic1, p1, rc1, q1, ic2, p2, rc2, q2, x, y)
    resid = max(np.max(np.abs(k1x)), np.max(np.abs(k1y)))
    if conv_tol > 0.0 and resid < conv_tol:
        return times[:m], xs[:m], ys[:m], STATUS_CONVERGED, resid

    status = STATUS_MAX_TIME
    h = 0.01 if t_max > 0.01 else t_max
    while True:
        remaining = t_max - t
        if remaining <= STEP_UNDERFLOW:
            status = STATUS_MAX_TIME
            break
        if m >= max_steps:
            status = STATUS_STEP_BUDGET
            break
        if h > remaining:
            h = remaining

        x2 = x + h * (0.25 * k1x)
        y2 = y + h * (0.25 * k1y)
        k2x, k2y = bivirus_rhs(adj_a, adj_b, ic1, p1, rc1, q1, ic2, p2, rc2, q2, x2, y2)

        x3 = x + h * ((3.0 / 32.0) * k1x + (9.0 / 32.0) * k2x)
        y3 = y + h * ((3.0 / 32.0) * k1y + (9.0 / 32.0) * k2y)
        k3x, k3y = bivirus_rhs(adj_a, adj_b, ic1, p1, rc1, q1, ic2, p2, rc2, q2, x3, y3)

        x4 = x + h * ((1932.0 / 2197.0) * k1x - (7200.0 / 2197.0) * k2x
                      + (7296.0 / 2197.0) * k3x)
        y4 = y + h * ((1932.0 / 2197.0) * k1y - (7200.0 / 2197.0) * k2y
                      + (7296.0 / 2197.0) * k3y)
        k4x, k4y = bivirus_rhs(adj_a, adj_b, ic1, p1, rc1, q1, ic2, p2, rc2, q2, x4, y4)

        x5 = x + h * ((439.0 / 216.0) * k1x - 8.0 * k2x + (3680.0 / 513.0) * k3x
                      - (845.0 / 4104.0) * k4x)
        y5 = y + h * ((439.0 / 216.0) * k1y - 8.0 * k2y + (3680.0 / 513.0) * k3y
                      - (845.0 / 4104.0) * k4y)
        k5x, k5y = bivirus_rhs(adj_a, adj_b, ic1, p1, rc1, q1, ic2, p2, rc2, q2, x5, y5)

        x6 = x + h * ((-8.0 / 27.0) * k1x + 2.0 * k2x - (3544.0 / 2565.0) * k3x
                      + (1859.0 / 4104.0) * k4x - (11.0 / 40.0) * k5x)
        y6 = y + h * ((-8.0 / 27.0) * k1y + 2.0 * k2y - (3544.0 / 2565.0) * k3y
                      + (1859.0 / 4104.0) * k4y - (11.0 / 40.0) * k5y)
        k6x, k6y = bivirus_rhs(adj_a, adj_b, ic1, p1, rc1, q1, ic2, p2, rc2, q2, x6, y6)

        # 4th-order propagating solution (classic Fehlberg weights).
        xn = x + h * ((25.0 / 216.0) * k1x + (1408.0 / 2565.0) * k3x
                      + (2197.0 / 4104.0) * k4x - 0.2 * k5x)
        yn = y + h * ((25.0 / 216.0) * k1y + (1408.0 / 2565.0) * k3y
                      + (2197.0 / 4104.0) * k4y - 0.2 * k5y)

        # Difference to the embedded 5th-order solution.
        ex = h * ((1.0 / 360.0) * k1x - (128.0 / 4275.0) * k3x
                  - (2197.0 / 75240.0) * k4x + 0.02 * k5x + (2.0 / 55.0) * k6x)
        ey = h * ((1.0 / 360.0) * k1y - (128.0 / 4275.0) * k3y
                  - (2197.0 / 75240.0) * k4y + 0.02 * k5y + (2.0 / 55.0) * k6y)

        domain_ok = (np.min(xn) >= -DOMAIN_REJECT_TOL
                     and np.min(yn) >= -DOMAIN_REJECT_TOL
                     and np.max(xn + yn) <= 1.0 + DOMAIN_REJECT_TOL)
        if not domain_ok:
            h *= 0.5
            if h < STEP_UNDERFLOW:
                status = STATUS_STEP_FAILURE
                break
            continue

        scale_x = atol + rtol * np.maximum(np.abs(x), np.abs(xn))
        scale_y = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
        errn = max(np.max(np.abs(ex) / scale_x), np.max(np.abs(ey) / scale_y))

        if not np.isfinite(errn):
            h *= 0.5
            if h < STEP_UNDERFLOW:
                status = STATUS_STEP_FAILURE
                break
            continue

        if errn <= 1.0:
            xn, yn = clamp_to_domain(xn, yn)
            t = t + h
            if m >= cap:
                new_cap = cap * 2
                new_times = np.empty(new_cap)
                new_xs = np.empty((new_cap, n))
                new_ys = np.empty((new_cap, n))
                new_times[:cap] = times
                new_xs[:cap] = xs
                new_ys[:cap] = ys
                times = new_times
                xs = new_xs
                ys = new_ys
                cap = new_cap
            times[m] = t
            xs[m, :] = xn
            ys[m, :] = yn
            m += 1
            x = xn
            y = yn
            k1x, k1y = bivirus_rhs(adj_a, adj_b, ic1, p1, rc1, q1,
                                   ic2, p2, rc2, q2, x, y)
            resid = max(np.max(np.abs(k1x)), np.max(np.abs(k1y)))
            if conv_tol > 0.0 and resid < conv_tol:
                status = STATUS_CONVERGED
                break
            if errn <= 0.0:
                fac = 5.0
            else:
                fac = 0.9 * errn ** -0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h *= fac
        else:
            fac = 0.9 * errn ** -0.2
            if fac < 0.1:
                fac = 0.1
            h *= fac
            if h < STEP_UNDERFLOW:
                status = STATUS_STEP_FAILURE
                break

    return times[:m], xs[:m], ys[:m], status, resid


def power_iteration(mat, tol, max_iter):
    """Power iteration for a nonnegative matrix, all-ones start vector.

    Returns (value, vector, iterations, residual, converged); the vector has
    unit max-norm and residual = ||M v - value v||_inf for the returned pair.
    """
    v = np.ones(mat.shape[0])
    lam = 0.0
    resid = 1e300
    converged = False
    iters = 0
    for it in range(1, max_iter + 1):
        iters = it
        w = np.dot(mat, v)
        lam = np.dot(v, w) / np.dot(v, v)
        resid = np.max(np.abs(w - lam * v)) / np.max(np.abs(v))
        if resid <= tol:
            converged = True
            break
        wmax = np.max(w)
        if wmax <= 0.0:
            break
        v = w / wmax
    v = v / np.max(np.abs(v))
    return lam, v, iters, resid, converged


if NUMBA_ENABLED:
    # Rebind in dependency order so jitted callers resolve jitted callees.
    _opts = dict(cache=True, nogil=True)
    infection_rate = _njit(**_opts)(infection_rate)
    recovery_rate = _njit(**_opts)(recovery_rate)
    infection_jacobian = _njit(**_opts)(infection_jacobian)
    recovery_jacobian_diag = _njit(**_opts)(recovery_jacobian_diag)
    bivirus_rhs = _njit(**_opts)(bivirus_rhs)
    clamp_to_domain = _njit(**_opts)(clamp_to_domain)
    rkf45_bivirus = _njit(**_opts)(rkf45_bivirus)
    power_iteration = _njit(**_opts)(power_iteration)
