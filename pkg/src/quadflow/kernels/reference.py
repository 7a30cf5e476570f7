"""Pure numpy kernel backend.

Same call surface as :mod:`quadflow.kernels.jit`, selected with
``QUADFLOW_BACKEND=numpy``. Right-hand sides are vectorized; the step loop
is plain Python.
"""

import numpy as np

TWO_PI = 2.0 * np.pi

# Dormand-Prince 5(4) tableau. The fifth-order solution is propagated and
# stage seven reuses the accepted derivative (FSAL).
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


# ----------------------------------------------------------------------
# right-hand sides
# ----------------------------------------------------------------------

def quad_rhs(args, y):
    """f_i = sum_q v_q y_{j_q} y_{k_q} for a sparse quadratic tensor."""
    ci, cj, ck, cv, d = args
    return np.bincount(ci, weights=cv * y[cj] * y[ck], minlength=d)


def quad_rhs_tan(args, z):
    """Quadratic flow with one tangent vector appended to the state."""
    ci, cj, ck, cv, d = args
    y = z[:d]
    w = z[d:]
    out = np.empty(2 * d)
    out[:d] = np.bincount(ci, weights=cv * y[cj] * y[ck], minlength=d)
    out[d:] = np.bincount(ci, weights=cv * (w[cj] * y[ck] + y[cj] * w[ck]), minlength=d)
    return out


def torus_rhs(args, x):
    """X(x) = sum_k a_k sin(2 pi k.x) + b_k cos(2 pi k.x), rows of K are k."""
    freqs, asin, bcos = args
    ph = TWO_PI * (freqs @ x)
    return asin.T @ np.sin(ph) + bcos.T @ np.cos(ph)


def torus_rhs_tan(args, z):
    freqs, asin, bcos = args
    n = freqs.shape[1]
    x = z[:n]
    w = z[n:]
    ph = TWO_PI * (freqs @ x)
    s = np.sin(ph)
    c = np.cos(ph)
    kw = TWO_PI * (freqs @ w)
    out = np.empty(2 * n)
    out[:n] = asin.T @ s + bcos.T @ c
    out[n:] = asin.T @ (c * kw) - bcos.T @ (s * kw)
    return out


def poly_rhs(args, x):
    """Polynomial vector field from concatenated monomial tables."""
    exps, coefs, ptr = args
    mono = coefs * np.prod(x[None, :] ** exps, axis=1)
    ncomp = ptr.shape[0] - 1
    out = np.empty(ncomp)
    for c in range(ncomp):
        out[c] = mono[ptr[c]:ptr[c + 1]].sum()
    return out


def poly_rhs_tan(args, z):
    exps, coefs, ptr, dexps, dcoefs, dptr = args
    ncomp = ptr.shape[0] - 1
    x = z[:ncomp]
    w = z[ncomp:]
    out = np.empty(2 * ncomp)
    mono = coefs * np.prod(x[None, :] ** exps, axis=1)
    for c in range(ncomp):
        out[c] = mono[ptr[c]:ptr[c + 1]].sum()
    dmono = dcoefs * np.prod(x[None, :] ** dexps, axis=1)
    for c in range(ncomp):
        acc = 0.0
        for l in range(ncomp):
            blk = c * ncomp + l
            acc += w[l] * dmono[dptr[blk]:dptr[blk + 1]].sum()
        out[ncomp + c] = acc
    return out


# ----------------------------------------------------------------------
# adaptive integrator
# ----------------------------------------------------------------------

def _rms(v):
    return np.sqrt(np.mean(v * v))


def _initial_step(rhs, args, y0, f0, span, rtol, atol, max_step):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = rhs(args, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.25
    return min(100.0 * h0, h1, span, max_step)


def rk45(rhs, args, y0, t0, t1, rtol, atol, max_step, first_step):
    """Integrate dy/dt = rhs(args, y) over [t0, t1].

    Local error is controlled per unit step: a step is accepted when the
    scaled error estimate is below h * tol, which keeps the accumulated
    global error proportional to the tolerance. Returns
    (ts, ys, fs, naccepted, nrejected, status). The derivative at every
    accepted node is stored so callers can build a cubic Hermite
    interpolant. status 0 is success, 1 means the step size underflowed.
    """
    d = y0.shape[0]
    f0 = rhs(args, y0)
    span = t1 - t0
    if first_step > 0.0:
        h = min(first_step, span, max_step)
    else:
        h = _initial_step(rhs, args, y0, f0, span, rtol, atol, max_step)

    cap = 512
    ts = np.empty(cap)
    ys = np.empty((cap, d))
    fs = np.empty((cap, d))
    ts[0] = t0
    ys[0] = y0
    fs[0] = f0
    m = 1

    t = t0
    y = y0.copy()
    f = f0.copy()
    nacc = 0
    nrej = 0
    status = 0
    rejected = False

    while t < t1:
        h = min(h, max_step, t1 - t)
        if h < 1e-14 * max(abs(t), 1.0):
            status = 1
            break
        k1 = f
        k2 = rhs(args, y + h * (_A21 * k1))
        k3 = rhs(args, y + h * (_A31 * k1 + _A32 * k2))
        k4 = rhs(args, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = rhs(args, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = rhs(args, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        ynew = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = rhs(args, ynew)
        errv = (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        errnorm = _rms(errv / scale)  # error per unit step
        if errnorm <= 1.0:
            t = t + h
            y = ynew
            f = k7
            if m == cap:
                cap *= 2
                ts = np.concatenate((ts, np.empty(cap - m)))
                ys = np.concatenate((ys, np.empty((cap - m, d))))
                fs = np.concatenate((fs, np.empty((cap - m, d))))
            ts[m] = t
            ys[m] = y
            fs[m] = f
            m += 1
            nacc += 1
            if errnorm == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = min(_MAX_FACTOR, _SAFETY * errnorm ** -0.25)
            if rejected:
                factor = min(1.0, factor)
            rejected = False
        else:
            nrej += 1
            factor = max(_MIN_FACTOR, _SAFETY * errnorm ** -0.25)
            rejected = True
        h = h * factor

    return ts[:m], ys[:m], fs[:m], nacc, nrej, status
