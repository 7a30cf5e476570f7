"""Numba kernel backend.

Loop-level twins of :mod:`quadflow.kernels.reference`. The right-hand sides
are cached ahead of time; the integrator core is specialized per RHS the
first time it runs in a process.
"""

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi

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


@njit(cache=True)
def quad_rhs(args, y):
    ci, cj, ck, cv, d = args
    out = np.zeros(d)
    for q in range(ci.shape[0]):
        out[ci[q]] += cv[q] * y[cj[q]] * y[ck[q]]
    return out


@njit(cache=True)
def quad_rhs_tan(args, z):
    ci, cj, ck, cv, d = args
    out = np.zeros(2 * d)
    for q in range(ci.shape[0]):
        i, j, k = ci[q], cj[q], ck[q]
        v = cv[q]
        out[i] += v * z[j] * z[k]
        out[d + i] += v * (z[d + j] * z[k] + z[j] * z[d + k])
    return out


@njit(cache=True)
def torus_rhs(args, x):
    freqs, asin, bcos = args
    nk = freqs.shape[0]
    n = freqs.shape[1]
    out = np.zeros(n)
    for r in range(nk):
        ph = 0.0
        for l in range(n):
            ph += freqs[r, l] * x[l]
        ph *= TWO_PI
        s = np.sin(ph)
        c = np.cos(ph)
        for i in range(n):
            out[i] += asin[r, i] * s + bcos[r, i] * c
    return out


@njit(cache=True)
def torus_rhs_tan(args, z):
    freqs, asin, bcos = args
    nk = freqs.shape[0]
    n = freqs.shape[1]
    out = np.zeros(2 * n)
    for r in range(nk):
        ph = 0.0
        kw = 0.0
        for l in range(n):
            ph += freqs[r, l] * z[l]
            kw += freqs[r, l] * z[n + l]
        ph *= TWO_PI
        kw *= TWO_PI
        s = np.sin(ph)
        c = np.cos(ph)
        for i in range(n):
            out[i] += asin[r, i] * s + bcos[r, i] * c
            out[n + i] += (asin[r, i] * c - bcos[r, i] * s) * kw
    return out


@njit(cache=True)
def poly_rhs(args, x):
    exps, coefs, ptr = args
    ncomp = ptr.shape[0] - 1
    nvars = exps.shape[1]
    out = np.zeros(ncomp)
    for c in range(ncomp):
        acc = 0.0
        for t in range(ptr[c], ptr[c + 1]):
            v = coefs[t]
            for l in range(nvars):
                e = exps[t, l]
                if e > 0:
                    v *= x[l] ** e
            acc += v
        out[c] = acc
    return out


@njit(cache=True)
def poly_rhs_tan(args, z):
    exps, coefs, ptr, dexps, dcoefs, dptr = args
    ncomp = ptr.shape[0] - 1
    nvars = exps.shape[1]
    out = np.zeros(2 * ncomp)
    for c in range(ncomp):
        acc = 0.0
        for t in range(ptr[c], ptr[c + 1]):
            v = coefs[t]
            for l in range(nvars):
                e = exps[t, l]
                if e > 0:
                    v *= z[l] ** e
            acc += v
        out[c] = acc
    for c in range(ncomp):
        acc = 0.0
        for l in range(ncomp):
            blk = c * ncomp + l
            dv = 0.0
            for t in range(dptr[blk], dptr[blk + 1]):
                v = dcoefs[t]
                for p in range(nvars):
                    e = dexps[t, p]
                    if e > 0:
                        v *= z[p] ** e
                dv += v
            acc += z[ncomp + l] * dv
        out[ncomp + c] = acc
    return out


@njit
def _rms(v):
    acc = 0.0
    for i in range(v.shape[0]):
        acc += v[i] * v[i]
    return np.sqrt(acc / v.shape[0])


@njit
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
    return min(100.0 * h0, min(h1, min(span, max_step)))


@njit
def rk45(rhs, args, y0, t0, t1, rtol, atol, max_step, first_step):
    d = y0.shape[0]
    f0 = rhs(args, y0)
    span = t1 - t0
    if first_step > 0.0:
        h = min(first_step, min(span, max_step))
    else:
        h = _initial_step(rhs, args, y0, f0, span, rtol, atol, max_step)

    cap = 512
    ts = np.empty(cap)
    ys = np.empty((cap, d))
    fs = np.empty((cap, d))
    ts[0] = t0
    for i in range(d):
        ys[0, i] = y0[i]
        fs[0, i] = f0[i]
    m = 1

    t = t0
    y = y0.copy()
    f = f0.copy()
    nacc = 0
    nrej = 0
    status = 0
    rejected = False

    while t < t1:
        h = min(h, min(max_step, t1 - t))
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
                ts2 = np.empty(cap)
                ys2 = np.empty((cap, d))
                fs2 = np.empty((cap, d))
                ts2[:m] = ts[:m]
                ys2[:m] = ys[:m]
                fs2[:m] = fs[:m]
                ts = ts2
                ys = ys2
                fs = fs2
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
