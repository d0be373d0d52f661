"""Numba kernels for the theta series and the charge/point pair sums.

Signatures and results match :mod:`._kernels_np` exactly; see that module for
the meaning of each argument. Every kernel returns, as its last element, the
number of series evaluations that hit ``max_terms`` without meeting the
truncation bound.
"""
import math

import numpy as np
from numba import njit

_PI = math.pi


@njit(cache=True, error_model="numpy")
def _reduce(v, tau_re, tau_im):
    b = v.imag / tau_im
    a = v.real - b * tau_re
    n = math.floor(b + 0.5)
    m = math.floor(a + 0.5)
    vr = complex(v.real - m - n * tau_re, v.imag - n * tau_im)
    return vr, m, n


@njit(cache=True, error_model="numpy")
def _sin_cos(x):
    # complex sin/cos from real parts; sinh via math.sinh keeps small |Im x| accurate
    xr = x.real
    y = x.imag
    sr = math.sin(xr)
    cr = math.cos(xr)
    e = math.exp(abs(y))
    ch = 0.5 * (e + 1.0 / e)
    if abs(y) < 0.5:
        sh = math.sinh(y)
    else:
        sh = math.copysign(0.5 * (e - 1.0 / e), y)
    return complex(sr * ch, cr * sh), complex(cr * ch, -sr * sh), e


@njit(cache=True, error_model="numpy")
def _series(vr, coeffs, tol, need_value, need_deriv):
    # theta1(vr) = 2 sum c_k sin((2k+1) pi vr), c_k = (-1)^k q^{(k+1/2)^2}
    s1, c1, grow = _sin_cos(_PI * vr)
    two_cos2 = 2.0 * (1.0 - 2.0 * s1 * s1)
    s_prev = -s1
    s_cur = s1
    c_prev = c1
    c_cur = c1
    grow2 = grow * grow
    env = grow
    zero_arg = vr == 0
    tol2 = tol * tol
    S = 0j
    D = 0j
    ok = False
    for k in range(coeffs.shape[0]):
        ck = coeffs[k]
        if k > 0:
            b2 = (ck.real * ck.real + ck.imag * ck.imag) * env * env
            done_s = (not need_value) or zero_arg or b2 < tol2 * (S.real * S.real + S.imag * S.imag)
            w = (2 * k + 1) * _PI
            done_d = (not need_deriv) or b2 * w * w < tol2 * (D.real * D.real + D.imag * D.imag)
            if done_s and done_d:
                ok = True
                break
        S += ck * s_cur
        D += ck * (2 * k + 1) * c_cur
        s_next = two_cos2 * s_cur - s_prev
        s_prev = s_cur
        s_cur = s_next
        c_next = two_cos2 * c_cur - c_prev
        c_prev = c_cur
        c_cur = c_next
        env *= grow2
    return 2.0 * S, 2.0 * _PI * D, ok


@njit(cache=True, error_model="numpy")
def _log_abs_one(v, tau_re, tau_im, coeffs, tol):
    vr, m, n = _reduce(v, tau_re, tau_im)
    th, _, ok = _series(vr, coeffs, tol, True, False)
    a = abs(th)
    if a == 0.0:
        return -np.inf, ok
    return math.log(a) + n * n * _PI * tau_im + 2.0 * _PI * n * vr.imag, ok


@njit(cache=True, error_model="numpy")
def _log_deriv_one(v, tau_re, tau_im, coeffs, tol):
    vr, m, n = _reduce(v, tau_re, tau_im)
    th, dth, ok = _series(vr, coeffs, tol, True, True)
    if th == 0:
        return complex(np.inf, np.nan), ok
    return dth / th - 2j * _PI * n, ok


@njit(cache=True, error_model="numpy")
def reduce_many(v, tau):
    out = np.empty(v.shape[0], dtype=np.complex128)
    m = np.empty(v.shape[0], dtype=np.int64)
    n = np.empty(v.shape[0], dtype=np.int64)
    for i in range(v.shape[0]):
        out[i], mi, ni = _reduce(v[i], tau.real, tau.imag)
        m[i] = int(mi)
        n[i] = int(ni)
    return out, m, n


@njit(cache=True, error_model="numpy")
def theta_reduced(v_red, coeffs, tol):
    th = np.empty(v_red.shape[0], dtype=np.complex128)
    dth = np.empty(v_red.shape[0], dtype=np.complex128)
    bad = 0
    for i in range(v_red.shape[0]):
        th[i], dth[i], ok = _series(v_red[i], coeffs, tol, True, True)
        if not ok:
            bad += 1
    return th, dth, bad


@njit(cache=True, error_model="numpy")
def log_abs(v, tau, coeffs, tol):
    out = np.empty(v.shape[0])
    bad = 0
    for i in range(v.shape[0]):
        out[i], ok = _log_abs_one(v[i], tau.real, tau.imag, coeffs, tol)
        if not ok:
            bad += 1
    return out, bad


@njit(cache=True, error_model="numpy")
def log_deriv(v, tau, coeffs, tol):
    out = np.empty(v.shape[0], dtype=np.complex128)
    bad = 0
    for i in range(v.shape[0]):
        out[i], ok = _log_deriv_one(v[i], tau.real, tau.imag, coeffs, tol)
        if not ok:
            bad += 1
    return out, bad


@njit(cache=True, error_model="numpy")
def pair_log_deriv_sums(z, zeta, inv_w1, tau, coeffs, tol):
    """Column sums over z of theta1'/theta1((z - zeta_j) * inv_w1)."""
    out = np.zeros(zeta.shape[0], dtype=np.complex128)
    bad = 0
    for i in range(z.shape[0]):
        for j in range(zeta.shape[0]):
            g, ok = _log_deriv_one((z[i] - zeta[j]) * inv_w1, tau.real, tau.imag, coeffs, tol)
            out[j] += g
            if not ok:
                bad += 1
    return out, bad


@njit(cache=True, error_model="numpy")
def pair_log_deriv_weighted(z, zeta, weights, inv_w1, tau, coeffs, tol):
    out = np.zeros(z.shape[0], dtype=np.complex128)
    bad = 0
    for i in range(z.shape[0]):
        acc = 0j
        for j in range(zeta.shape[0]):
            g, ok = _log_deriv_one((z[i] - zeta[j]) * inv_w1, tau.real, tau.imag, coeffs, tol)
            acc += weights[j] * g
            if not ok:
                bad += 1
        out[i] = acc
    return out, bad


@njit(cache=True, error_model="numpy")
def pair_log_abs_weighted(z, zeta, weights, inv_w1, tau, coeffs, tol):
    out = np.zeros(z.shape[0])
    bad = 0
    for i in range(z.shape[0]):
        acc = 0.0
        for j in range(zeta.shape[0]):
            g, ok = _log_abs_one((z[i] - zeta[j]) * inv_w1, tau.real, tau.imag, coeffs, tol)
            acc += weights[j] * g
            if not ok:
                bad += 1
        out[i] = acc
    return out, bad


@njit(cache=True, error_model="numpy")
def pair_log_abs_matrix(z, zeta, inv_w1, tau, coeffs, tol):
    out = np.empty((z.shape[0], zeta.shape[0]))
    bad = 0
    for i in range(z.shape[0]):
        for j in range(zeta.shape[0]):
            out[i, j], ok = _log_abs_one((z[i] - zeta[j]) * inv_w1, tau.real, tau.imag, coeffs, tol)
            if not ok:
                bad += 1
    return out, bad
