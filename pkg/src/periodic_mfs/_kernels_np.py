"""Pure-numpy kernels for the theta series and the charge/point pair sums.

Conventions shared with :mod:`._kernels_nb`:

``tau``
    lattice ratio omega2/omega1 (complex, Im > 0).
``coeffs``
    ``(-1)**k * exp(i*pi*tau*(k + 1/2)**2)`` for ``k < max_terms``.
``tol``
    relative truncation tolerance for the a-priori term bound.
``inv_w1``
    ``1/omega1``; pair kernels evaluate at ``(z_i - zeta_j) * inv_w1``.

Each kernel returns the number of series evaluations that failed to meet the
truncation bound within ``len(coeffs)`` terms as its last element.
"""
import numpy as np

# Pair kernels build (chunk x N) intermediates; keep them around 2**20 entries.
_CHUNK_ENTRIES = 1 << 20


def reduce_many(v, tau):
    b = v.imag / tau.imag
    a = v.real - b * tau.real
    n = np.floor(b + 0.5)
    m = np.floor(a + 0.5)
    vr = (v.real - m - n * tau.real) + 1j * (v.imag - n * tau.imag)
    return vr, m.astype(np.int64), n.astype(np.int64)


def _series(vr, coeffs, tol, need_value=True, need_deriv=True):
    x = np.pi * vr
    s1 = np.sin(x)
    c1 = np.cos(x)
    two_cos2 = 2.0 * (1.0 - 2.0 * s1 * s1)
    s_prev, s_cur = -s1, s1
    c_prev, c_cur = c1, c1
    grow = np.exp(np.pi * np.abs(vr.imag))
    grow2 = grow * grow
    env = grow.copy()
    zero_arg = vr == 0
    S = np.zeros_like(vr)
    D = np.zeros_like(vr)
    active = np.ones(vr.shape, dtype=bool)
    for k, ck in enumerate(coeffs):
        if k > 0:
            bound = abs(ck) * env
            done = np.ones(vr.shape, dtype=bool)
            if need_value:
                done &= zero_arg | (bound < tol * np.abs(S))
            if need_deriv:
                done &= bound * (2 * k + 1) * np.pi < tol * np.abs(D)
            active &= ~done
            if not active.any():
                break
        S = np.where(active, S + ck * s_cur, S)
        D = np.where(active, D + ck * (2 * k + 1) * c_cur, D)
        s_prev, s_cur = s_cur, two_cos2 * s_cur - s_prev
        c_prev, c_cur = c_cur, two_cos2 * c_cur - c_prev
        env = env * grow2
    # anything still active ran out of terms before the bound triggered
    return 2.0 * S, 2.0 * np.pi * D, active


def theta_reduced(v_red, coeffs, tol):
    th, dth, bad = _series(v_red, coeffs, tol)
    return th, dth, int(bad.sum())


def _log_abs_flat(v, tau, coeffs, tol):
    vr, _, n = reduce_many(v, tau)
    th, _, bad = _series(vr, coeffs, tol, need_deriv=False)
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(th)) + n * n * np.pi * tau.imag + 2.0 * np.pi * n * vr.imag
    return out, int(bad.sum())


def _log_deriv_flat(v, tau, coeffs, tol):
    vr, _, n = reduce_many(v, tau)
    th, dth, bad = _series(vr, coeffs, tol)
    zero = th == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = dth / np.where(zero, 1.0, th) - 2j * np.pi * n
    out[zero] = complex(np.inf, np.nan)
    return out, int(bad.sum())


def log_abs(v, tau, coeffs, tol):
    return _log_abs_flat(v, tau, coeffs, tol)


def log_deriv(v, tau, coeffs, tol):
    return _log_deriv_flat(v, tau, coeffs, tol)


def _chunks(n_points, n_charges):
    step = max(1, _CHUNK_ENTRIES // max(1, n_charges))
    for start in range(0, n_points, step):
        yield slice(start, min(start + step, n_points))


def pair_log_deriv_sums(z, zeta, inv_w1, tau, coeffs, tol):
    out = np.zeros(zeta.shape[0], dtype=np.complex128)
    bad = 0
    for sl in _chunks(z.shape[0], zeta.shape[0]):
        v = ((z[sl, None] - zeta[None, :]) * inv_w1).ravel()
        g, b = _log_deriv_flat(v, tau, coeffs, tol)
        out += g.reshape(-1, zeta.shape[0]).sum(axis=0)
        bad += b
    return out, bad


def pair_log_deriv_weighted(z, zeta, weights, inv_w1, tau, coeffs, tol):
    out = np.zeros(z.shape[0], dtype=np.complex128)
    bad = 0
    for sl in _chunks(z.shape[0], zeta.shape[0]):
        v = ((z[sl, None] - zeta[None, :]) * inv_w1).ravel()
        g, b = _log_deriv_flat(v, tau, coeffs, tol)
        with np.errstate(invalid="ignore"):  # poles propagate as non-finite values
            out[sl] = g.reshape(-1, zeta.shape[0]) @ weights.astype(np.complex128)
        bad += b
    return out, bad


def pair_log_abs_weighted(z, zeta, weights, inv_w1, tau, coeffs, tol):
    out = np.zeros(z.shape[0])
    bad = 0
    for sl in _chunks(z.shape[0], zeta.shape[0]):
        v = ((z[sl, None] - zeta[None, :]) * inv_w1).ravel()
        g, b = _log_abs_flat(v, tau, coeffs, tol)
        out[sl] = g.reshape(-1, zeta.shape[0]) @ weights
        bad += b
    return out, bad


def pair_log_abs_matrix(z, zeta, inv_w1, tau, coeffs, tol):
    v = ((z[:, None] - zeta[None, :]) * inv_w1).ravel()
    g, bad = _log_abs_flat(v, tau, coeffs, tol)
    return g.reshape(z.shape[0], zeta.shape[0]), bad
