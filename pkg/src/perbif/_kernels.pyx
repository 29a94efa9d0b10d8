# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled DOP853 kernel for the planar power-law system.

Same contract and the same operation order as :mod:`perbif._kernels_py`.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt, nextafter, isfinite, INFINITY, NAN

from . import _tableau as _tab

cnp.import_array()

DEF NS = 12
DEF NX = 16
DEF MAXDIM = 6

cdef double _C[NX]
cdef int _A_nnz[NX]
cdef int _A_idx[NX][NX]
cdef double _A_val[NX][NX]
cdef double _B[NS]
cdef double _E3[NS + 1]
cdef double _E5[NS + 1]
cdef int _D_nnz[4]
cdef int _D_idx[4][NX]
cdef double _D_val[4][NX]


cdef void _load_tableau():
    cdef int i, k
    for i in range(NX):
        _C[i] = _tab.C[i]
        row = _tab.A[i]
        _A_nnz[i] = len(row)
        for k in range(len(row)):
            _A_idx[i][k] = row[k][0]
            _A_val[i][k] = row[k][1]
    for i in range(NS):
        _B[i] = _tab.B[i]
    for i in range(NS + 1):
        _E3[i] = _tab.E3[i]
        _E5[i] = _tab.E5[i]
    for i in range(4):
        row = _tab.D[i]
        _D_nnz[i] = len(row)
        for k in range(len(row)):
            _D_idx[i][k] = row[k][0]
            _D_val[i][k] = row[k][1]


_load_tableau()

DEF C_OK = 0
DEF C_UNDERFLOW = 1
DEF C_NONFINITE = 2
DEF C_MAX_STEPS = 3
STATUS_OK = C_OK
STATUS_STEP_UNDERFLOW = C_UNDERFLOW
STATUS_NONFINITE = C_NONFINITE
STATUS_MAX_STEPS = C_MAX_STEPS


cdef inline void _rhs(double q, double mu, const double* y, double* out, int n) noexcept nogil:
    cdef double u = y[0]
    cdef double p = pow(fabs(u), q - 1.0)
    cdef double jac
    out[0] = y[1]
    out[1] = mu * (u - p * u)
    if n == 6:
        jac = mu * (1.0 - q * p)
        out[2] = y[4]
        out[3] = y[5]
        out[4] = jac * y[2]
        out[5] = jac * y[3]


cdef inline double _rms(const double* x, int n) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n):
        acc += x[i] * x[i]
    return sqrt(acc / n)


cdef double _initial_step(double q, double mu, const double* y0, const double* f0, int n,
                          double t_span, double rtol, double atol, double max_step) noexcept nogil:
    cdef double scale[MAXDIM]
    cdef double tmp[MAXDIM]
    cdef double y1[MAXDIM]
    cdef double f1[MAXDIM]
    cdef double d0, d1, d2, h0, h1, h
    cdef int i
    for i in range(n):
        scale[i] = atol + rtol * fabs(y0[i])
    for i in range(n):
        tmp[i] = y0[i] / scale[i]
    d0 = _rms(tmp, n)
    for i in range(n):
        tmp[i] = f0[i] / scale[i]
    d1 = _rms(tmp, n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if h0 > t_span:
        h0 = t_span
    for i in range(n):
        y1[i] = y0[i] + h0 * f0[i]
    _rhs(q, mu, y1, f1, n)
    for i in range(n):
        tmp[i] = (f1[i] - f0[i]) / scale[i]
    d2 = _rms(tmp, n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = h0 * 1e-3
        if h1 < 1e-6:
            h1 = 1e-6
    else:
        h1 = pow(0.01 / (d1 if d1 > d2 else d2), 1.0 / 8.0)
    h = 100.0 * h0
    if h1 < h:
        h = h1
    if h > max_step:
        h = max_step
    if h > t_span:
        h = t_span
    return h


cdef int _attempt(double q, double mu, int n, const double* y, const double* f, double h,
                  double atol, double rtol, double K[NX][MAXDIM], double* y_new,
                  double* f_new, double* err_out) noexcept nogil:
    """One DOP853 step attempt; returns 1 if the proposed state is non-finite."""
    cdef double y_stage[MAXDIM]
    cdef int i, s, kk, jj
    cdef double acc, e5, e3, err5, err3, sc, a_, b_
    for i in range(n):
        K[0][i] = f[i]
    for s in range(1, NS):
        for i in range(n):
            acc = 0.0
            for kk in range(_A_nnz[s]):
                acc += _A_val[s][kk] * K[_A_idx[s][kk]][i]
            y_stage[i] = y[i] + h * acc
        _rhs(q, mu, y_stage, K[s], n)
    for i in range(n):
        acc = 0.0
        for jj in range(NS):
            acc += _B[jj] * K[jj][i]
        y_new[i] = y[i] + h * acc
    _rhs(q, mu, y_new, f_new, n)
    for i in range(n):
        K[NS][i] = f_new[i]
    for i in range(n):
        if not isfinite(y_new[i]):
            return 1
    err5 = 0.0
    err3 = 0.0
    for i in range(n):
        a_ = fabs(y[i])
        b_ = fabs(y_new[i])
        sc = atol + rtol * (a_ if a_ >= b_ else b_)
        e5 = 0.0
        e3 = 0.0
        for jj in range(NS + 1):
            e5 += _E5[jj] * K[jj][i]
            e3 += _E3[jj] * K[jj][i]
        e5 = e5 / sc
        e3 = e3 / sc
        err5 += e5 * e5
        err3 += e3 * e3
    if err5 == 0.0 and err3 == 0.0:
        err_out[0] = 0.0
    else:
        err_out[0] = fabs(h) * err5 / sqrt((err5 + 0.01 * err3) * n)
    return 0


cdef inline double _accept_factor(double err, bint rejected) noexcept nogil:
    cdef double factor
    if err == 0.0:
        factor = 10.0
    else:
        factor = 0.9 * pow(err, -1.0 / 8.0)
        if factor > 10.0:
            factor = 10.0
    if rejected and factor > 1.0:
        factor = 1.0
    return factor


cdef inline double _reject_factor(double err) noexcept nogil:
    cdef double factor = 0.9 * pow(err, -1.0 / 8.0)
    if factor < 0.2:
        factor = 0.2
    return factor


cdef int _advance(double q, double mu, int n, double* y, double t, double t1,
                  double rtol, double atol, double max_step, long max_steps) noexcept nogil:
    """Integrate ``y`` in place from t to t1; same step sequence as ``dop853``."""
    cdef double f[MAXDIM]
    cdef double f_new[MAXDIM]
    cdef double y_new[MAXDIM]
    cdef double K[NX][MAXDIM]
    cdef double h, h_ctrl, h_next = 0.0, t_new, min_step, err
    cdef bint rejected, clipped
    cdef long n_steps = 0
    cdef int i
    _rhs(q, mu, y, f, n)
    h_ctrl = _initial_step(q, mu, y, f, n, t1 - t, rtol, atol, max_step)
    while t < t1:
        if n_steps >= max_steps:
            return C_MAX_STEPS
        min_step = 10.0 * (nextafter(t, INFINITY) - t)
        if h_ctrl > max_step:
            h_ctrl = max_step
        rejected = False
        while True:
            if h_ctrl < min_step:
                return C_UNDERFLOW
            h = h_ctrl
            clipped = False
            if t + h >= t1 or t1 - (t + h) < min_step:
                h = t1 - t
                t_new = t1
                clipped = True
            else:
                t_new = t + h
            if _attempt(q, mu, n, y, f, h, atol, rtol, K, y_new, f_new, &err):
                return C_NONFINITE
            if err < 1.0:
                h_next = h * _accept_factor(err, rejected)
                if clipped and not rejected and h_next < h_ctrl:
                    h_next = h_ctrl
                break
            h_ctrl = h_ctrl * _reject_factor(err)
            rejected = True
        t = t_new
        for i in range(n):
            y[i] = y_new[i]
            f[i] = f_new[i]
        h_ctrl = h_next
        n_steps += 1
    return C_OK


def advance(double q, double mu, y0, double t0, double t1, double rtol, double atol,
            double max_step=INFINITY, long max_steps=2_000_000):
    """End state only; returns ``(status, y_end)``."""
    cdef int n = len(y0)
    cdef double y[MAXDIM]
    cdef int i, status
    if n != 2 and n != 6:
        raise ValueError("state must have 2 or 6 components")
    for i in range(n):
        y[i] = float(y0[i])
    with nogil:
        status = _advance(q, mu, n, y, t0, t1, rtol, atol, max_step, max_steps)
    return status, np.array([y[i] for i in range(n)])


def advance_cells(double q, double mu, starts, dts, double rtol, double atol,
                  long max_steps=2_000_000):
    """Advance each planar state ``starts[i]`` by ``dts[i]``; returns ``(status, ends)``.

    Status is the first non-OK status met (rows after a failure are NaN).
    """
    cdef double[:, :] st = np.ascontiguousarray(starts, dtype=float)
    cdef double[:] dt = np.ascontiguousarray(dts, dtype=float)
    cdef Py_ssize_t m = st.shape[0], i
    ends = np.full((m, 2), NAN)
    cdef double[:, :] ev = ends
    cdef double y[2]
    cdef int status = C_OK
    with nogil:
        for i in range(m):
            y[0] = st[i, 0]
            y[1] = st[i, 1]
            if dt[i] > 0.0:
                status = _advance(q, mu, 2, y, 0.0, dt[i], rtol, atol, INFINITY, max_steps)
                if status != C_OK:
                    break
            ev[i, 0] = y[0]
            ev[i, 1] = y[1]
    return status, ends


def dop853(double q, double mu, y0, double t0, double t1, double rtol, double atol,
           double max_step, t_eval, bint dense, long max_steps=2_000_000):
    """Integrate from ``t0`` to ``t1 > t0``; land exactly on every ``t_eval``.

    Returns ``(status, ts, ys, eval_ys, dense_coeffs, nfev)``; see the
    pure-Python twin for the layout.
    """
    cdef int n = len(y0)
    if n != 2 and n != 6:
        raise ValueError("state must have 2 or 6 components")
    cdef cnp.ndarray[double, ndim=1] te = np.ascontiguousarray(t_eval, dtype=float).reshape(-1)
    cdef Py_ssize_t n_eval = te.shape[0]
    cdef double[:] te_v = te

    cdef double y[MAXDIM]
    cdef double y_new[MAXDIM]
    cdef double y_stage[MAXDIM]
    cdef double f[MAXDIM]
    cdef double f_new[MAXDIM]
    cdef double K[NX][MAXDIM]
    cdef double F[7][MAXDIM]
    cdef int i, s, kk, r
    cdef double acc, err, dy
    cdef double t = t0, t_new = t0, h = 0.0, h_ctrl, h_next = 0.0, min_step, target
    cdef bint rejected, clipped
    cdef int status = STATUS_OK
    cdef long n_steps = 0, nfev = 0
    cdef Py_ssize_t j_eval = 0, cap, m

    for i in range(n):
        y[i] = float(y0[i])

    cap = 1024
    ts_arr = np.empty(cap)
    ys_arr = np.empty((cap, n))
    dn_arr = np.empty((cap if dense else 0, 7, n))
    cdef double[:] ts_v = ts_arr
    cdef double[:, :] ys_v = ys_arr
    cdef double[:, :, :] dn_v = dn_arr
    eval_arr = np.full((n_eval, n), NAN)
    cdef double[:, :] ev_v = eval_arr

    m = 0
    ts_v[0] = t
    for i in range(n):
        ys_v[0, i] = y[i]
    m = 1

    while j_eval < n_eval and te_v[j_eval] <= t:
        for i in range(n):
            ev_v[j_eval, i] = y[i]
        j_eval += 1

    _rhs(q, mu, y, f, n)
    nfev = 1
    h_ctrl = _initial_step(q, mu, y, f, n, t1 - t, rtol, atol, max_step)
    nfev += 1

    while t < t1:
        if n_steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        min_step = 10.0 * (nextafter(t, INFINITY) - t)
        if h_ctrl > max_step:
            h_ctrl = max_step
        if j_eval < n_eval and te_v[j_eval] < t1:
            target = te_v[j_eval]
        else:
            target = t1

        rejected = False
        while True:
            if h_ctrl < min_step:
                status = STATUS_STEP_UNDERFLOW
                break
            h = h_ctrl
            clipped = False
            if t + h >= target or target - (t + h) < min_step:
                h = target - t
                t_new = target
                clipped = True
            else:
                t_new = t + h

            if _attempt(q, mu, n, y, f, h, atol, rtol, K, y_new, f_new, &err):
                status = STATUS_NONFINITE
                break
            nfev += NS

            if err < 1.0:
                h_next = h * _accept_factor(err, rejected)
                if clipped and not rejected and h_next < h_ctrl:
                    h_next = h_ctrl
                break
            h_ctrl = h_ctrl * _reject_factor(err)
            rejected = True

        if status != STATUS_OK:
            break

        if m >= cap:
            cap *= 2
            ts_arr = np.resize(ts_arr, cap)
            ys_arr = np.resize(ys_arr, (cap, n))
            ts_v = ts_arr
            ys_v = ys_arr
            if dense:
                dn_arr = np.resize(dn_arr, (cap, 7, n))
                dn_v = dn_arr

        if dense:
            for s in range(NS + 1, NX):
                for i in range(n):
                    acc = 0.0
                    for kk in range(_A_nnz[s]):
                        acc += _A_val[s][kk] * K[_A_idx[s][kk]][i]
                    y_stage[i] = y[i] + h * acc
                _rhs(q, mu, y_stage, K[s], n)
            nfev += 3
            for i in range(n):
                dy = y_new[i] - y[i]
                dn_v[m - 1, 0, i] = dy
                dn_v[m - 1, 1, i] = h * f[i] - dy
                dn_v[m - 1, 2, i] = 2.0 * dy - h * (f_new[i] + f[i])
                for r in range(4):
                    acc = 0.0
                    for kk in range(_D_nnz[r]):
                        acc += _D_val[r][kk] * K[_D_idx[r][kk]][i]
                    dn_v[m - 1, 3 + r, i] = h * acc

        t = t_new
        for i in range(n):
            y[i] = y_new[i]
            f[i] = f_new[i]
        h_ctrl = h_next
        n_steps += 1
        ts_v[m] = t
        for i in range(n):
            ys_v[m, i] = y[i]
        m += 1
        while j_eval < n_eval and te_v[j_eval] <= t:
            for i in range(n):
                ev_v[j_eval, i] = y[i]
            j_eval += 1

    dense_out = np.array(dn_arr[:m - 1]) if dense else np.empty((0, 7, n))
    return (status, np.array(ts_arr[:m]), np.array(ys_arr[:m]), eval_arr, dense_out, nfev)
