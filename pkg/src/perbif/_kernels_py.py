"""Pure-Python DOP853 kernel for the planar power-law system.

Reference implementation of :func:`perbif._kernels.dop853`; the compiled
kernel performs the same floating-point operations in the same order, so the
two agree bit-for-bit on IEEE hardware without FMA contraction.

State layout: ``(u, v)`` or, with the variational flow attached,
``(u, v, Phi00, Phi01, Phi10, Phi11)`` where ``Phi`` is the 2x2 derivative of
the flow map with respect to the initial point, stored row-major.
"""
import math

import numpy as np

from ._tableau import A, B, C, D, E3, E5, N_STAGES

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_MAX_STEPS = 3

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXP = -1.0 / 8.0


def _rhs(q, mu, y, n):
    u = y[0]
    p = abs(u) ** (q - 1.0)
    out = [y[1], mu * (u - p * u)]
    if n == 6:
        jac = mu * (1.0 - q * p)
        out.append(y[4])
        out.append(y[5])
        out.append(jac * y[2])
        out.append(jac * y[3])
    return out


def _rms(x, n):
    acc = 0.0
    for i in range(n):
        acc += x[i] * x[i]
    return math.sqrt(acc / n)


def _initial_step(q, mu, y0, f0, n, t_span, rtol, atol, max_step):
    scale = [atol + rtol * abs(y0[i]) for i in range(n)]
    d0 = _rms([y0[i] / scale[i] for i in range(n)], n)
    d1 = _rms([f0[i] / scale[i] for i in range(n)], n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if h0 > t_span:
        h0 = t_span
    y1 = [y0[i] + h0 * f0[i] for i in range(n)]
    f1 = _rhs(q, mu, y1, n)
    d2 = _rms([(f1[i] - f0[i]) / scale[i] for i in range(n)], n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    h = min(100.0 * h0, h1)
    if h > max_step:
        h = max_step
    if h > t_span:
        h = t_span
    return h


def dop853(q, mu, y0, t0, t1, rtol, atol, max_step, t_eval, dense,
           max_steps=2_000_000):
    """Integrate from ``t0`` to ``t1 > t0``; land exactly on every ``t_eval``.

    Returns ``(status, ts, ys, eval_ys, dense_coeffs, nfev)``.  ``ts``/``ys``
    hold every accepted step point; ``dense_coeffs[i]`` holds the seven
    interpolant vectors on ``[ts[i], ts[i+1]]`` (empty unless ``dense``).
    ``eval_ys`` rows for ``t_eval`` entries never reached stay NaN.
    """
    n = len(y0)
    y = [float(c) for c in y0]
    t = float(t0)
    t1 = float(t1)
    t_eval = [float(s) for s in t_eval]
    n_eval = len(t_eval)

    ts = [t]
    ys = [list(y)]
    eval_ys = [[math.nan] * n for _ in range(n_eval)]
    dense_rows = []

    j_eval = 0
    while j_eval < n_eval and t_eval[j_eval] <= t:
        eval_ys[j_eval] = list(y)
        j_eval += 1

    f = _rhs(q, mu, y, n)
    nfev = 1
    h_ctrl = _initial_step(q, mu, y, f, n, t1 - t, rtol, atol, max_step)
    nfev += 1
    status = STATUS_OK
    n_steps = 0
    K = [None] * 16

    while t < t1:
        if n_steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        min_step = 10.0 * (math.nextafter(t, math.inf) - t)
        if h_ctrl > max_step:
            h_ctrl = max_step
        target = t_eval[j_eval] if j_eval < n_eval and t_eval[j_eval] < t1 else t1

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

            K[0] = f
            for s in range(1, N_STAGES):
                ys_ = [0.0] * n
                for i in range(n):
                    acc = 0.0
                    for jj, a in A[s]:
                        acc += a * K[jj][i]
                    ys_[i] = y[i] + h * acc
                K[s] = _rhs(q, mu, ys_, n)
            y_new = [0.0] * n
            for i in range(n):
                acc = 0.0
                for jj in range(N_STAGES):
                    acc += B[jj] * K[jj][i]
                y_new[i] = y[i] + h * acc
            f_new = _rhs(q, mu, y_new, n)
            K[N_STAGES] = f_new
            nfev += N_STAGES

            finite = True
            for i in range(n):
                if not math.isfinite(y_new[i]):
                    finite = False
            if not finite:
                status = STATUS_NONFINITE
                break

            err5 = 0.0
            err3 = 0.0
            for i in range(n):
                sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
                e5 = 0.0
                e3 = 0.0
                for jj in range(N_STAGES + 1):
                    e5 += E5[jj] * K[jj][i]
                    e3 += E3[jj] * K[jj][i]
                e5 = e5 / sc
                e3 = e3 / sc
                err5 += e5 * e5
                err3 += e3 * e3
            if err5 == 0.0 and err3 == 0.0:
                err = 0.0
            else:
                err = abs(h) * err5 / math.sqrt((err5 + 0.01 * err3) * n)

            if err < 1.0:
                if err == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = min(_MAX_FACTOR, _SAFETY * err ** _ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                h_next = h * factor
                if clipped and not rejected and h_next < h_ctrl:
                    h_next = h_ctrl
                break
            h_ctrl = h_ctrl * max(_MIN_FACTOR, _SAFETY * err ** _ERR_EXP)
            rejected = True

        if status != STATUS_OK:
            break

        if dense:
            for s in range(N_STAGES + 1, 16):
                ys_ = [0.0] * n
                for i in range(n):
                    acc = 0.0
                    for jj, a in A[s]:
                        acc += a * K[jj][i]
                    ys_[i] = y[i] + h * acc
                K[s] = _rhs(q, mu, ys_, n)
            nfev += 3
            F = [[0.0] * n for _ in range(7)]
            for i in range(n):
                dy = y_new[i] - y[i]
                F[0][i] = dy
                F[1][i] = h * f[i] - dy
                F[2][i] = 2.0 * dy - h * (f_new[i] + f[i])
                for r in range(4):
                    acc = 0.0
                    for jj, dcoef in D[r]:
                        acc += dcoef * K[jj][i]
                    F[3 + r][i] = h * acc
            dense_rows.append(F)

        t = t_new
        y = y_new
        f = f_new
        h_ctrl = h_next
        n_steps += 1
        ts.append(t)
        ys.append(list(y))
        while j_eval < n_eval and t_eval[j_eval] <= t:
            eval_ys[j_eval] = list(y)
            j_eval += 1

    dense_arr = (np.array(dense_rows, dtype=float) if dense_rows
                 else np.empty((0, 7, n)))
    return (status, np.array(ts), np.array(ys, dtype=float),
            np.array(eval_ys, dtype=float).reshape(n_eval, n), dense_arr, nfev)


def advance(q, mu, y0, t0, t1, rtol, atol, max_step=math.inf, max_steps=2_000_000):
    """End state only; returns ``(status, y_end)``."""
    if len(y0) not in (2, 6):
        raise ValueError("state must have 2 or 6 components")
    status, _, ys, _, _, _ = dop853(q, mu, y0, t0, t1, rtol, atol, max_step, (), False,
                                    max_steps)
    return status, ys[-1].copy()


def advance_cells(q, mu, starts, dts, rtol, atol, max_steps=2_000_000):
    """Advance each planar state ``starts[i]`` by ``dts[i]``; returns ``(status, ends)``."""
    starts = np.asarray(starts, dtype=float)
    dts = np.asarray(dts, dtype=float)
    ends = np.full((len(starts), 2), np.nan)
    for i in range(len(starts)):
        if dts[i] > 0.0:
            status, y = advance(q, mu, starts[i], 0.0, dts[i], rtol, atol, math.inf, max_steps)
            if status != STATUS_OK:
                return status, ends
            ends[i] = y
        else:
            ends[i] = starts[i]
    return STATUS_OK, ends
