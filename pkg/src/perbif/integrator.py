"""Adaptive DOP853 integration of the planar flow and its variational equation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .model import PhasePoint, ProblemParams


class IntegrationError(RuntimeError):
    """Raised when a step-size underflow or a non-finite state stops the flow."""

    def __init__(self, message, t_reached):
        super().__init__(f"{message} (at t={t_reached!r})")
        self.t_reached = t_reached


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    dense_output: bool = False

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")

    def tightened(self, rel_tol=1e-13, abs_tol=None) -> "IntegratorConfig":
        return IntegratorConfig(rel_tol, abs_tol if abs_tol is not None else self.abs_tol * 1e-3,
                                self.max_step, self.dense_output)


class DenseOutput:
    """Piecewise 7th-order interpolant over the accepted steps."""

    def __init__(self, ts, ys, coeffs):
        self.ts = ts
        self.ys = ys
        self.coeffs = coeffs

    @property
    def t_min(self):
        return self.ts[0]

    @property
    def t_max(self):
        return self.ts[-1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if np.any(t < self.ts[0]) or np.any(t > self.ts[-1]):
            raise ValueError("dense output evaluated outside the integration span")
        idx = np.clip(np.searchsorted(self.ts, t, side="right") - 1, 0, len(self.ts) - 2)
        h = self.ts[idx + 1] - self.ts[idx]
        x = ((t - self.ts[idx]) / h)[:, None]
        F = self.coeffs[idx]
        y = np.zeros((len(t), self.ys.shape[1]))
        for i, k in enumerate(range(6, -1, -1)):
            y += F[:, k, :]
            y *= x if i % 2 == 0 else (1.0 - x)
        y += self.ys[idx]
        return y[0] if scalar else y


@dataclass
class Trajectory:
    """Sampled flow: ``states[i] = (u, v)`` at ``times[i]``.

    ``sensitivity[i]`` is the 2x2 derivative of the time-``times[i]`` flow map
    with respect to the initial point, when the variational system was solved.
    """

    times: np.ndarray
    states: np.ndarray
    sensitivity: Optional[np.ndarray] = None
    dense: Optional[DenseOutput] = None
    n_steps: int = 0
    nfev: int = 0
    step_times: np.ndarray = field(default=None, repr=False)

    @property
    def u(self):
        return self.states[:, 0]

    @property
    def v(self):
        return self.states[:, 1]

    def point(self, i) -> PhasePoint:
        return PhasePoint(float(self.states[i, 0]), float(self.states[i, 1]))

    def __call__(self, t):
        """Dense evaluation of (u, v) and, if present, the flattened sensitivity."""
        if self.dense is None:
            raise ValueError("trajectory was integrated without dense output")
        return self.dense(t)


_STATUS_TEXT = {
    _backend.STATUS_STEP_UNDERFLOW: "step size underflow (blow-up)",
    _backend.STATUS_NONFINITE: "non-finite state",
    _backend.STATUS_MAX_STEPS: "step budget exhausted",
}


def _run(p, y0, t_span, cfg, t_eval):
    t0, t1 = (float(s) for s in t_span)
    if not t1 > t0:
        raise ValueError("t_span must be a nonempty forward interval")
    te = np.asarray([] if t_eval is None else t_eval, dtype=float)
    if te.size and (np.any(np.diff(te) < 0) or te[0] < t0 or te[-1] > t1):
        raise ValueError("t_eval must be sorted and lie inside t_span")
    status, ts, ys, eval_ys, coeffs, nfev = _backend.dop853(
        p.q, p.mu, list(y0), t0, t1, cfg.rel_tol, cfg.abs_tol, cfg.max_step,
        te, cfg.dense_output)
    if status != _backend.STATUS_OK:
        raise IntegrationError(_STATUS_TEXT[status], float(ts[-1]))
    dense = DenseOutput(ts, ys, coeffs) if cfg.dense_output else None
    if t_eval is None:
        times, states = ts, ys
    else:
        times, states = te, eval_ys
    return times, states, dense, len(ts) - 1, nfev, ts


def integrate(p: ProblemParams, x0: PhasePoint, t_span: Sequence[float],
              cfg: IntegratorConfig = IntegratorConfig(), t_eval=None) -> Trajectory:
    """Integrate (u, v) over ``t_span``.

    Without ``t_eval`` the trajectory holds every accepted step; with it, the
    solver lands exactly on each requested time (no interpolation error).
    """
    times, states, dense, n_steps, nfev, ts = _run(p, (x0.u, x0.v), t_span, cfg, t_eval)
    return Trajectory(times, states, None, dense, n_steps, nfev, ts)


def integrate_with_variational(p: ProblemParams, x0: PhasePoint, t_span: Sequence[float],
                               cfg: IntegratorConfig = IntegratorConfig(),
                               t_eval=None) -> Trajectory:
    """Integrate the flow jointly with ``Phi' = [[0, 1], [mu (1 - q |u|^(q-1)), 0]] Phi``."""
    y0 = (x0.u, x0.v, 1.0, 0.0, 0.0, 1.0)
    times, ys, dense, n_steps, nfev, ts = _run(p, y0, t_span, cfg, t_eval)
    return Trajectory(times, ys[:, :2].copy(), ys[:, 2:].reshape(-1, 2, 2).copy(),
                      dense, n_steps, nfev, ts)


def flow_end(p: ProblemParams, y0, duration: float, rel_tol: float, abs_tol: float,
             variational: bool = False) -> np.ndarray:
    """Final state after ``duration``; thin wrapper used inside Newton loops."""
    y = tuple(y0) + ((1.0, 0.0, 0.0, 1.0) if variational else ())
    status, y_end = _backend.advance(p.q, p.mu, list(y), 0.0, float(duration), rel_tol, abs_tol)
    if status != _backend.STATUS_OK:
        raise IntegrationError(_STATUS_TEXT.get(status, "integration failed"), math.nan)
    return y_end


def flow_cells(p: ProblemParams, starts, dts, rel_tol: float, abs_tol: float) -> np.ndarray:
    """Advance each row of ``starts`` (shape (m, 2)) by the matching ``dts[i]``."""
    status, ends = _backend.advance_cells(p.q, p.mu, starts, dts, rel_tol, abs_tol)
    if status != _backend.STATUS_OK:
        raise IntegrationError(_STATUS_TEXT.get(status, "integration failed"), math.nan)
    return ends
