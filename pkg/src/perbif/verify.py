"""Independent checks on a candidate periodic solution.

The integral identity and Wirtinger checks work on the 2 pi-rescaled,
normalised profile ``w = mu^(1/(q-1)) u`` which solves ``w'' = mu w - w^q``.
Second derivatives are always substituted from the equation; first
derivatives come from the stored samples.  Quadrature is the trapezoidal
rule on the periodic grid.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .integrator import flow_cells
from .model import ProblemParams, center_energy, energy_array

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Thresholds:
    ode_residual: float = 1e-8
    energy_drift: float = 1e-10
    identity: float = 1e-6
    wirtinger: float = -1e-10
    zero_slope: float = 1e-8

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclass
class VerificationReport:
    """Check values and pass flags.

    ``identity_2_9_relative_residual`` and ``zero_simplicity_min`` are None
    when not applicable (constant solution).
    """

    ode_residual_max: float
    energy_drift: float
    identity_2_9_relative_residual: Optional[float]
    wirtinger_margin: float
    zero_simplicity_min: Optional[float]
    zero_count: int
    expected_zero_count: int
    passes: dict = field(default_factory=dict)
    thresholds: Thresholds = field(default_factory=Thresholds)

    @property
    def passed(self) -> bool:
        return all(self.passes.values())


@dataclass(frozen=True)
class NormalizedProfile:
    t: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    ddw: np.ndarray
    mu: float
    q: float
    residual: float


def _is_constant(sol):
    return bool(np.ptp(sol.u) == 0.0 and np.all(sol.du == 0.0))


def rescale_to_2pi(sol):
    """Time-rescaled copy with period 2 pi and ``mu_bar = T^2 mu / (4 pi^2)``."""
    p = sol.params
    if p.T == TWO_PI:
        return sol
    c = p.T / TWO_PI
    p2 = ProblemParams(p.q, p.mu * c * c, TWO_PI)
    zeros = sol.zeros
    if zeros is not None:
        zeros = dataclasses.replace(zeros, times=zeros.times / c, slopes=zeros.slopes * c)
    return dataclasses.replace(sol, params=p2, t=sol.t / c, du=sol.du * c,
                               E=sol.E * c * c, zeros=zeros)


def normalize_form(sol) -> NormalizedProfile:
    """w = mu^(1/(q-1)) u, with w'' substituted from the original equation."""
    p = sol.params
    scale = math.exp(math.log(p.mu) / (p.q - 1.0))
    w = scale * sol.u
    dw = scale * sol.du
    u = sol.u
    ddw = scale * p.mu * (u - np.abs(u) ** (p.q - 1.0) * u)
    resid = float(np.max(np.abs(ddw - p.mu * w + np.abs(w) ** (p.q - 1.0) * w)))
    return NormalizedProfile(sol.t, w, dw, ddw, p.mu, p.q, resid)


def _trapezoid_periodic(f, dt):
    return float(np.sum(f) * dt)


def _sqrt_derivatives(w, dw, ddw):
    """f = sqrt(w): returns (f', f'')."""
    root = np.sqrt(w)
    fp = 0.5 * dw / root
    fpp = 0.5 * ddw / root - 0.25 * dw * dw / (w * root)
    return fp, fpp


def identity_2_9_residual(sol) -> Optional[float]:
    """Relative defect of ``mu (q-1) I1 = (2q/3 - 1/4) I2 + 4 I3``.

    I1 = int w'^2/w, I2 = int w'^4/w^3, I3 = int ((sqrt w)'')^2 over one
    2 pi period.  Returns None for a constant profile (all integrals vanish).
    """
    if _is_constant(sol):
        return None
    nf = normalize_form(rescale_to_2pi(sol))
    w, dw, q = nf.w, nf.dw, nf.q
    ddw = nf.mu * w - w ** q
    dt = TWO_PI / len(w)
    I1 = _trapezoid_periodic(dw * dw / w, dt)
    I2 = _trapezoid_periodic(dw ** 4 / w ** 3, dt)
    _, fpp = _sqrt_derivatives(w, dw, ddw)
    I3 = _trapezoid_periodic(fpp * fpp, dt)
    lhs = nf.mu * (q - 1.0) * I1
    rhs = (2.0 * q / 3.0 - 0.25) * I2 + 4.0 * I3
    return abs(lhs - rhs) / max(lhs, rhs)


def wirtinger_margin(fp, fpp, dt) -> float:
    """int f''^2 - int f'^2 on a uniform periodic grid of spacing ``dt``."""
    fp = np.asarray(fp, dtype=float)
    fpp = np.asarray(fpp, dtype=float)
    return _trapezoid_periodic(fpp * fpp, dt) - _trapezoid_periodic(fp * fp, dt)


def wirtinger_check(sol) -> float:
    if _is_constant(sol):
        return 0.0
    nf = normalize_form(rescale_to_2pi(sol))
    ddw = nf.mu * nf.w - nf.w ** nf.q
    fp, fpp = _sqrt_derivatives(nf.w, nf.dw, ddw)
    return wirtinger_margin(fp, fpp, TWO_PI / len(nf.w))


def ode_residual(sol, rel_tol: float = 1e-14) -> float:
    """Max cell defect of u'' against a tight re-integration.

    Each sample (u_i, u'_i) is advanced by one grid cell; the mismatch of u'
    at the next sample, divided by the cell width, is the gap between the
    stored and the true cell-average of u''.
    """
    p = sol.params
    u = np.asarray(sol.u, dtype=float)
    du = np.asarray(sol.du, dtype=float)
    if _is_constant(sol) and u[0] == 1.0:
        return 0.0
    N = len(u)
    dt = p.T / N
    starts = np.column_stack([u, du])
    abs_tol = rel_tol * max(float(u.min()), 1e-300) * 1e-2
    ends = flow_cells(p, starts, np.full(N, dt), rel_tol, abs_tol)
    return float(np.max(np.abs(ends[:, 1] - np.roll(du, -1))) / dt)


def ode_residual_analytic(p: ProblemParams, u, upp) -> float:
    """max |u'' - mu (u - |u|^(q-1) u)| for analytically known samples."""
    u = np.asarray(u, dtype=float)
    return float(np.max(np.abs(np.asarray(upp) - p.mu * (u - np.abs(u) ** (p.q - 1.0) * u))))


def energy_drift(sol) -> float:
    """max |H(u_i, u'_i) - E| relative to |E_center|."""
    p = sol.params
    H = energy_array(p, sol.u, sol.du)
    return float(np.max(np.abs(H - sol.E)) / abs(center_energy(p)))


def verify(sol, thresholds: Thresholds = Thresholds()) -> VerificationReport:
    """Run every check on ``sol`` without trusting its stored diagnostics."""
    from .continuation import count_zeros

    p = sol.params
    ode = ode_residual(sol)
    drift = energy_drift(sol)
    ident = identity_2_9_residual(sol)
    wirt = wirtinger_check(sol)
    if _is_constant(sol):
        n_zeros, slope = 0, None
    else:
        zeros = count_zeros(p, sol.t, sol.u, sol.du)
        n_zeros, slope = zeros.count, zeros.min_slope
    expected = 2 * sol.k
    passes = {
        "ode_residual": ode < thresholds.ode_residual,
        "energy_drift": drift < thresholds.energy_drift,
        "identity_2_9": ident is None or ident < thresholds.identity,
        "wirtinger": wirt >= thresholds.wirtinger,
        "zero_simplicity": slope is None or slope > thresholds.zero_slope,
        "zero_count": n_zeros == expected,
        "positivity": bool(np.all(np.asarray(sol.u) > 0.0)),
    }
    return VerificationReport(ode, drift, ident, wirt, slope, n_zeros, expected,
                              passes, thresholds)
