"""The ODE family u'' = mu (u - |u|^(q-1) u), its first integral and phase portrait.

Everything here is closed-form.  The energy

    H(u, v) = v**2 / 2 + V(u),   V(u) = mu (u**(q+1) / (q+1) - u**2 / 2)

is conserved; the center (1, 0) sits at ``E_center = mu (1/(q+1) - 1/2)`` and
the homoclinic loop through the saddle (0, 0) at energy 0.  Closed orbits
around the center live strictly inside the region bounded by that loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProblemParams:
    """Exponent ``q > 1``, bifurcation parameter ``mu > 0`` and period ``T > 0``."""

    q: float
    mu: float
    T: float = 2.0 * math.pi

    def __post_init__(self):
        for name in ("q", "mu", "T"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.q > 1.0:
            raise ValueError("q must exceed 1")
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if not self.T > 0.0:
            raise ValueError("T must be positive")

    def with_mu(self, mu: float) -> "ProblemParams":
        return ProblemParams(self.q, mu, self.T)


@dataclass(frozen=True)
class PhasePoint:
    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError("phase point components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v])


@dataclass(frozen=True)
class HomoclinicData:
    """Constants of the zero-energy orbit ``A_q cosh(B t)**C_q``."""

    A_q: float
    B_qmu: float
    C_q: float
    E_center: float
    E_homoclinic: float = 0.0


def _nonlinearity(q, u):
    return np.abs(u) ** (q - 1.0) * u


def vector_field(p: ProblemParams, x: PhasePoint) -> PhasePoint:
    """F(u, v) = (v, mu (u - |u|^(q-1) u)); the odd extension covers u < 0."""
    return PhasePoint(x.v, p.mu * (x.u - float(_nonlinearity(p.q, x.u))))


def restoring_force(p: ProblemParams, u):
    """V'(u) = mu (u^q - u), vectorised."""
    u = np.asarray(u, dtype=float)
    return p.mu * (_nonlinearity(p.q, u) - u)


def _check_nonnegative(u):
    if np.any(np.asarray(u) < 0.0):
        raise ValueError("potential is defined for u >= 0 only")


def potential(p: ProblemParams, u):
    """V(u) = mu (u^(q+1)/(q+1) - u^2/2) for u >= 0; accepts arrays."""
    _check_nonnegative(u)
    u = np.asarray(u, dtype=float)
    out = p.mu * u * u * (u ** (p.q - 1.0) / (p.q + 1.0) - 0.5)
    return float(out) if out.ndim == 0 else out


def energy(p: ProblemParams, x: PhasePoint) -> float:
    return 0.5 * x.v * x.v + potential(p, x.u)


def energy_array(p: ProblemParams, u, v):
    v = np.asarray(v, dtype=float)
    return 0.5 * v * v + potential(p, u)


def center_energy(p: ProblemParams) -> float:
    return p.mu * (1.0 / (p.q + 1.0) - 0.5)


def amplitude_bound(p: ProblemParams) -> float:
    """A_q = ((q+1)/2)^(1/(q-1)), the largest u on the homoclinic loop."""
    return _amplitude(p.q)


def _amplitude(q):
    # log/exp form: the exponent 1/(q-1) blows up as q -> 1+
    return math.exp(math.log1p((q - 1.0) / 2.0) / (q - 1.0))


def homoclinic_data(p: ProblemParams) -> HomoclinicData:
    return HomoclinicData(
        A_q=_amplitude(p.q),
        B_qmu=0.5 * (p.q - 1.0) * math.sqrt(p.mu),
        C_q=-2.0 / (p.q - 1.0),
        E_center=center_energy(p),
    )


def _log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def homoclinic_solution(p: ProblemParams, t):
    """u(t) = A_q cosh(B t)^C_q, evaluated in log space so large |t| underflows cleanly."""
    h = homoclinic_data(p)
    t = np.asarray(t, dtype=float)
    out = h.A_q * np.exp(h.C_q * _log_cosh(h.B_qmu * t))
    return float(out) if out.ndim == 0 else out


def homoclinic_derivatives(p: ProblemParams, t):
    """Analytic (u, u', u'') along the homoclinic orbit."""
    h = homoclinic_data(p)
    t = np.asarray(t, dtype=float)
    u = h.A_q * np.exp(h.C_q * _log_cosh(h.B_qmu * t))
    th = np.tanh(h.B_qmu * t)
    du = u * h.C_q * h.B_qmu * th
    # d/dt (C B tanh) = C B^2 (1 - tanh^2)
    ddu = du * h.C_q * h.B_qmu * th + u * h.C_q * h.B_qmu ** 2 * (1.0 - th * th)
    return u, du, ddu


def in_invariant_region(p: ProblemParams, x: PhasePoint) -> bool:
    """True iff (u, v) lies strictly inside the region bounded by the homoclinic loop."""
    if not 0.0 < x.u < amplitude_bound(p):
        return False
    return energy(p, x) < 0.0
