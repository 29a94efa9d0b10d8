"""Period function of the conservative flow, by quadrature over energy levels.

This is the independent check on shooting: no time integration is involved.
For a level E in (E_center, 0) the orbit oscillates between the turning points
0 < u_- < 1 < u_+ < A_q and has period

    T(E) = sqrt(2) * integral_{u_-}^{u_+} du / sqrt(E - V(u)).

With u = c + h sin(theta), c = (u_+ + u_-)/2, h = (u_+ - u_-)/2, the
inverse-square-root endpoint singularities cancel exactly and the integrand
becomes 1/sqrt(R(theta)), R = (E - V(u)) / ((u - u_-)(u_+ - u)), a smooth
function of sin(theta).  The trapezoidal rule on uniform theta nodes is then
spectrally accurate.  R is formed from divided differences of V anchored at
the nearer turning point so that no cancellation occurs near either end.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .model import ProblemParams, amplitude_bound, center_energy, potential

log = logging.getLogger(__name__)

SCAN_SIZE = 256
SCAN_RHO_MIN = 1e-12
SCAN_RHO_MAX = 1.0 - 1e-7
MAX_NODES = 2 ** 22


class PeriodQuadratureError(RuntimeError):
    def __init__(self, E, estimates):
        super().__init__(f"period quadrature at E={E!r} did not converge; "
                         f"last estimates {estimates[0]!r}, {estimates[1]!r}")
        self.estimates = estimates


@dataclass(frozen=True)
class EnergyLevel:
    E: float
    period: Optional[float] = None


def _level(E) -> float:
    return E.E if isinstance(E, EnergyLevel) else float(E)


def _check_level(p, E):
    Ec = center_energy(p)
    if not Ec < E < 0.0:
        raise ValueError(f"energy {E!r} outside the open interval ({Ec!r}, 0)")


def _bisect(g, lo, hi):
    glo = g(lo)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0.0) == (glo > 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
    # return whichever end has the smaller residual
    return lo if abs(g(lo)) <= abs(g(hi)) else hi


def turning_points(p: ProblemParams, E: Union[float, EnergyLevel]) -> tuple[float, float]:
    """(u_-, u_+) with V(u_-) = V(u_+) = E, by bisection on (0, 1) and (1, A_q)."""
    E = _level(E)
    _check_level(p, E)
    g = lambda u: potential(p, u) - E
    return _bisect(g, 0.0, 1.0), _bisect(g, 1.0, amplitude_bound(p))


def _divided_difference(p, anchor, u, d):
    """(V(anchor) - V(u)) / d with d = anchor - u supplied exactly, vectorised."""
    e = p.q + 1.0
    r = d / u
    safe = np.where(r == 0.0, 1.0, r)
    # (a^e - u^e)/(a - u) = u^(e-1) expm1(e log1p(r)) / r, r = (a - u)/u
    s_pow = np.where(r == 0.0, e * u ** (e - 1.0),
                     u ** (e - 1.0) * np.expm1(e * np.log1p(safe)) / safe)
    return p.mu * (s_pow / e - (anchor + u) / 2.0)


def _integrand(p, u_minus, u_plus, theta):
    h = 0.5 * (u_plus - u_minus)
    c = 0.5 * (u_plus + u_minus)
    s = np.sin(theta)
    u = c + h * s
    g = np.empty_like(theta)
    upper = s >= 0.0
    # 1 - sin(theta) = 2 sin^2(pi/4 - theta/2), 1 + sin(theta) = 2 cos^2(pi/4 - theta/2)
    half = 0.25 * math.pi - 0.5 * theta
    gap_up = 2.0 * h * np.sin(half) ** 2          # u_+ - u
    gap_lo = 2.0 * h * np.cos(half) ** 2          # u - u_-
    uu, gu, gl = u[upper], gap_up[upper], gap_lo[upper]
    R_up = _divided_difference(p, u_plus, uu, gu) / gl
    lo = ~upper
    ul, gu2, gl2 = u[lo], gap_up[lo], gap_lo[lo]
    R_lo = -_divided_difference(p, u_minus, ul, -gl2) / gu2
    g[upper] = 1.0 / np.sqrt(R_up)
    g[lo] = 1.0 / np.sqrt(R_lo)
    return g


def period(p: ProblemParams, E: Union[float, EnergyLevel], rtol: float = 1e-10,
           max_nodes: int = MAX_NODES) -> float:
    """T(E) by trapezoidal quadrature in theta, doubling nodes until two
    successive estimates agree to ``rtol`` (relative)."""
    E = _level(E)
    u_minus, u_plus = turning_points(p, E)
    return _period_from_turning_points(p, E, u_minus, u_plus, rtol, max_nodes)


def _period_from_turning_points(p, E, u_minus, u_plus, rtol, max_nodes):
    n = 16
    theta = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n + 1)
    g = _integrand(p, u_minus, u_plus, theta)
    total = g[1:-1].sum() + 0.5 * (g[0] + g[-1])
    estimate = estimate_prev = math.sqrt(2.0) * total * math.pi / n
    while n < max_nodes:
        mids = -0.5 * math.pi + (np.arange(n) + 0.5) * (math.pi / n)
        total += _integrand(p, u_minus, u_plus, mids).sum()
        n *= 2
        new = math.sqrt(2.0) * total * math.pi / n
        if abs(new - estimate) <= rtol * abs(new):
            return new
        estimate_prev, estimate = estimate, new
    raise PeriodQuadratureError(E, (estimate_prev, estimate))


def linear_period(p: ProblemParams) -> float:
    """Small-amplitude limit 2 pi / sqrt(mu (q-1))."""
    return 2.0 * math.pi / math.sqrt(p.mu * (p.q - 1.0))


@dataclass(frozen=True)
class PeriodScan:
    """T(E) on the geometric energy grid; ``energies`` increase toward 0."""

    energies: np.ndarray
    periods: np.ndarray

    @property
    def min_period(self) -> float:
        return float(self.periods.min())

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.periods) > 0.0))


def scan_energies(p: ProblemParams, size: int = SCAN_SIZE) -> np.ndarray:
    """E = E_center * rho with rho geometric from ~1 down to 1e-12 (dense near E = 0)."""
    rho = np.geomspace(1.0, SCAN_RHO_MIN, size)
    rho[0] = SCAN_RHO_MAX
    return center_energy(p) * rho


@functools.lru_cache(maxsize=256)
def _scan(q, mu, size):
    p = ProblemParams(q, mu)
    energies = scan_energies(p, size)
    periods = np.array([period(p, E) for E in energies])
    scan = PeriodScan(energies, periods)
    if not scan.monotone:
        log.warning("non-monotone period function observed for q=%r mu=%r", q, mu)
    return scan


def scan_periods(p: ProblemParams, size: int = SCAN_SIZE) -> PeriodScan:
    # T(E) does not depend on the problem period; cache on (q, mu) only
    return _scan(float(p.q), float(p.mu), int(size))


def orbit_for_period(p: ProblemParams, T_target: float, tol: float = 1e-10) -> Optional[EnergyLevel]:
    """Energy of the first scanned orbit whose period equals ``T_target``.

    Returns ``None`` when every scanned period is at least ``T_target`` (only
    the constant solution) or when no scanned pair brackets it.
    """
    if not T_target > 0.0:
        raise ValueError("T_target must be positive")
    scan = scan_periods(p)
    if scan.min_period >= T_target:
        return None
    diff = scan.periods - T_target
    hits = np.nonzero(diff[:-1] * diff[1:] <= 0.0)[0]
    if hits.size == 0:
        return None
    j = int(hits[0])
    # bracket in log(-E): the period grows like log(1/|E|) toward the loop
    lo, hi = math.log(-scan.energies[j]), math.log(-scan.energies[j + 1])
    f_lo, f_hi = diff[j], diff[j + 1]
    if f_lo == 0.0:
        return EnergyLevel(float(scan.energies[j]), float(scan.periods[j]))
    if f_hi == 0.0:
        return EnergyLevel(float(scan.energies[j + 1]), float(scan.periods[j + 1]))
    side = 0
    best = None
    for _ in range(200):
        # Illinois-modified regula falsi
        x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        if not (min(lo, hi) < x < max(lo, hi)):
            x = 0.5 * (lo + hi)
        E = -math.exp(x)
        T_x = period(p, E, rtol=1e-12)
        f_x = T_x - T_target
        best = EnergyLevel(E, T_x)
        if abs(f_x) < tol:
            return best
        if (f_x > 0.0) == (f_hi > 0.0):
            hi, f_hi = x, f_x
            if side == -1:
                f_lo *= 0.5
            side = -1
        else:
            lo, f_lo = x, f_x
            if side == 1:
                f_hi *= 0.5
            side = 1
        if lo == hi:
            break
    log.warning("orbit_for_period: tolerance %g not met; residual %g", tol, abs(best.period - T_target))
    return best
