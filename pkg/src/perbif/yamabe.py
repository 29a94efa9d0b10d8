"""Basic Yamabe metrics on N x S^1(r): conformal factors depending on the circle only.

For a closed n-manifold N of constant scalar curvature R_N > 0 and the
product metric on N x S^1(r), a factor u(t), t in [0, 2 pi), gives constant
scalar curvature R_N exactly when u solves the periodic problem with

    q = (n + 3) / (n - 1),   mu = (n - 1) R_N r^2 / (4 n),   T = 2 pi.

Mapping tori of isometries of N reduce to the same equation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .continuation import ShootingConfig, distinct_solutions
from .model import ProblemParams
from .spectrum import count_lower_bound

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GeometryParams:
    """Dimension ``n >= 2`` of N, its scalar curvature ``R_N > 0``, circle radius ``r > 0``."""

    n: int
    R_N: float
    r: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if not (math.isfinite(self.R_N) and self.R_N > 0.0):
            raise ValueError("R_N must be positive")
        if not (math.isfinite(self.r) and self.r > 0.0):
            raise ValueError("r must be positive")

    def with_radius(self, r: float) -> "GeometryParams":
        return GeometryParams(self.n, self.R_N, r)


def to_ode_params(g: GeometryParams) -> ProblemParams:
    n = g.n
    return ProblemParams((n + 3.0) / (n - 1.0), (n - 1.0) * g.R_N * g.r * g.r / (4.0 * n), TWO_PI)


def critical_radii(g: GeometryParams, k_max: int) -> np.ndarray:
    """r_k = k sqrt(n / R_N), k = 1..k_max: radii at which mu crosses mu_k."""
    if int(k_max) != k_max or k_max < 1:
        raise ValueError("k_max must be a positive integer")
    return np.arange(1, int(k_max) + 1) * math.sqrt(g.n / g.R_N)


def _check_match(g, sol):
    p, ref = sol.params, to_ode_params(g)
    if not (math.isclose(p.q, ref.q, rel_tol=1e-12) and math.isclose(p.mu, ref.mu, rel_tol=1e-12)
            and math.isclose(p.T, ref.T, rel_tol=1e-12)):
        raise ValueError(f"parameter mismatch: solution has (q, mu, T) = ({p.q!r}, {p.mu!r}, "
                         f"{p.T!r}), geometry requires ({ref.q!r}, {ref.mu!r}, {ref.T!r})")


def spectral_derivative(f, period: float) -> np.ndarray:
    """d/dt of uniformly sampled periodic data via the FFT (Nyquist mode dropped)."""
    f = np.asarray(f, dtype=float)
    N = len(f)
    k = np.fft.rfftfreq(N, d=1.0 / N) * (TWO_PI / period)
    F = np.fft.rfft(f) * (1j * k)
    if N % 2 == 0:
        F[-1] = 0.0
    return np.fft.irfft(F, n=N)


def conformal_scalar_curvature(g: GeometryParams, sol, second_derivative: str = "ode") -> np.ndarray:
    """R_g(t) = (4n/(n-1)) u^(-q) (-u''/r^2 + (n-1) R_N u / (4n)) on the sample grid.

    With ``second_derivative="ode"`` u'' is substituted from the equation of
    ``sol.params`` and the bracket is regrouped as
    ``(c R_N - mu/r^2) u + (mu/r^2) u^q``; this checks the geometric
    reduction without the cancellation that the literal form suffers where u
    is tiny (its rounding error grows like u^(1-q)).  ``"spectral"``
    differentiates the stored u' samples instead and so also tests the
    profile, but is subject to that same amplification: use it only for
    profiles whose minimum is not extremely small.
    """
    _check_match(g, sol)
    n = g.n
    q = (n + 3.0) / (n - 1.0)
    u = np.asarray(sol.u, dtype=float)
    if not np.all(u > 0.0):
        raise ValueError("conformal factor must be positive")
    c = (n - 1.0) / (4.0 * n)
    if second_derivative == "spectral":
        upp = spectral_derivative(sol.du, sol.params.T)
        return u ** (-q) * (-upp / (g.r * g.r) + c * g.R_N * u) / c
    if second_derivative != "ode":
        raise ValueError("second_derivative must be 'spectral' or 'ode'")
    beta = sol.params.mu / (g.r * g.r)
    q_s = sol.params.q
    return ((c * g.R_N - beta) * u ** (1.0 - q) + beta * u ** (q_s - q)) / c


def curvature_deviation(g: GeometryParams, sol, second_derivative: str = "ode") -> float:
    """max_t |R_g - R_N| / R_N."""
    R = conformal_scalar_curvature(g, sol, second_derivative)
    return float(np.max(np.abs(R - g.R_N)) / g.R_N)


def relative_volume(g: GeometryParams, sol) -> float:
    """Volume of u^(4/(n-1)) g relative to the product metric: mean of u^(2(n+1)/(n-1))."""
    u = np.asarray(sol.u, dtype=float)
    return float(np.mean(u ** (2.0 * (g.n + 1.0) / (g.n - 1.0))))


@dataclass
class CountRow:
    r: float
    mu: float
    lower_bound: int
    found: int
    curvature_deviation: float
    status: dict = field(default_factory=dict)
    solutions: Optional[list] = field(default=None, repr=False)


def solutions_for_radius(g: GeometryParams, cfg: ShootingConfig = ShootingConfig()):
    p = to_ode_params(g)
    return distinct_solutions(p.q, p.T, p.mu, cfg)


def solution_count_vs_radius(g_base: GeometryParams, r_grid, cfg: ShootingConfig = ShootingConfig(),
                             keep_solutions: bool = False) -> list:
    """Per radius: guaranteed count, verified solutions found (constant included),
    and the worst curvature deviation among them."""
    from .verify import verify

    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or not np.all(r_grid > 0.0) or np.any(np.diff(r_grid) <= 0.0):
        raise ValueError("r_grid must be positive and strictly increasing")
    rows = []
    for r in r_grid:
        g = g_base.with_radius(float(r))
        p = to_ode_params(g)
        sols = solutions_for_radius(g, cfg)
        status = dict(sols.status)
        good = []
        for sol in sols:
            report = verify(sol)
            dev = curvature_deviation(g, sol)
            if report.passed:
                good.append((sol, dev))
            else:
                failed = [name for name, ok in report.passes.items() if not ok]
                status[sol.k] = "verification failed: " + ", ".join(failed)
        worst = max((dev for _, dev in good), default=0.0)
        rows.append(CountRow(float(r), p.mu, count_lower_bound(p.q, p.T, p.mu), len(good), worst,
                             status, [s for s, _ in good] if keep_solutions else None))
    return rows
