"""Even periodic solutions by half-period shooting, and continuation of branches.

A solution on branch k is centered at its maximum ``a = u(0)``; its minimum
``b`` is reached after half the minimal period ``tau = T / (2k)``.  Internally
the shooting runs from the minimum, ``(b, 0) -> (a, 0)``, with the unknown
``s = -log(b)``.  Near the homoclinic loop ``a`` agrees with ``A_q`` to more
digits than a double holds (at q=3, mu=100 the gap is ~1e-26) while ``b``
stays resolved to full relative precision, so the (mu, s) chart is the only
one in which Newton and continuation remain well conditioned.

The scalar residual is ``G(mu, s) = v(tau) / sqrt(mu)``.  Since
``u(t; mu) = U(sqrt(mu) t)`` with ``U'' = U - U^q``, its mu-derivative is
exact: ``dG/dmu = tau (u - u^q)(tau) / (2 sqrt(mu))``.  The s-derivative comes
from the variational flow.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .integrator import IntegrationError, IntegratorConfig, flow_end, integrate
from .model import (PhasePoint, ProblemParams, amplitude_bound, center_energy,
                    energy_array, potential)
from .spectrum import DegeneracyInstant, count_lower_bound, degeneracy_instant, eigenvalue

log = logging.getLogger(__name__)

SIMPLE_ZERO_SLOPE = 1e-8
SYMMETRY_TOL = 1e-9
AMPLITUDE_TOL = 1e-12
TRIVIAL_S = 1e-7          # s below this is numerically the constant solution
MAX_S = 600.0             # b = exp(-s) must stay a normal double


# -- errors -----------------------------------------------------------------

class ContinuationError(RuntimeError):
    """Base class; ``diagnostics`` is a plain dict for reporting."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NoBranchError(ContinuationError):
    """mu is not beyond the degeneracy instant of the requested branch."""


class SolverError(ContinuationError):
    """Newton divergence, seed failure or step-size underflow."""


class InvariantViolation(ContinuationError):
    """A converged candidate failed a solution invariant."""


# -- data -------------------------------------------------------------------

@dataclass(frozen=True)
class ShootingConfig:
    newton_tol: float = 1e-11
    max_newton_iters: int = 25
    seed_offset: float = 1e-3
    arclength_step: float = 1e-2
    max_step: float = 2.0
    min_step: float = 1e-9
    grid_size: int = 1024
    rel_tol: float = 1e-13
    corrector_iters: int = 8
    max_points: int = 5000

    def __post_init__(self):
        for name in ("newton_tol", "max_newton_iters", "seed_offset", "arclength_step",
                     "max_step", "min_step", "grid_size", "rel_tol", "corrector_iters",
                     "max_points"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        n = self.grid_size
        if int(n) != n or n < 8 or n & (n - 1):
            raise ValueError("grid_size must be a power of two (>= 8)")


@dataclass
class SolutionDiagnostics:
    newton_iterations: int = 0
    shooting_residual: float = 0.0
    ode_residual: Optional[float] = None
    energy_drift: float = 0.0


@dataclass(frozen=True)
class ZeroCrossings:
    times: np.ndarray
    slopes: np.ndarray

    @property
    def count(self) -> int:
        return len(self.times)

    @property
    def simple(self) -> np.ndarray:
        return np.abs(self.slopes) > SIMPLE_ZERO_SLOPE

    @property
    def min_slope(self) -> float:
        return float(np.min(np.abs(self.slopes))) if len(self.slopes) else math.inf


@dataclass
class PeriodicSolution:
    """A positive T-periodic solution sampled at ``t_i = i T / N``.

    The profile has its maximum ``a`` at t = 0 and is even:
    ``u[N - i] == u[i]``.  ``k = 0`` denotes the constant solution.
    """

    params: ProblemParams
    k: int
    a: float
    b: float
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    E: float
    zero_count: int
    zeros: ZeroCrossings
    diagnostics: SolutionDiagnostics = field(default_factory=SolutionDiagnostics)

    @property
    def u_max(self) -> float:
        return self.a

    @property
    def u_min(self) -> float:
        return self.b

    @property
    def is_constant(self) -> bool:
        return self.k == 0

    @property
    def profile(self):
        return self.t, self.u, self.du

    def shifted_half_period(self):
        """Profile re-centred at T/2 (minimum at t = 0) for export."""
        n = len(self.u)
        return self.t, np.roll(self.u, n // 2), np.roll(self.du, n // 2)


@dataclass
class Branch:
    k: int
    origin: DegeneracyInstant
    points: list = field(default_factory=list)
    findings: list = field(default_factory=list)

    @property
    def mus(self) -> np.ndarray:
        return np.array([mu for mu, _ in self.points])

    @property
    def solutions(self):
        return [sol for _, sol in self.points]


class SolutionList(list):
    """Solutions of one mu-slice; ``status[k]`` is "ok" or the failure message."""

    def __init__(self, items=(), status=None):
        super().__init__(items)
        self.status = dict(status or {})


# -- shooting ----------------------------------------------------------------

def _half_period(p, k):
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    return p.T / (2.0 * k)


def _abs_tol(cfg, b):
    # the orbit never drops below b; scale the absolute floor with it
    return cfg.rel_tol * min(1.0, b) * 1e-2


def shoot_half_period(p: ProblemParams, k: int, a: float, rel_tol: float = 1e-12):
    """Residual ``u'(T/(2k))`` from ``(a, 0)`` and its derivative in ``a``.

    Reference formulation from the maximum.  The solver itself shoots from
    the minimum (see :func:`shoot_from_minimum`), which stays accurate close
    to the homoclinic loop where ``a`` is not resolvable in double precision.
    """
    tau = _half_period(p, k)
    if not 0.0 < a:
        raise ValueError("a must be positive")
    try:
        y = flow_end(p, (float(a), 0.0), tau, rel_tol, rel_tol * 1e-2, variational=True)
    except IntegrationError as exc:
        raise IntegrationError(f"orbit through a={a!r} leaves the bounded region",
                               exc.t_reached) from exc
    return float(y[1]), float(y[4])


def shoot_from_minimum(p: ProblemParams, k: int, b: float, rel_tol: float = 1e-12):
    """Residual ``u'(T/(2k))`` from ``(b, 0)`` and its derivative in ``b``."""
    tau = _half_period(p, k)
    if not 0.0 < b:
        raise ValueError("b must be positive")
    y = flow_end(p, (float(b), 0.0), tau, rel_tol, rel_tol * min(1.0, b) * 1e-2,
                 variational=True)
    return float(y[1]), float(y[4])


def _residual(q, T, k, mu, s, cfg):
    """(G, dG/dmu, dG/ds) at (mu, s)."""
    p = ProblemParams(q, mu, T)
    tau = _half_period(p, k)
    b = math.exp(-s)
    y = flow_end(p, (b, 0.0), tau, cfg.rel_tol, _abs_tol(cfg, b), variational=True)
    u, v = y[0], y[1]
    root = math.sqrt(mu)
    G = v / root
    G_mu = tau * (u - abs(u) ** (q - 1.0) * u) / (2.0 * root)
    G_s = -b * y[4] / root
    return G, G_mu, G_s


def _polish(q, T, k, mu, s, G, G_s, cfg):
    """One extra Newton step in s once converged.

    The tolerance is on v(tau) / sqrt(mu); a leftover of 1e-11 there still
    shows up as ~1e-8 in the cell defect of u'' at the maximum, while one
    more quadratic step reaches the rounding floor.
    """
    if G_s == 0.0 or not math.isfinite(G_s):
        return s, G
    s_new = s - G / G_s
    try:
        _check_s(s_new)
        G_new = _residual(q, T, k, mu, s_new, cfg)[0]
    except (ContinuationError, IntegrationError):
        return s, G
    return (s_new, G_new) if abs(G_new) < abs(G) else (s, G)


def _check_s(s):
    if not (math.isfinite(s) and 0.0 < s < MAX_S):
        raise SolverError(f"shooting variable left its range (s={s!r})")


def _newton_in_s(q, T, k, mu, s, cfg):
    """Solve G(mu, s) = 0 for s at fixed mu; returns (s, iterations, |G|)."""
    G = math.nan
    for it in range(cfg.max_newton_iters + 1):
        _check_s(s)
        G, _, G_s = _residual(q, T, k, mu, s, cfg)
        if abs(G) < cfg.newton_tol:
            s, G = _polish(q, T, k, mu, s, G, G_s, cfg)
            return s, it, abs(G)
        if it == cfg.max_newton_iters:
            break
        if G_s == 0.0 or not math.isfinite(G_s):
            raise SolverError("singular shooting derivative", {"mu": mu, "s": s})
        step = -G / G_s
        # keep b inside (0, 1): never jump past half of the current s toward 0
        if s + step <= 0.0:
            step = -0.5 * s
        s += step
    raise SolverError(f"Newton did not converge in {cfg.max_newton_iters} iterations",
                      {"mu": mu, "s": s, "residual": abs(G)})


def _partner_minimum(p, a):
    """Minimum b of the orbit whose maximum is a (same energy level)."""
    E = potential(p, a) if a < amplitude_bound(p) else 0.0
    if not E < 0.0:
        return 1e-300
    lo, hi = 0.0, 1.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if potential(p, mid) > E:
            lo = mid
        else:
            hi = mid


# -- profile construction ----------------------------------------------------

def _build_profile(p, k, s, cfg):
    """Sample the T-periodic extension of the half orbit min -> max.

    With r = i k mod N, u(t_i) = w(tau |N - 2r| / N) where w is the orbit
    started at the minimum; the sign of u' follows the side of the half
    period.  Samples are hit exactly by the integrator, so u[N - i] == u[i].
    """
    N = cfg.grid_size
    tau = _half_period(p, k)
    b = math.exp(-s)
    i = np.arange(N)
    r = (i * k) % N
    j = np.abs(N - 2 * r)
    sign = np.where(2 * r <= N, -1.0, 1.0)
    levels = np.unique(j)
    te = tau * (levels / N)
    icfg = IntegratorConfig(cfg.rel_tol, _abs_tol(cfg, b))
    traj = integrate(p, PhasePoint(b, 0.0), (0.0, tau), icfg, t_eval=te)
    w = traj.states
    idx = np.searchsorted(levels, j)
    u = w[idx, 0].copy()
    du = sign * w[idx, 1]
    # extrema: u' = 0 exactly, as the even reflection requires
    du[(2 * r == N) | (r == 0)] = 0.0
    t = p.T * i / N
    return t, u, du, float(w[-1, 0]), b


def _energy_drift(p, u, du, E):
    return float(np.max(np.abs(energy_array(p, u, du) - E)) / abs(center_energy(p)))


def _refine_crossing(traj, lo, hi, g_lo, g_hi):
    """Root of u - 1 on the dense interpolant inside [lo, hi].

    Bisection narrows the bracket; Newton steps with u' from the same
    interpolant finish it and are rejected whenever they leave the bracket.
    """
    up = g_hi > 0.0
    x = lo + (hi - lo) * g_lo / (g_lo - g_hi)
    for _ in range(100):
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        uv = traj(x)
        g = uv[0] - 1.0
        if g == 0.0:
            return x
        if (g > 0.0) == up:
            hi = x
        else:
            lo = x
        if hi - lo <= 4e-16 * max(1.0, abs(hi)):
            break
        x = x - g / uv[1] if uv[1] != 0.0 else 0.5 * (lo + hi)
    return 0.5 * (lo + hi) if not lo < x < hi else x


def count_zeros(p: ProblemParams, t, u, du, rel_tol: float = 1e-13,
                subdivisions: int = 32) -> ZeroCrossings:
    """Zeros of u - 1 over one period from a uniform periodic sample.

    Every grid cell with a sign change, or with an interior extremum that
    could hide a pair of crossings, is re-integrated from its left sample
    with dense output; crossings are then located on the interpolant by
    bracketed Newton (bisection fallback).  Slopes are u' at the refined crossings.
    Detection is complete when every cell is shorter than half the minimal
    period, so that it holds at most one extremum.
    """
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    N = len(u)
    dt = p.T / N
    g = u - 1.0
    g_next = np.roll(g, -1)
    du_next = np.roll(du, -1)
    changes = (g > 0.0) != (g_next > 0.0)
    hidden = ~changes & (du * du_next < 0.0)
    cells = np.nonzero(changes | hidden)[0]
    times, slopes = [], []
    icfg = IntegratorConfig(rel_tol, rel_tol * 1e-2, dense_output=True)
    for c in cells:
        traj = integrate(p, PhasePoint(float(u[c]), float(du[c])), (0.0, dt), icfg)
        theta = np.linspace(0.0, dt, subdivisions + 1)
        gs = traj(theta)[:, 0] - 1.0
        if changes[c]:
            # anchor the ends on the stored samples so the cell parity is kept
            gs[0], gs[-1] = g[c], g_next[c]
        sub = np.nonzero((gs[:-1] > 0.0) != (gs[1:] > 0.0))[0]
        if changes[c] and len(sub) % 2 == 0:
            raise InvariantViolation("zero counting: grid too coarse to resolve a crossing",
                                     {"cell": int(c)})
        for m in sub:
            tz = _refine_crossing(traj, theta[m], theta[m + 1], gs[m], gs[m + 1])
            times.append(float(np.fmod(t[c] + tz, p.T)))
            slopes.append(float(traj(tz)[1]))
    order = np.argsort(times)
    return ZeroCrossings(np.asarray(times)[order], np.asarray(slopes)[order])


def _make_solution(p, k, s, cfg, iterations=0, residual=0.0):
    t, u, du, a, b = _build_profile(p, k, s, cfg)
    E = potential(p, b)
    zeros = count_zeros(p, t, u, du)
    diag = SolutionDiagnostics(iterations, residual, None, _energy_drift(p, u, du, E))
    return PeriodicSolution(p, k, a, b, t, u, du, E, zeros.count, zeros, diag)


def constant_solution(p: ProblemParams, grid_size: int = 1024) -> PeriodicSolution:
    t = p.T * np.arange(grid_size) / grid_size
    u = np.ones(grid_size)
    du = np.zeros(grid_size)
    zeros = ZeroCrossings(np.empty(0), np.empty(0))
    return PeriodicSolution(p, 0, 1.0, 1.0, t, u, du, center_energy(p), 0, zeros,
                            SolutionDiagnostics(0, 0.0, 0.0, 0.0))


def invariant_violations(sol: PeriodicSolution) -> list:
    """Names and values of every failed solution invariant (empty if valid)."""
    p = sol.params
    bad = []
    if not np.all(np.isfinite(sol.u)) or not np.all(np.isfinite(sol.du)):
        return ["non-finite profile"]
    if not np.all(sol.u > 0.0):
        bad.append(f"positivity: min u = {sol.u.min()!r}")
    A = amplitude_bound(p)
    if sol.u.max() > A + AMPLITUDE_TOL:
        bad.append(f"a priori bound: max u = {sol.u.max()!r} > A_q = {A!r}")
    rev = np.roll(sol.u[::-1], 1)
    asym = float(np.max(np.abs(rev - sol.u)))
    if asym > SYMMETRY_TOL:
        bad.append(f"evenness: max |u(T-t) - u(t)| = {asym!r}")
    if sol.is_constant:
        return bad
    if not sol.u.min() < 1.0 < sol.u.max():
        bad.append("nonconstant solution does not straddle u = 1")
    if sol.zero_count != 2 * sol.k:
        bad.append(f"zero count {sol.zero_count} != 2k = {2 * sol.k}")
    if sol.zeros.min_slope <= SIMPLE_ZERO_SLOPE:
        bad.append(f"non-simple zero: min |u'| = {sol.zeros.min_slope!r}")
    Ec = center_energy(p)
    if not Ec < sol.E < 0.0:
        bad.append(f"energy {sol.E!r} outside ({Ec!r}, 0)")
    return bad


def _checked(sol, context):
    bad = invariant_violations(sol)
    if bad:
        diag = {"k": sol.k, "mu": sol.params.mu, "u_max": sol.a, "u_min": sol.b,
                "violations": bad}
        diag.update(context)
        raise InvariantViolation("; ".join(bad), diag)
    return sol


def _require_branch(p, k):
    inst = degeneracy_instant(p.q, p.T, k)
    if not p.mu > inst.mu_k:
        raise NoBranchError(f"mu={p.mu!r} is not above degeneracy instant k={k} "
                            f"(mu_k={inst.mu_k!r}); no branch point exists",
                            {"k": k, "mu_k": inst.mu_k})
    return inst


def _solve_at(p, k, s_guess, cfg):
    s, iters, res = _newton_in_s(p.q, p.T, k, p.mu, s_guess, cfg)
    if s < TRIVIAL_S:
        raise SolverError("Newton converged to the constant solution", {"s": s})
    sol = _make_solution(p, k, s, cfg, iters, res)
    return _checked(sol, {"s": s})


def solve_branch_point(p: ProblemParams, k: int, a_guess: Optional[float] = None,
                       cfg: ShootingConfig = ShootingConfig()) -> PeriodicSolution:
    """Newton from the amplitude guess ``a_guess``; every invariant is checked.

    The half-period residual also vanishes on orbits of other branches, so a
    poor guess can converge to a solution with the wrong zero count; that is
    reported as :class:`InvariantViolation`.  With ``a_guess=None`` the point
    is reached by continuing branch k from its bifurcation instead.
    """
    _require_branch(p, k)
    if a_guess is None:
        from .verify import ode_residual
        sol = continue_branch(p.q, p.T, k, p.mu, cfg).points[-1][1]
        sol.diagnostics.ode_residual = ode_residual(sol)
        return sol
    if not 1.0 < a_guess:
        raise ValueError("a_guess must exceed 1")
    s0 = -math.log(_partner_minimum(p, a_guess))
    return _solve_at(p, k, s0, cfg)


# -- continuation ------------------------------------------------------------

def _seed(q, T, k, cfg):
    """Point (mu, s = delta) near the bifurcation, by Newton in mu."""
    inst = degeneracy_instant(q, T, k)
    s = cfg.seed_offset
    mu = inst.mu_k
    G = math.nan
    for _ in range(cfg.max_newton_iters):
        G, G_mu, _ = _residual(q, T, k, mu, s, cfg)
        if abs(G) < cfg.newton_tol:
            return mu, s
        if G_mu == 0.0 or not math.isfinite(G_mu):
            break
        mu -= G / G_mu
        if not mu > 0.0:
            break
    lam = eigenvalue(q, T, mu if mu > 0 else inst.mu_k, k)
    raise SolverError(f"seed failure near mu_k={inst.mu_k!r} (lambda_k={lam!r})",
                      {"k": k, "mu_k": inst.mu_k, "lambda_k": lam, "residual": abs(G)})


def _corrector(q, T, k, X, d, cfg):
    """Newton on [G(X), d.(X - Xp)] from the predictor X; returns (X, iterations, |G|)."""
    Xp = X.copy()
    for it in range(cfg.corrector_iters + 1):
        if not (X[0] > 0.0):
            raise SolverError("corrector left mu > 0")
        _check_s(X[1])
        G, G_mu, G_s = _residual(q, T, k, X[0], X[1], cfg)
        N = float(d @ (X - Xp))
        if abs(G) < cfg.newton_tol and it > 0:
            X[1], G = _polish(q, T, k, X[0], X[1], G, G_s, cfg)
            return X, it, abs(G)
        if it == cfg.corrector_iters:
            break
        J = np.array([[G_mu, G_s], [d[0], d[1]]])
        try:
            X = X - np.linalg.solve(J, np.array([G, N]))
        except np.linalg.LinAlgError:
            raise SolverError("singular corrector Jacobian")
    raise SolverError("corrector did not converge", {"mu": float(X[0]), "s": float(X[1])})


def continue_branch(q: float, T: float, k: int, mu_max: float,
                    cfg: ShootingConfig = ShootingConfig()) -> Branch:
    """Follow branch k from its degeneracy instant up to exactly ``mu_max``.

    Pseudo-arclength in (mu, s) with a secant predictor started from the
    bifurcation point (mu_k, 0); the step is halved on any corrector or
    invariant failure and doubled after three easy steps.  The last point is
    pinned to ``mu_max`` by Newton in s at fixed mu.
    """
    inst = _require_branch(ProblemParams(q, mu_max, T), k)
    branch = Branch(k, inst)
    mu0, s0 = _seed(q, T, k, cfg)

    def accept(mu, s, iters, res):
        p = ProblemParams(q, mu, T)
        sol = _checked(_make_solution(p, k, s, cfg, iters, res), {"s": s})
        branch.points.append((mu, sol))
        return sol

    if mu_max <= mu0:
        # target lies between mu_k and the seed: s ~ sqrt(mu - mu_k) locally
        frac = (mu_max - inst.mu_k) / (mu0 - inst.mu_k)
        sol = _solve_at(ProblemParams(q, mu_max, T), k, s0 * math.sqrt(frac), cfg)
        branch.points.append((mu_max, sol))
        return branch

    accept(mu0, s0, 0, 0.0)
    prev = np.array([inst.mu_k, 0.0])
    cur = np.array([mu0, s0])
    h = cfg.arclength_step
    easy = 0
    direction = 1.0
    while True:
        if len(branch.points) >= cfg.max_points:
            raise SolverError(f"branch {k}: point budget exhausted before mu_max",
                              {"mu": float(cur[0]), "points": len(branch.points)})
        d = cur - prev
        d /= np.hypot(d[0], d[1])
        try:
            X, iters, res = _corrector(q, T, k, cur + h * d, d, cfg)
            if not float(d @ (X - cur)) > 0.0:
                raise SolverError("corrector moved backward")
            if X[0] >= mu_max:
                frac = (mu_max - cur[0]) / (X[0] - cur[0])
                s_guess = cur[1] + frac * (X[1] - cur[1])
                s, iters, res = _newton_in_s(q, T, k, mu_max, s_guess, cfg)
                accept(mu_max, s, iters, res)
                log.debug("branch %d: %d points up to mu=%r", k, len(branch.points), mu_max)
                return branch
            accept(X[0], X[1], iters, res)
        except (ContinuationError, IntegrationError) as exc:
            h *= 0.5
            easy = 0
            log.debug("branch %d: step rejected at mu=%.6g (%s); h=%.3g", k, cur[0], exc, h)
            if h < cfg.min_step:
                raise SolverError(f"branch {k}: arclength step underflow at mu={float(cur[0])!r}",
                                  {"k": k, "mu": float(cur[0]), "s": float(cur[1]),
                                   "cause": str(exc)})
            continue
        step_dir = math.copysign(1.0, X[0] - cur[0])
        if step_dir != direction:
            branch.findings.append(f"fold on branch {k} near mu={float(cur[0])!r}: the branch "
                                   "meets nearby mu-slices more than once")
            direction = step_dir
        prev, cur = cur, X
        easy = easy + 1 if iters <= 3 else 0
        if easy >= 3:
            h = min(2.0 * h, cfg.max_step)
            easy = 0


def distinct_solutions(q: float, T: float, mu: float,
                       cfg: ShootingConfig = ShootingConfig()) -> SolutionList:
    """The constant solution plus one solution per guaranteed branch.

    Failures on individual branches are recorded in ``status`` and do not stop
    the others.
    """
    from .verify import ode_residual

    p = ProblemParams(q, mu, T)
    out = SolutionList([constant_solution(p, cfg.grid_size)], {0: "ok"})
    for k in range(1, count_lower_bound(q, T, mu) + 1):
        try:
            branch = continue_branch(q, T, k, mu, cfg)
            sol = branch.points[-1][1]
            sol.diagnostics.ode_residual = ode_residual(sol)
        except (ContinuationError, IntegrationError) as exc:
            log.warning("branch %d at mu=%r failed: %s", k, mu, exc)
            out.status[k] = f"{type(exc).__name__}: {exc}"
            continue
        for note in branch.findings:
            log.info("%s", note)
        out.append(sol)
        out.status[k] = "ok"
    return out
