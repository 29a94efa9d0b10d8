"""Linearisation at the constant solution u = 1: spectrum, kernel and counting.

Around u = 1 the equation linearises to w'' + (q-1) mu w = 0, whose
T-periodic eigenvalues are ``lambda_k(mu) = (2 pi k / T)**2 - (q-1) mu``.
Nonconstant branches bifurcate where ``lambda_k`` crosses zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DegeneracyInstant:
    k: int
    mu_k: float
    omega_k: float


def _check_q_T(q, T):
    if not q > 1.0:
        raise ValueError("q must exceed 1")
    if not T > 0.0:
        raise ValueError("T must be positive")


def degeneracy_instant(q: float, T: float, k: int) -> DegeneracyInstant:
    """mu_k = 4 pi^2 k^2 / (T^2 (q-1)); k = 0 is rejected (lambda_0 < 0 for mu > 0)."""
    _check_q_T(q, T)
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    omega = TWO_PI * k / T
    return DegeneracyInstant(int(k), omega * omega / (q - 1.0), omega)


def eigenvalue(q: float, T: float, mu: float, k: int) -> float:
    if k < 0:
        raise ValueError("k must be nonnegative")
    omega = TWO_PI * k / T
    return omega * omega - (q - 1.0) * mu


def eigenfunction_even(T: float, k: int):
    """Return ``t -> cos(2 pi k t / T)``, the kernel direction in the even class."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    omega = TWO_PI * k / T

    def profile(t):
        return np.cos(omega * np.asarray(t, dtype=float))

    return profile


def eigenfunction_odd(T: float, k: int):
    """``t -> sin(2 pi k t / T)``; not used for branch seeding."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    omega = TWO_PI * k / T
    return lambda t: np.sin(omega * np.asarray(t, dtype=float))


def _crossing_ratio(q, T, mu):
    return T * math.sqrt((q - 1.0) * mu) / TWO_PI


def count_lower_bound(q: float, T: float, mu: float) -> int:
    """Number of degeneracy instants strictly below ``mu``.

    ``mu`` exactly at ``mu_k`` counts k - 1: the guaranteed count is constant on
    the half-open intervals ``(mu_k, mu_{k+1}]``.
    """
    _check_q_T(q, T)
    if not mu > 0.0:
        raise ValueError("mu must be positive")
    x = _crossing_ratio(q, T, mu)
    k = math.floor(x)
    if k == x:
        k -= 1
    # x can sit one ulp off an integer; settle against mu_k < mu directly
    while k >= 1 and not degeneracy_instant(q, T, k).mu_k < mu:
        k -= 1
    while degeneracy_instant(q, T, k + 1).mu_k < mu:
        k += 1
    return max(k, 0)


def asymptotic_density(q: float, T: float) -> float:
    """T sqrt(q-1) / (2 pi): lower bound on liminf n(mu, T) / sqrt(mu)."""
    _check_q_T(q, T)
    return T * math.sqrt(q - 1.0) / TWO_PI
