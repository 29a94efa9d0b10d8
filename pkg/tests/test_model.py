import math

import numpy as np
import pytest

from perbif import (PhasePoint, ProblemParams, amplitude_bound, center_energy, energy,
                    homoclinic_data, homoclinic_solution, in_invariant_region, potential,
                    vector_field)
from perbif.model import homoclinic_derivatives, restoring_force


@pytest.mark.parametrize("kwargs, msg", [
    (dict(q=1.0, mu=1.0), "q must exceed 1"),
    (dict(q=0.5, mu=1.0), "q must exceed 1"),
    (dict(q=3.0, mu=0.0), "mu must be positive"),
    (dict(q=3.0, mu=-1.0), "mu must be positive"),
    (dict(q=3.0, mu=1.0, T=0.0), "T must be positive"),
    (dict(q=math.nan, mu=1.0), "q must be finite"),
    (dict(q=3.0, mu=math.inf), "mu must be finite"),
])
def test_params_rejected(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        ProblemParams(**kwargs)


def test_vector_field_at_center_and_saddle():
    p = ProblemParams(3.0, 2.0)
    assert vector_field(p, PhasePoint(1.0, 0.0)) == PhasePoint(0.0, 0.0)
    assert vector_field(p, PhasePoint(0.0, 0.0)) == PhasePoint(0.0, 0.0)
    f = vector_field(p, PhasePoint(2.0, 0.5))
    assert f.u == 0.5 and f.v == pytest.approx(2.0 * (2.0 - 8.0))


def test_vector_field_odd_extension():
    p = ProblemParams(2.5, 1.3)
    a = vector_field(p, PhasePoint(0.7, 0.0)).v
    b = vector_field(p, PhasePoint(-0.7, 0.0)).v
    assert b == -a


def test_potential_values():
    p = ProblemParams(3.0, 1.0)
    assert potential(p, 0.0) == 0.0
    assert potential(p, 1.0) == pytest.approx(-0.25)
    assert center_energy(p) == pytest.approx(-0.25)
    A = amplitude_bound(p)
    assert A == pytest.approx(math.sqrt(2.0))
    assert potential(p, A) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        potential(p, -0.1)


def test_restoring_force_is_potential_gradient():
    p = ProblemParams(2.7, 1.9)
    u = np.linspace(0.1, 1.8, 17)
    h = 1e-6
    fd = (potential(p, u + h) - potential(p, u - h)) / (2 * h)
    np.testing.assert_allclose(restoring_force(p, u), fd, rtol=1e-8, atol=1e-9)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.0, 5.0, 7.0])
def test_amplitude_bound_closed_form(q):
    p = ProblemParams(q, 1.0)
    assert amplitude_bound(p) == pytest.approx(((q + 1) / 2) ** (1 / (q - 1)), rel=1e-14)


def test_amplitude_bound_near_q_one():
    # ((q+1)/2)^(1/(q-1)) -> e^(1/2) as q -> 1
    p = ProblemParams(1.0 + 1e-12, 1.0)
    assert amplitude_bound(p) == pytest.approx(math.exp(0.5), rel=1e-9)


def test_homoclinic_example_q3_mu1():
    p = ProblemParams(3.0, 1.0)
    h = homoclinic_data(p)
    assert h.A_q == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert h.B_qmu == 1.0
    assert h.C_q == -1.0
    assert h.E_center == -0.25
    assert homoclinic_solution(p, 0.0) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert homoclinic_solution(p, 1.0) == pytest.approx(math.sqrt(2.0) / math.cosh(1.0), rel=1e-14)


def test_homoclinic_large_t_underflows_cleanly():
    p = ProblemParams(3.0, 1.0)
    assert homoclinic_solution(p, 1e4) == 0.0
    assert homoclinic_solution(p, -800.0) == pytest.approx(2 * math.sqrt(2) * math.exp(-800.0),
                                                            rel=1e-12)


@pytest.mark.parametrize("q, mu", [(2.0, 1.0), (3.0, 2.5), (5.0, 0.7)])
def test_homoclinic_solves_ode_with_zero_energy(q, mu):
    p = ProblemParams(q, mu)
    t = np.linspace(-6.0, 6.0, 101)
    u, du, ddu = homoclinic_derivatives(p, t)
    np.testing.assert_allclose(ddu, mu * (u - u ** q), atol=1e-12)
    H = 0.5 * du ** 2 + potential(p, u)
    np.testing.assert_allclose(H, 0.0, atol=1e-13)


def test_invariant_region():
    p = ProblemParams(3.0, 1.0)
    assert in_invariant_region(p, PhasePoint(1.0, 0.0))
    assert in_invariant_region(p, PhasePoint(0.5, 0.1))
    assert not in_invariant_region(p, PhasePoint(1.5, 0.0))
    assert not in_invariant_region(p, PhasePoint(1.0, 1.0))
    assert not in_invariant_region(p, PhasePoint(-0.1, 0.0))
    assert energy(p, PhasePoint(1.0, 0.0)) == center_energy(p)
