import math

import numpy as np
import pytest

from perbif import (IntegrationError, IntegratorConfig, PhasePoint, ProblemParams, integrate,
                    integrate_with_variational, potential)
from perbif import _backend
from perbif.integrator import flow_cells, flow_end

TIGHT = IntegratorConfig(1e-13, 1e-15)


def test_linearised_oscillation_small_amplitude():
    # near u = 1 the flow is a harmonic oscillator with omega^2 = mu (q - 1)
    p = ProblemParams(3.0, 2.0)
    eps = 1e-6
    omega = math.sqrt(p.mu * (p.q - 1.0))
    t = np.linspace(0.0, 3.0, 7)
    tr = integrate(p, PhasePoint(1.0 + eps, 0.0), (0.0, 3.0), TIGHT, t_eval=t)
    np.testing.assert_allclose(tr.u - 1.0, eps * np.cos(omega * t), atol=1e-11)


def test_energy_conserved():
    p = ProblemParams(3.0, 3.0)
    tr = integrate(p, PhasePoint(1.3, 0.0), (0.0, 20.0), TIGHT)
    H = 0.5 * tr.v ** 2 + potential(p, tr.u)
    assert np.max(np.abs(H - H[0])) < 1e-12


def test_t_eval_landing_is_exact():
    p = ProblemParams(2.0, 1.0)
    te = np.array([0.0, 0.25, 1.0, 2.5])
    tr = integrate(p, PhasePoint(1.2, 0.0), (0.0, 2.5), TIGHT, t_eval=te)
    assert np.array_equal(tr.times, te)
    assert tr.u[0] == 1.2 and tr.v[0] == 0.0
    full = integrate(p, PhasePoint(1.2, 0.0), (0.0, 2.5), TIGHT)
    assert full.u[-1] == pytest.approx(tr.u[-1], abs=1e-12)


def test_dense_output_matches_landing():
    p = ProblemParams(3.0, 3.0)
    cfg = IntegratorConfig(1e-13, 1e-15, dense_output=True)
    tr = integrate(p, PhasePoint(0.4, 0.0), (0.0, 2.0), cfg)
    te = np.linspace(0.0, 2.0, 9)
    ref = integrate(p, PhasePoint(0.4, 0.0), (0.0, 2.0), TIGHT, t_eval=te)
    np.testing.assert_allclose(tr(te), ref.states, atol=1e-11)
    with pytest.raises(ValueError):
        tr(2.5)


def test_dense_output_requires_flag():
    p = ProblemParams(3.0, 1.0)
    tr = integrate(p, PhasePoint(1.1, 0.0), (0.0, 1.0))
    with pytest.raises(ValueError):
        tr(0.5)


def test_variational_matches_finite_differences():
    p = ProblemParams(3.0, 3.0)
    x0 = PhasePoint(0.6, 0.1)
    tr = integrate_with_variational(p, x0, (0.0, 1.5), TIGHT, t_eval=[1.5])
    Phi = tr.sensitivity[-1]
    h = 1e-6
    cols = []
    for du, dv in ((h, 0.0), (0.0, h)):
        plus = integrate(p, PhasePoint(x0.u + du, x0.v + dv), (0.0, 1.5), TIGHT, t_eval=[1.5])
        minus = integrate(p, PhasePoint(x0.u - du, x0.v - dv), (0.0, 1.5), TIGHT, t_eval=[1.5])
        cols.append((plus.states[-1] - minus.states[-1]) / (2 * h))
    np.testing.assert_allclose(Phi, np.column_stack(cols), rtol=1e-6, atol=1e-7)
    # Liouville: the flow preserves area
    assert np.linalg.det(Phi) == pytest.approx(1.0, abs=1e-10)


def test_flow_end_matches_integrate():
    p = ProblemParams(3.0, 3.0)
    y = flow_end(p, (0.5, 0.0), 1.2, 1e-13, 1e-15)
    tr = integrate(p, PhasePoint(0.5, 0.0), (0.0, 1.2), TIGHT)
    np.testing.assert_array_equal(y, tr.states[-1])


def test_flow_cells():
    p = ProblemParams(2.0, 4.5)
    starts = np.array([[0.5, 0.0], [1.2, 0.3], [1.0, -0.2]])
    dts = np.array([0.1, 0.2, 0.05])
    ends = flow_cells(p, starts, dts, 1e-13, 1e-15)
    for row, dt, end in zip(starts, dts, ends):
        np.testing.assert_array_equal(end, flow_end(p, row, dt, 1e-13, 1e-15))


def test_nonfinite_state_reported():
    p = ProblemParams(3.0, 1.0)
    with pytest.raises(IntegrationError, match="non-finite"):
        flow_end(p, (math.nan, 0.0), 1.0, 1e-10, 1e-12)


def test_step_budget_reported():
    status, y = _backend.advance(3.0, 1.0, [1.2, 0.0], 0.0, 100.0, 1e-13, 1e-15, math.inf, 10)
    assert status == _backend.STATUS_MAX_STEPS
    assert np.all(np.isfinite(y))


@pytest.mark.parametrize("kwargs", [dict(rel_tol=0.0), dict(abs_tol=-1.0), dict(max_step=0.0)])
def test_config_rejected(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)


def test_bad_span_rejected():
    p = ProblemParams(3.0, 1.0)
    with pytest.raises(ValueError):
        integrate(p, PhasePoint(1.0, 0.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        integrate(p, PhasePoint(1.0, 0.0), (0.0, 1.0), t_eval=[0.5, 0.2])
