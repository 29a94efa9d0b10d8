"""Positive periodic solutions of u'' = mu (u - |u|^(q-1) u).

Shooting and continuation of the bifurcation branches issuing from u = 1,
an independent period-function oracle, verification checks, and the
reduction of basic Yamabe metrics on N x S^1 to this equation.
"""
from ._backend import BACKEND
from .continuation import (Branch, ContinuationError, InvariantViolation, NoBranchError,
                           PeriodicSolution, ShootingConfig, SolverError, constant_solution,
                           continue_branch, count_zeros, distinct_solutions, shoot_from_minimum,
                           shoot_half_period, solve_branch_point)
from .integrator import (IntegrationError, IntegratorConfig, Trajectory, integrate,
                         integrate_with_variational)
from .model import (HomoclinicData, PhasePoint, ProblemParams, amplitude_bound, center_energy,
                    energy, homoclinic_data, homoclinic_solution, in_invariant_region, potential,
                    vector_field)
from .period import EnergyLevel, orbit_for_period, period, scan_periods, turning_points
from .spectrum import (DegeneracyInstant, asymptotic_density, count_lower_bound,
                       degeneracy_instant, eigenfunction_even, eigenvalue)
from .verify import (VerificationReport, identity_2_9_residual, normalize_form, ode_residual,
                     rescale_to_2pi, verify, wirtinger_check)
from .yamabe import (GeometryParams, conformal_scalar_curvature, critical_radii,
                     relative_volume, solution_count_vs_radius, to_ode_params)

__version__ = "0.1.0"
