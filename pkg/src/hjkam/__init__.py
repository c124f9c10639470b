"""Weak KAM theory toolbox for convex Hamiltonians on the line and circle.

Hamiltonian flow and monodromy, short-time generating functions by
shooting, minimal action by broken geodesics with a Lagrangian oracle,
Lax-Oleinik operators and regularization on periodic grids, critical
values, weak KAM solutions, the Mane potential, and Aubry/invariant sets.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ExistenceHorizonExceeded, FoldDetected,
                     HjkamError, LevelBelowCritical, MultistartExhausted,
                     NonConvergence, NumericalDomain, SearchRadiusExceeded,
                     SigmaExceeded, SolverDiverged, TrajectoryEscape)
from .hamiltonian import (HamiltonianModel, HypothesisReport, check_hypotheses,
                          eval_and_grads, forced_model, free_model, legendre,
                          mechanical_model, model_from_dict, model_from_json,
                          pendulum_model, quadratic_model)
from .flow import (MonodromyResult, PhaseState, Trajectory, TwistWindow,
                   certify_sigma, check_twist, default_sigma_eff,
                   integrate_flow, monodromy, sigma_bound)
from .generating import (GeneratingSample, GeometricFront, classical_cauchy,
                         generating_S, propagate_front, second_diff_probe,
                         shoot_rho0)
from .action import (BrokenPath, broken_action_value, lagrangian_action,
                     minimal_action, reconstruct_trajectory, tonelli_oracle,
                     triangle_check)
from .laxoleinik import (GridFunction, apply_T, apply_T_dual, regularize_R,
                         regularize_R_dual, semiconcavity_constant)
from .weakkam import (AubryResult, InvariantSetResult, ManeField, WeakKamResult,
                      aubry_set, calibrated_curve, critical_value,
                      fixed_point_residual, invariant_set, is_subsolution,
                      mane_pair, mane_potential, weak_kam_solve)
