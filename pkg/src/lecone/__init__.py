"""Separable solutions of quasilinear Lane-Emden equations on spherical cones.

``u(x) = |x|^{-beta} omega(x/|x|)`` reduces ``-Delta_p u = eps u^q`` on a cone
over a spherical cap to a radial two-point problem for ``omega``.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .bvp import (ExistenceVerdict, ShootingOptions, ShootingSolution, existence_scan, miss_function,
                  p_homotopy_solve, separable_residual, solve, solve_absorption, solve_source)
from .errors import (BracketError, ContinuationError, ConvergenceError, DomainError, IntegrationError,
                     LeconeError, MonotonicityError, MultiplicityError, NoBracketError, SignChangeError,
                     SingularDenominatorError)
from .ode import IntegrationOptions, LaneEmden, RadialProfile, Spectral, divergence_residual, integrate_radial
from .params import (PohozaevCoeffs, ProblemParams, beta_critical, beta_q, lambda_of_beta, pohozaev_coeffs,
                     pohozaev_coeffs_factored, q_critical, q_from_beta)
from .pohozaev import (PohozaevReport, audit_general_phi, audit_identity, check_phi_conditions,
                       nonexistence_probe)
from .spectral import beta_S, beta_S_continuation, lambda_1_beta, lambda_beta, linear_cap_eigenvalue
from .sphere import COS_THETA, CONSTANT_ONE, CapGeometry, RadialTestFunction, make_weighted_grid
