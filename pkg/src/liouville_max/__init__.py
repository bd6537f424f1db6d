"""Maximal solutions of the Liouville equation on doubly connected domains.

``Δu + λ² e^u = 0`` in Ω, ``u = 0`` on ∂Ω. The package builds the conformal
reference annulus and free boundary, the matched inner/outer approximation,
the modulation system, and a spectral Newton solver with an exact radial
oracle for validation.
"""
from .errors import (CalibrationFailed, GeometryError, InnerRegionTooWide, InvalidDomain,
                     LiouvilleError, ModulationTooLarge, NewtonFailed, NoSolution,
                     NumericsFailure, OutOfAsymptoticRange, RequiresCompactSupport,
                     ResonanceRejected, ResonantMode0, ResonantModeN)
from .geometry import (AnnulusModel, BoundaryCurve, ConformalMap, DoublyConnectedDomain,
                       FreeBoundary, build_conformal_map, conformal_modulus, free_boundary,
                       normal_balance_defect)
from .harmonic import harmonic_measure, matching_defects, outer_w0
from .profile import bubble_1d, bubble_2d, modulation_shapes, scaling_params
from .solver import (ExactRadial, PolarDiscretization, SolverConstants, assemble_u0,
                     exact_radial, newton_solve, nonradial_branch, radial_branches, residual,
                     residual_scaling_study, validate_theorem)

__version__ = "0.1.0"
