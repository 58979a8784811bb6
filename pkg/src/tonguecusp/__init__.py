"""Tongues of the sine family of degree-2 circle maps and the cusps at their tips."""

from .core import (ConvergenceError, CriticalPair, Param, ParabolicInputError,
                   SingularJacobianError, TorusPoint, critical_points, deriv_x,
                   iterate_jet, lift_eval, map_eval_w)
from .jet import Jet
from .normal_form import (CubicSplitting, NormalFormChart, alpha_beta_jacobian, build_chart,
                          cubic_discriminant, cusp_coordinates, iterate_relation_check,
                          split_roots)
from .orbits import (Cycle, attracting_cycle, find_real_periodic_points, minimal_period,
                     polish_cycle)
from .qdiff import (PolarData, RationalQD, RationalVF, build_qA, build_qB, independence_det,
                    invariance_check, polar_targets, residue_pairing, residue_sum_check,
                    tau_defect, theta_v, variation_sum, verify_dAdB)
from .tongues import (BoundaryCurve, GridRecord, TipRecord, TransversalityError,
                      boundary_pair, contact_exponent, find_tip, locate_tip, scan_grid,
                      trace_boundary)

__all__ = [name for name in dir() if not name.startswith("_")]
