"""Laplace-transform function spaces, contour sums and exponential fitting."""

__version__ = "0.1.0"

from .errors import (CertificateError, ConvergenceError, DomainError, EntireLaplaceError,
                     InsufficientShift, ParameterError)
from .geometry import Box, Rectangle
from .expr import (CompactBump, Combination, Damped, Dilated, ExpSum, FunctionExpr, Mollified,
                   PowerDecay, SineModulated, Windowed, damp, dilate, evaluate, evaluate_deriv,
                   exp_atom, from_dict, from_json, mollify, sine_modulate, tilde_exp, to_json,
                   window)
from .laplace import (NormReport, boundary_trace, check_monotone_margin, direct_laplace,
                      e_zeta_norm_bound, laplace, rect_sup_norm, stieltjes_transform,
                      sup_deriv_norm, v_norm)
from .contour import (ContourSpec, build_gamma, cauchy_check, choose_truncation,
                      contour_to_expsum, holomorphy_defect, ray_tail_bound)
from .fit import (FitResult, NodeSet, certify, density_demo, fit_coefficients, node_grid,
                  verify_certificate)
from .tauberian import (LogDecay, ProbeReport, WITransfer, lb_membership_M, make_lb,
                        remainder_probe, wiener_ikehara_transfer)
