"""Finite- and fixed-time stable optimization flows by state-dependent scaling."""
from ._backend import BACKEND
from .field import LyapunovConstants, VectorField, eval_field, linear_field, shift_to_origin
from .flows import (CompositeProblem, ConstrainedProblem, genlag_field, genlag_penalty,
                    gradient_flow, pal_field)
from .integrate import IntegrateOptions, Trajectory, integrate, path_distance, settling_time
from .proximal import L1, ZERO, ProxFunction, moreau_grad, moreau_value, prox_l1
from .scaling import (ScalingParams, SettlingBound, finite_scale, fixed_scale, lemma2_bound,
                      lemma3_bound, thm1_bound, thm2_bound)

__version__ = "0.1.0"
