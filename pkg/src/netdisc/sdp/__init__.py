from .model import SdpProblem, SdpSolution, Var, herm_basis, hvec, realify
from .solver import INFEASIBLE, MAX_ITER, OPTIMAL, UNBOUNDED, StandardForm, solve_standard
from .problems import (SdpFailure, Tester, channel_min_error, comb_discrimination, diamond_norm, dh_epsilon,
                       dh_epsilon_classical, dh_epsilon_iid, dmax, dmax_channel, dmax_smooth, dmax_smooth_channel,
                       helstrom_closed_form, hypothesis_test, min_error)
