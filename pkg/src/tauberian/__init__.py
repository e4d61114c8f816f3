"""Decay rates for smoothed sequences and operator orbits, computed and checked."""

from .analysis import certify_decay, check_hypotheses, epsilon_schedule, slope_estimate
from .kernels import PiecewiseLinear, Sequence, SmoothCutoff, convolve, spectral_form
from .operators import Dense, Diagonal, ShiftTrunc, SpectralCurve, orbit_decay, resolvent_norm
from .rates import (DerivedRate, ExpRate, PolyRate, Tabulated, derived_eval, eval_rate, invert_rate,
                    mk, mlog, predicted_bound, proof_budget)

__version__ = "0.1.0"
