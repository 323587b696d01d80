"""Active-inference control for linear Gaussian systems with quadratic goal priors."""

from .control import (
    GainSchedule,
    actinf_backward_step,
    actinf_gain,
    actinf_schedule,
    lqg_gain,
    lqg_schedule,
)
from .estimation import FilterState
from .gaussian import Gaussian, MatrixDims, SingularGaussianError
from .model import GoalPrior, LinearGaussianModel, benchmark_goal, benchmark_system
from .simulation import Controller, SimulationTrace, simulate, sweep_lambda

__version__ = "0.1.0"
