"""Co-design toolkit for a wireless closed-loop braking system.

Sensing fusion, finite-blocklength link rates, effective-capacity queueing
bounds, a stability-certified control cost, the joint bandwidth/error-rate/
gain optimizer, and Monte Carlo closed-loop replay of solved designs.
"""

__version__ = "0.1.0"

from .codesign import (CodesignProblem, CodesignSolution, SolverOptions,
                       evaluate_constraints, solve)
from .estimation import SensingConfig, estimation_mse, fuse, sample_observations
from .phy import (LinkConfig, LinkInfeasibleError, RATE_MODE_NORMALIZED,
                  RATE_MODE_PAPER_LITERAL, finite_blocklength_rate,
                  q_function, q_inverse)
from .plant import (GainSchedule, StabilityWeights, build_plant,
                    default_stability_weights)
from .qos import (LoopQoS, QueueQoS, TrafficModel, effective_capacity,
                  loop_metrics, max_delay)
from .simloop import SimConfig, monte_carlo, run_closed_loop, sweep

__all__ = [
    "__version__",
    "CodesignProblem", "CodesignSolution", "SolverOptions", "solve",
    "evaluate_constraints",
    "SensingConfig", "sample_observations", "fuse", "estimation_mse",
    "LinkConfig", "LinkInfeasibleError", "finite_blocklength_rate",
    "q_function", "q_inverse",
    "RATE_MODE_NORMALIZED", "RATE_MODE_PAPER_LITERAL",
    "GainSchedule", "StabilityWeights", "build_plant",
    "default_stability_weights",
    "TrafficModel", "QueueQoS", "LoopQoS", "effective_capacity",
    "loop_metrics", "max_delay",
    "SimConfig", "run_closed_loop", "monte_carlo", "sweep",
]
