"""Rate-distortion-perception functions of finite sources.

The solver works on the Wasserstein-barycenter form of the problem, where
the reconstruction marginal is coupled to the source by a channel and by a
perception transport plan, and alternates closed-form Sinkhorn scalings
with scalar root-finds for the multipliers.

>>> import numpy as np
>>> from wbrdp import RdpProblem, binary_source, tv_perception, solve
>>> problem = RdpProblem(binary_source(0.1), 1 - np.eye(2), 0.05, tv_perception(2, 0.06))
>>> round(solve(problem).rate, 4)
0.1266
"""

from .core import (
    DiscreteDistribution,
    binary_entropy,
    entropy,
    entropy_of_plan,
    expected_cost,
    kl_divergence,
    mutual_information,
    nats_to_bits,
)
from .errors import (
    DegenerateMarginalError,
    DegenerateStateError,
    GridMismatchError,
    InfeasibleProblemError,
    InfiniteDivergenceError,
    InvalidInputError,
    InvalidParameterError,
    NumericalStabilityError,
    SourceFormatError,
)
from .oracle import (
    OracleResult,
    brute_force_wbm_rdp,
    closed_form_binary_tv,
    closed_form_gaussian_w2,
)
from .perception import (
    PerceptionSpec,
    evaluate_perception,
    exact_ot_cost,
    kl_perception,
    ot_cost_indicator,
    ot_cost_squared_distance,
    tv_perception,
    w2_perception,
)
from .solver import (
    RdpProblem,
    RdpSolution,
    ResidualReport,
    SolverState,
    kkt_residuals,
    solve,
    solve_kl_variant,
    solve_rd,
)
from .sources import (
    SourceSpec,
    binary_source,
    dump_source,
    gaussian_source,
    source_from_file,
)

__version__ = "0.1.0"
