"""specfair: speculative decoding with fair token-budget scheduling, simulated exactly.

Multiple draft clients propose token blocks that one verification server
checks under a shared per-round budget. The library provides exact
speculative-sampling semantics over small synthetic models, the smoothed
acceptance/goodput estimators, a greedy gradient scheduler with baselines and
a brute-force certificate, a conditional-gradient solver for the optimal
long-run goodput allocation, and a deterministic round simulator with a
config-driven CLI.
"""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .estimators import (
    ClientEstimates,
    SmoothingParams,
    SmoothingSchedule,
    expected_goodput,
    smoothing_value,
    update_acceptance,
    update_goodput,
)
from .oracle import (
    FWSolution,
    GoodputPoint,
    RegionSpec,
    enumerate_decisions,
    goodput_vertex,
    small_instance_optimum,
    solve_fw,
    solve_optimal_goodput,
)
from .profiles import (
    LatencyParams,
    PiecewiseProfile,
    RandomWalkProfile,
    StationaryProfile,
    TokenModelProfile,
    alpha_at,
    long_run_alphas,
)
from .scheduling import (
    ScheduleDecision,
    SchedulerInput,
    brute_force_schedule,
    fixed_schedule,
    gradient_log,
    gradient_schedule,
    random_schedule,
    utility_log,
)
from .simulation import (
    ClientState,
    RoundRecord,
    empirical_average,
    iter_experiment,
    ma_smooth,
    run_experiment,
    run_round,
    sample_accepted_count,
)
from .tokens import (
    CategoricalDist,
    DistributionError,
    DraftResult,
    MarkovLM,
    VerifyOutcome,
    analytic_acceptance_rate,
    draft_sequence,
    emitted_token_oracle,
    long_run_acceptance,
    normalize,
    residual_distribution,
    sample,
    verify_speculative,
)

__version__ = "0.1.0"
