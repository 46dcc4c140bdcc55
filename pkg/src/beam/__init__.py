"""Budget-aware experimental design over discrete parameter grids.

The package drives a human-in-the-loop search for feasible process
configurations: a nearest-neighbor success-probability surrogate, a
lookahead acquisition score that prices in how much each experiment would
teach the remaining budget, batch suggestion, and campaign bookkeeping with
durable JSON state.  A synthetic simulator and an HTTP service sit on top.
"""

from .acquisition import (
    POLICIES,
    POLICY_BEAM,
    POLICY_GREEDY,
    POLICY_RANDOM,
    AcquisitionScores,
    Pick,
    build_pool,
    exploration_term,
    greedy_scores,
    score_pool,
    select_batch,
)
from .campaign import (
    Campaign,
    CampaignMetrics,
    CampaignSettings,
    PendingSuggestion,
    init_lhs,
    resolve_config,
)
from .errors import (
    BeamError,
    BudgetExhausted,
    ConstraintError,
    OffGridError,
    SpaceError,
    StateError,
    StorageError,
    ValidationError,
    VersionConflict,
)
from .space import (
    AxisSpec,
    Configuration,
    ConstraintSet,
    Exclusion,
    IntervalBound,
    PairRatio,
    ParameterSpace,
    enumerate_feasible,
)
from .surrogate import (
    ORIGIN_MANUAL,
    ORIGIN_SEED,
    ORIGIN_SUGGESTED,
    Dataset,
    Observation,
    SurrogateModel,
    predict,
    predict_with_hypothetical,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # space
    "AxisSpec",
    "Configuration",
    "ParameterSpace",
    "IntervalBound",
    "Exclusion",
    "PairRatio",
    "ConstraintSet",
    "enumerate_feasible",
    # surrogate
    "SurrogateModel",
    "Dataset",
    "Observation",
    "predict",
    "predict_with_hypothetical",
    "ORIGIN_SEED",
    "ORIGIN_SUGGESTED",
    "ORIGIN_MANUAL",
    # acquisition
    "AcquisitionScores",
    "Pick",
    "score_pool",
    "greedy_scores",
    "exploration_term",
    "select_batch",
    "build_pool",
    "POLICIES",
    "POLICY_BEAM",
    "POLICY_GREEDY",
    "POLICY_RANDOM",
    # campaign
    "Campaign",
    "CampaignSettings",
    "CampaignMetrics",
    "PendingSuggestion",
    "init_lhs",
    "resolve_config",
    # errors
    "BeamError",
    "SpaceError",
    "OffGridError",
    "ConstraintError",
    "ValidationError",
    "StateError",
    "BudgetExhausted",
    "VersionConflict",
    "StorageError",
]
