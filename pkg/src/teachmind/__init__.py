"""teachmind: belief-space engine for an agent learning a concept from a
teacher it explicitly models, with nested beliefs, finite-horizon planning,
particle approximations, a concrete teaching game, a simulation harness, and
a live session service."""

__version__ = "0.1.0"

from .errors import (
    EmptyBelief,
    EngineError,
    GroundingError,
    ModelMismatch,
    ParticleCollapse,
    ZeroNormalizer,
)
from .pomdp import (
    Belief,
    PomdpModel,
    UtilitySpec,
    belief_update,
    entropy_bits,
    observation_likelihood,
    predict,
    utility_eval,
)
from .planning import PlanConfig, PlanResult, expected_utility, select_action
from .nested import (
    AgentFrame,
    BranchConfig,
    InteractiveBelief,
    InteractiveState,
    JointModel,
    Level0Policy,
    LevelKModel,
    interactive_belief_update,
    lift_flat_belief,
    physical_marginal,
    prune_merge,
    solve_level_k,
    teacher_action_distribution,
    validate_agent_model,
)
from .oracle import brute_force_expectimax

__all__ = [
    "AgentFrame",
    "Belief",
    "BranchConfig",
    "EmptyBelief",
    "EngineError",
    "GroundingError",
    "InteractiveBelief",
    "InteractiveState",
    "JointModel",
    "Level0Policy",
    "LevelKModel",
    "ModelMismatch",
    "ParticleCollapse",
    "PlanConfig",
    "PlanResult",
    "PomdpModel",
    "UtilitySpec",
    "ZeroNormalizer",
    "belief_update",
    "brute_force_expectimax",
    "entropy_bits",
    "expected_utility",
    "interactive_belief_update",
    "lift_flat_belief",
    "observation_likelihood",
    "physical_marginal",
    "predict",
    "prune_merge",
    "select_action",
    "solve_level_k",
    "teacher_action_distribution",
    "utility_eval",
    "validate_agent_model",
]
