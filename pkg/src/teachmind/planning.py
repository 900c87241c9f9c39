"""Finite-horizon expected-utility search over beliefs.

The tree alternates maximization at action branches with expectation at
observation branches. Per-step reward R(b) is collected at every level and
the recursion terminates with the bare belief utility at the horizon:

    EU(b, 0) = R(b)
    EU(b, k) = R(b) + gamma * max_a sum_o P(o | b, a) * EU(b', k - 1)
    Q(b, a)  = R(b) + gamma * sum_o P(o | b, a) * EU(b', horizon - 1)

Action selection is argmax_a Q(b, a) with ties broken by the lowest action
index. Zero-probability observation branches are skipped outright; when an
observation branch cap is set, only the most likely branches are kept and
their probabilities renormalized before the expectation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pomdp import (
    Belief,
    PomdpModel,
    normalized_belief,
    utility_eval,
)


@dataclass(frozen=True)
class PlanConfig:
    """Search controls for the belief-tree planner.

    ``seed`` namespaces any sampling a planner variant might do; the v1
    planner is fully deterministic (top-k branch truncation, no sampling),
    so it is carried but unused.
    """

    horizon: int
    discount_override: float | None = None
    observation_branch_cap: int | None = None
    action_priority: tuple[str, ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.observation_branch_cap is not None and self.observation_branch_cap < 1:
            raise ValueError("observation branch cap must be >= 1 when present")
        if self.action_priority is not None:
            object.__setattr__(self, "action_priority", tuple(self.action_priority))
        if self.discount_override is not None and not 0.0 <= self.discount_override <= 1.0:
            raise ValueError("discount override must lie in [0, 1]")


@dataclass(frozen=True)
class PlanResult:
    chosen_action: str
    q_values: dict[str, float]
    nodes_expanded: int
    branches_pruned: int


@dataclass
class _Counters:
    nodes: int = 0
    pruned: int = 0


def _discount(model: PomdpModel, cfg: PlanConfig) -> float:
    return model.discount if cfg.discount_override is None else cfg.discount_override


def _action_order(model: PomdpModel, cfg: PlanConfig) -> list[int]:
    """Search order over action indices; a heuristic only, never the argmax."""
    if cfg.action_priority is None:
        return list(range(len(model.actions)))
    order = []
    for label in cfg.action_priority:
        idx = model.actions.index(label) if label in model.actions else None
        if idx is not None and idx not in order:
            order.append(idx)
    order.extend(i for i in range(len(model.actions)) if i not in order)
    return order


def _kept_branches(
    probs: np.ndarray, cap: int | None, counters: _Counters
) -> tuple[np.ndarray, np.ndarray]:
    """Observation indices to expand and their (renormalized) weights."""
    positive = np.flatnonzero(probs > 0.0)
    if cap is None or positive.size <= cap:
        return positive, probs[positive]
    # Stable sort keeps the lowest observation index among equal likelihoods.
    ranked = positive[np.argsort(-probs[positive], kind="stable")]
    kept = np.sort(ranked[:cap])
    counters.pruned += positive.size - cap
    weights = probs[kept]
    return kept, weights / weights.sum()


def _action_value(
    model: PomdpModel,
    probs: np.ndarray,
    ai: int,
    steps_remaining: int,
    cfg: PlanConfig,
    gamma: float,
    counters: _Counters,
) -> float:
    """sum_o P(o | b, a) * EU(b', steps_remaining) for one action."""
    predicted = probs @ model.transition[:, ai, :]
    obs_probs = predicted @ model.observation_model
    kept, weights = _kept_branches(obs_probs, cfg.observation_branch_cap, counters)
    total = 0.0
    for oi, weight in zip(kept, weights):
        posterior = model.observation_model[:, oi] * predicted
        posterior = posterior / posterior.sum()
        total += weight * _eu(model, posterior, steps_remaining, cfg, gamma, counters)
    return total


def _eu(
    model: PomdpModel,
    probs: np.ndarray,
    steps_remaining: int,
    cfg: PlanConfig,
    gamma: float,
    counters: _Counters,
) -> float:
    reward = utility_eval(model.utility, Belief(probs))
    if steps_remaining == 0 or gamma == 0.0:
        return reward
    counters.nodes += 1
    best = -np.inf
    for ai in _action_order(model, cfg):
        value = _action_value(model, probs, ai, steps_remaining - 1, cfg, gamma, counters)
        if value > best:
            best = value
    return reward + gamma * best


def expected_utility(
    model: PomdpModel, b: Belief, cfg: PlanConfig, steps_remaining: int
) -> float:
    """Expected utility of ``b`` with ``steps_remaining`` search steps left."""
    if not 0 <= steps_remaining <= cfg.horizon:
        raise ValueError("steps_remaining must lie in [0, horizon]")
    model._check_belief(b)
    return _eu(model, b.probs, steps_remaining, cfg, _discount(model, cfg), _Counters())


def select_action(model: PomdpModel, b: Belief, cfg: PlanConfig) -> PlanResult:
    """Pick the maximum-expected-utility action for the current belief."""
    if not model.actions:
        raise ValueError("model has no actions")
    model._check_belief(b)
    gamma = _discount(model, cfg)
    counters = _Counters(nodes=1)
    reward = utility_eval(model.utility, b)

    values = np.empty(len(model.actions))
    for ai in _action_order(model, cfg):
        if gamma == 0.0:
            values[ai] = reward
            continue
        values[ai] = reward + gamma * _action_value(
            model, b.probs, ai, cfg.horizon - 1, cfg, gamma, counters
        )

    chosen = int(np.argmax(values))  # argmax returns the lowest index on ties
    return PlanResult(
        chosen_action=model.actions[chosen],
        q_values={label: float(values[i]) for i, label in enumerate(model.actions)},
        nodes_expanded=counters.nodes,
        branches_pruned=counters.pruned,
    )
