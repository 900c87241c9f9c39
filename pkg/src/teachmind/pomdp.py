"""Finite POMDP representation and exact Bayesian belief machinery.

States, actions, and observations are finite label sets; all probability
tables are dense float64 arrays. The observation model conditions on the
arrived-at state only. Every operation here is a pure function of its
arguments and every returned belief is renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelMismatch, ZeroNormalizer

# Tolerance for "rows sum to one" checks throughout the package.
STOCHASTIC_TOL = 1e-9

UTILITY_KINDS = ("neg_entropy", "neg_entropy_over_subset", "expected_state_reward")


def check_rows_stochastic(table: np.ndarray, name: str) -> None:
    if np.any(table < 0):
        raise ValueError(f"{name} has negative entries")
    sums = table.sum(axis=-1)
    if not np.allclose(sums, 1.0, rtol=0.0, atol=STOCHASTIC_TOL):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise ValueError(f"{name} rows must sum to 1 (worst deviation {worst:.3e})")


def resolve_index(key: int | str, labels: tuple[str, ...], what: str) -> int:
    """Map a label or integer index into ``labels``, bounds-checked."""
    if isinstance(key, str):
        try:
            return labels.index(key)
        except ValueError:
            raise ModelMismatch(f"unknown {what} {key!r}") from None
    idx = int(key)
    if not 0 <= idx < len(labels):
        raise ModelMismatch(f"{what} index {idx} out of range 0..{len(labels) - 1}")
    return idx


@dataclass(frozen=True, eq=False)
class Belief:
    """Probability vector over states."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("belief must be a non-empty 1-d vector")
        if np.any(probs < 0):
            raise ValueError("belief entries must be non-negative")
        if abs(float(probs.sum()) - 1.0) > STOCHASTIC_TOL:
            raise ValueError(f"belief must sum to 1, got {float(probs.sum())!r}")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return int(self.probs.size)

    @staticmethod
    def uniform(n: int) -> "Belief":
        return Belief(np.full(n, 1.0 / n))

    @staticmethod
    def delta(n: int, state: int) -> "Belief":
        probs = np.zeros(n)
        probs[state] = 1.0
        return Belief(probs)


def normalized_belief(raw: np.ndarray, context: str = "belief update") -> Belief:
    """Normalize an unnormalized non-negative vector into a Belief.

    Raises ZeroNormalizer when the total mass is zero, which signals a
    model/observation inconsistency rather than a numerical issue.
    """
    raw = np.asarray(raw, dtype=np.float64)
    total = float(raw.sum())
    if total <= 0.0:
        raise ZeroNormalizer(f"{context}: total probability mass is zero")
    return Belief(raw / total)


@dataclass(frozen=True, eq=False)
class UtilitySpec:
    """Belief-utility description.

    kind "neg_entropy": negative Shannon entropy (bits) of the belief.
    kind "neg_entropy_over_subset": negative entropy of the marginal over the
        state components selected by ``mask``; ``shape`` is the full factored
        state shape so the value is self-contained.
    kind "expected_state_reward": dot product of ``rewards`` with the belief.
    """

    kind: str
    shape: tuple[int, ...] | None = None
    mask: tuple[int, ...] | None = None
    rewards: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in UTILITY_KINDS:
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.kind == "neg_entropy_over_subset":
            if not self.shape or not self.mask:
                raise ValueError("subset utility requires shape and a non-empty mask")
            object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
            object.__setattr__(self, "mask", tuple(int(i) for i in self.mask))
            if any(n < 1 for n in self.shape):
                raise ValueError("factored shape entries must be >= 1")
            if any(not 0 <= i < len(self.shape) for i in self.mask):
                raise ValueError("mask indexes a component outside the factored shape")
            if len(set(self.mask)) != len(self.mask):
                raise ValueError("mask components must be distinct")
        if self.kind == "expected_state_reward":
            if self.rewards is None:
                raise ValueError("expected_state_reward requires a reward vector")
            rewards = np.asarray(self.rewards, dtype=np.float64)
            if rewards.ndim != 1:
                raise ValueError("reward vector must be 1-d")
            rewards = rewards.copy()
            rewards.flags.writeable = False
            object.__setattr__(self, "rewards", rewards)

    def n_states_hint(self) -> int | None:
        """State count this spec is compatible with, when determinable."""
        if self.kind == "neg_entropy_over_subset":
            return int(np.prod(self.shape))
        if self.kind == "expected_state_reward":
            return int(self.rewards.size)
        return None


@dataclass(frozen=True, eq=False)
class PomdpModel:
    """The usual finite tuple: states, actions, observations, transition,
    observation model, utility, and discount.

    transition[s, a] is the distribution over next states after doing ``a``
    in ``s``; observation_model[s'] is the distribution over observations in
    the arrived-at state ``s'`` (no action dependence).
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    observations: tuple[str, ...]
    transition: np.ndarray
    observation_model: np.ndarray
    utility: UtilitySpec
    discount: float
    state_components: tuple[tuple[str, int], ...] | None = None

    def __post_init__(self) -> None:
        states = tuple(self.states)
        actions = tuple(self.actions)
        observations = tuple(self.observations)
        if not states or not actions or not observations:
            raise ValueError("states, actions, and observations must be non-empty")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "observations", observations)

        transition = np.asarray(self.transition, dtype=np.float64)
        if transition.shape != (len(states), len(actions), len(states)):
            raise ValueError(
                f"transition shape {transition.shape} != "
                f"({len(states)}, {len(actions)}, {len(states)})"
            )
        check_rows_stochastic(transition, "transition")

        observation_model = np.asarray(self.observation_model, dtype=np.float64)
        if observation_model.shape != (len(states), len(observations)):
            raise ValueError(
                f"observation model shape {observation_model.shape} != "
                f"({len(states)}, {len(observations)})"
            )
        check_rows_stochastic(observation_model, "observation model")

        if not 0.0 <= float(self.discount) <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        object.__setattr__(self, "discount", float(self.discount))

        if self.state_components is not None:
            comps = tuple((str(n), int(k)) for n, k in self.state_components)
            if int(np.prod([k for _, k in comps])) != len(states):
                raise ValueError("state component sizes do not factor the state count")
            object.__setattr__(self, "state_components", comps)

        hint = self.utility.n_states_hint()
        if hint is not None and hint != len(states):
            raise ValueError(
                f"utility spec is sized for {hint} states, model has {len(states)}"
            )
        if self.utility.kind == "neg_entropy_over_subset" and self.state_components:
            sizes = tuple(k for _, k in self.state_components)
            if tuple(self.utility.shape) != sizes:
                raise ValueError("utility factored shape disagrees with state components")

        transition = transition.copy()
        transition.flags.writeable = False
        observation_model = observation_model.copy()
        observation_model.flags.writeable = False
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "observation_model", observation_model)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def component_index(self, component: int | str) -> int:
        if self.state_components is None:
            raise ModelMismatch("model carries no state factorization metadata")
        names = tuple(n for n, _ in self.state_components)
        return resolve_index(component, names, "state component")

    def _check_belief(self, b: Belief) -> None:
        if len(b) != self.n_states:
            raise ModelMismatch(
                f"belief has {len(b)} entries, model has {self.n_states} states"
            )


def predict(model: PomdpModel, b: Belief, a: int | str) -> Belief:
    """Push a belief through the transition model for action ``a``."""
    model._check_belief(b)
    ai = resolve_index(a, model.actions, "action")
    raw = b.probs @ model.transition[:, ai, :]
    return normalized_belief(raw, "predict")


def belief_update(model: PomdpModel, b: Belief, a: int | str, o: int | str) -> Belief:
    """Recursive Bayes update: condition the predicted belief on observation ``o``."""
    model._check_belief(b)
    ai = resolve_index(a, model.actions, "action")
    oi = resolve_index(o, model.observations, "observation")
    predicted = b.probs @ model.transition[:, ai, :]
    raw = model.observation_model[:, oi] * predicted
    return normalized_belief(raw, f"observation {model.observations[oi]!r}")


def observation_likelihood(model: PomdpModel, b: Belief, a: int | str) -> np.ndarray:
    """Distribution over next observations given belief and action."""
    model._check_belief(b)
    ai = resolve_index(a, model.actions, "action")
    predicted = b.probs @ model.transition[:, ai, :]
    return predicted @ model.observation_model


def entropy_bits(b: Belief | np.ndarray) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    probs = b.probs if isinstance(b, Belief) else np.asarray(b, dtype=np.float64)
    positive = probs[probs > 0.0]
    value = float(-(positive * np.log2(positive)).sum())
    return 0.0 if value == 0.0 else value


def marginal(probs: np.ndarray, shape: tuple[int, ...], mask: tuple[int, ...]) -> np.ndarray:
    """Marginal of a flat joint distribution over the masked components."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size != int(np.prod(shape)):
        raise ModelMismatch(
            f"mask incompatible with state factorization: vector of size "
            f"{probs.size} does not reshape to {shape}"
        )
    joint = probs.reshape(shape)
    drop = tuple(i for i in range(len(shape)) if i not in mask)
    marg = joint.sum(axis=drop) if drop else joint
    # Re-order axes to the mask's order before flattening.
    kept = tuple(i for i in range(len(shape)) if i in mask)
    order = tuple(kept.index(i) for i in mask)
    return np.transpose(marg, order).reshape(-1)


def utility_eval(spec: UtilitySpec, b: Belief) -> float:
    """Evaluate a belief utility."""
    if spec.kind == "neg_entropy":
        return -entropy_bits(b)
    if spec.kind == "neg_entropy_over_subset":
        return -entropy_bits(marginal(b.probs, spec.shape, spec.mask))
    if spec.rewards.size != len(b):
        raise ModelMismatch(
            f"reward vector has {spec.rewards.size} entries, belief has {len(b)}"
        )
    return float(spec.rewards @ b.probs)
