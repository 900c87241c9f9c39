"""Small diagnostic models used by tests, scripts, and CLI demos."""

from __future__ import annotations

import numpy as np

from .pomdp import Belief, PomdpModel, UtilitySpec


def two_door_model(
    good_accuracy: float = 0.85,
    cheap_accuracy: float = 0.60,
    discount: float = 0.9,
) -> PomdpModel:
    """Two hidden states behind two listening actions of different quality.

    The hidden door never moves; the action only selects which sensing
    channel the next cue comes through, so the state is factored as
    (door, channel) and the utility scores certainty about the door alone.
    """
    states = ("left-good", "left-cheap", "right-good", "right-cheap")
    actions = ("listen-good", "listen-cheap")
    observations = ("cue-left", "cue-right")

    def idx(door: int, channel: int) -> int:
        return door * 2 + channel

    transition = np.zeros((4, 2, 4))
    for door in range(2):
        for channel in range(2):
            s = idx(door, channel)
            transition[s, 0, idx(door, 0)] = 1.0  # listen-good selects the good channel
            transition[s, 1, idx(door, 1)] = 1.0

    observation_model = np.zeros((4, 2))
    for door in range(2):
        for channel, accuracy in ((0, good_accuracy), (1, cheap_accuracy)):
            s = idx(door, channel)
            observation_model[s, door] = accuracy
            observation_model[s, 1 - door] = 1.0 - accuracy

    return PomdpModel(
        states=states,
        actions=actions,
        observations=observations,
        transition=transition,
        observation_model=observation_model,
        utility=UtilitySpec("neg_entropy_over_subset", shape=(2, 2), mask=(0,)),
        discount=discount,
        state_components=(("door", 2), ("channel", 2)),
    )


def two_door_prior() -> Belief:
    return Belief.uniform(4)


def random_pomdp(
    rng: np.random.Generator,
    n_states: int,
    n_actions: int,
    n_observations: int,
    utility_kind: str = "neg_entropy",
    identity_transition: bool = False,
    discount: float | None = None,
) -> PomdpModel:
    """Dirichlet-random model for property and oracle-agreement tests."""
    if identity_transition:
        transition = np.broadcast_to(
            np.eye(n_states)[:, None, :], (n_states, n_actions, n_states)
        ).copy()
    else:
        transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    observation_model = rng.dirichlet(np.ones(n_observations), size=n_states)
    if utility_kind == "expected_state_reward":
        utility = UtilitySpec("expected_state_reward", rewards=rng.normal(size=n_states))
    else:
        utility = UtilitySpec(utility_kind)
    return PomdpModel(
        states=tuple(f"s{i}" for i in range(n_states)),
        actions=tuple(f"a{i}" for i in range(n_actions)),
        observations=tuple(f"o{i}" for i in range(n_observations)),
        transition=transition,
        observation_model=observation_model,
        utility=utility,
        discount=float(rng.uniform(0.5, 1.0)) if discount is None else discount,
    )


def random_belief(rng: np.random.Generator, n_states: int) -> Belief:
    return Belief(rng.dirichlet(np.ones(n_states)))


def random_joint_model(
    rng: np.random.Generator,
    n_states: int = 3,
    n_student_actions: int = 2,
    n_teacher_actions: int = 2,
    n_student_obs: int = 2,
    n_teacher_obs: int = 2,
    discount: float | None = None,
):
    """Dirichlet-random two-agent dynamics for nesting tests."""
    from .nested import JointModel

    return JointModel(
        states=tuple(f"s{i}" for i in range(n_states)),
        student_actions=tuple(f"ai{i}" for i in range(n_student_actions)),
        teacher_actions=tuple(f"aj{i}" for i in range(n_teacher_actions)),
        student_observations=tuple(f"oi{i}" for i in range(n_student_obs)),
        teacher_observations=tuple(f"oj{i}" for i in range(n_teacher_obs)),
        transition=rng.dirichlet(
            np.ones(n_states), size=(n_states, n_student_actions, n_teacher_actions)
        ),
        student_obs=rng.dirichlet(
            np.ones(n_student_obs), size=(n_states, n_teacher_actions)
        ),
        teacher_obs=rng.dirichlet(
            np.ones(n_teacher_obs), size=(n_states, n_student_actions)
        ),
        student_utility=UtilitySpec("neg_entropy"),
        discount=float(rng.uniform(0.5, 1.0)) if discount is None else discount,
    )


def random_level0(
    rng: np.random.Generator,
    n_states: int,
    n_counterpart_actions: int,
    n_own_actions: int,
    n_own_obs: int | None = None,
    stateful: bool = False,
):
    """Random grounding policy; stateful variants track the counterpart's
    last action through a random observation decoder."""
    from .nested import Level0Policy

    table = rng.dirichlet(
        np.ones(n_own_actions), size=(n_states, n_counterpart_actions + 1)
    )
    if not stateful:
        return Level0Policy(table)
    decoder = rng.integers(-1, n_counterpart_actions, size=n_own_obs)
    return Level0Policy(table, obs_to_counterpart=decoder)
