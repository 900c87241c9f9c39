"""Sampled approximations of flat and interactive beliefs.

Bootstrap filtering with systematic resampling triggered when the effective
sample size drops below half the particle count. Interactive particles carry
exact teacher models; when every particle shares one stateless level-0
policy the update runs fully vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelMismatch, ParticleCollapse
from .nested import (
    AgentModel,
    InteractiveBelief,
    JointModel,
    Level0Policy,
    _is_static,
    advance_model,
    teacher_action_distribution,
    BranchConfig,
)
from .pomdp import Belief, PomdpModel


@dataclass(eq=False)
class ParticleSet:
    """States, weights, and the generator state they were produced with.

    ``models`` is None in flat mode, a single shared stateless policy for the
    vectorized interactive mode, or one model per particle in general.
    """

    states: np.ndarray
    weights: np.ndarray
    rng: np.random.Generator
    n_states: int
    state_components: tuple[tuple[str, int], ...] | None = None
    models: AgentModel | list[AgentModel] | None = None

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.states.ndim != 1 or self.states.size == 0:
            raise ValueError("particle set needs at least one particle")
        if self.weights.shape != self.states.shape:
            raise ValueError("weights and particles disagree in length")
        if np.any(self.weights < 0):
            raise ValueError("particle weights must be non-negative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValueError("particle weights must sum to 1")
        if isinstance(self.models, list) and len(self.models) != self.states.size:
            raise ValueError("per-particle models must match the particle count")

    @property
    def size(self) -> int:
        return int(self.states.size)


def effective_sample_size(weights: np.ndarray) -> float:
    return float(1.0 / np.square(weights).sum())


def systematic_resample(
    weights: np.ndarray, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Indices resampled on an evenly spaced grid with one random offset.

    Guarantees each index appears floor(size * w) or ceil(size * w) times.
    """
    weights = np.asarray(weights, dtype=np.float64)
    size = weights.size if size is None else size
    positions = (np.arange(size) + rng.random()) / size
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0  # guard against float shortfall at the top
    return np.searchsorted(cumulative, positions, side="right").astype(np.int64)


def pf_init(
    model: PomdpModel | JointModel,
    initial_belief: Belief | InteractiveBelief,
    M: int,
    seed: int,
) -> ParticleSet:
    """Draw M particles i.i.d. from the initial belief, uniform weights."""
    if M < 1:
        raise ValueError("particle count must be >= 1")
    rng = np.random.default_rng(seed)
    weights = np.full(M, 1.0 / M)

    if isinstance(model, PomdpModel):
        if not isinstance(initial_belief, Belief):
            raise TypeError("flat models take a flat Belief")
        states = rng.choice(model.n_states, size=M, p=initial_belief.probs)
        return ParticleSet(states, weights, rng, model.n_states, model.state_components)

    if not isinstance(initial_belief, InteractiveBelief):
        raise TypeError("joint models take an InteractiveBelief")
    picks = rng.choice(len(initial_belief), size=M, p=initial_belief.weights)
    states = np.array([initial_belief.branches[i].physical for i in picks])
    branch_models = [initial_belief.branches[i].teacher_model for i in picks]
    first = initial_belief.branches[0].teacher_model
    shared = _is_static(first) and all(m is first for m in branch_models)
    return ParticleSet(
        states,
        weights,
        rng,
        model.n_states,
        model.state_components,
        models=first if shared else branch_models,
    )


def _sample_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row, vectorized."""
    cumulative = np.cumsum(rows, axis=1)
    cumulative[:, -1] = 1.0
    u = rng.random(rows.shape[0])
    return (u[:, None] < cumulative).argmax(axis=1).astype(np.int64)


def _maybe_resample(ps: ParticleSet, raw_weights: np.ndarray) -> ParticleSet:
    total = float(raw_weights.sum())
    if total <= 0.0:
        raise ParticleCollapse("observation has probability zero under every particle")
    weights = raw_weights / total
    if effective_sample_size(weights) < ps.size / 2.0:
        idx = systematic_resample(weights, ps.rng)
        ps.states = ps.states[idx]
        if isinstance(ps.models, list):
            ps.models = [ps.models[i] for i in idx]
        ps.weights = np.full(ps.size, 1.0 / ps.size)
    else:
        ps.weights = weights
    return ps


def pf_update(
    ps: ParticleSet,
    model: PomdpModel | JointModel,
    a_i: int | str,
    o_i: int | str,
    branch_cfg: BranchConfig | None = None,
) -> ParticleSet:
    """Bootstrap step: propagate, weight by the observation likelihood,
    resample when the effective sample size halves. Consumes the set's
    generator state; deterministic given it."""
    if isinstance(model, PomdpModel):
        if ps.models is not None:
            raise ModelMismatch("interactive particle set updated with a flat model")
        ai = model.actions.index(a_i) if isinstance(a_i, str) else int(a_i)
        oi = model.observations.index(o_i) if isinstance(o_i, str) else int(o_i)
        next_states = _sample_rows(model.transition[ps.states, ai, :], ps.rng)
        raw = ps.weights * model.observation_model[next_states, oi]
        ps.states = next_states
        return _maybe_resample(ps, raw)

    jm = model
    ai = jm.student_action_index(a_i)
    oi = jm.student_observation_index(o_i)

    if ps.models is None:
        raise ModelMismatch("flat particle set updated with a joint model")

    if isinstance(ps.models, list):
        cfg = branch_cfg or BranchConfig()
        next_states = np.empty(ps.size, dtype=np.int64)
        raw = np.empty(ps.size)
        new_models: list[AgentModel] = []
        for k in range(ps.size):
            s = int(ps.states[k])
            m = ps.models[k]
            pj = teacher_action_distribution(jm, m, s, cfg)
            aj = int(ps.rng.choice(len(pj), p=pj / pj.sum()))
            sp = int(ps.rng.choice(jm.n_states, p=jm.transition[s, ai, aj]))
            raw[k] = ps.weights[k] * jm.student_obs[sp, aj, oi]
            oj = int(ps.rng.choice(len(jm.teacher_observations), p=jm.teacher_obs[sp, ai]))
            if _is_static(m):
                new_models.append(m)
            else:
                new_models.append(advance_model(jm, m, aj, oj, cfg))
            next_states[k] = sp
        ps.states = next_states
        ps.models = new_models
        return _maybe_resample(ps, raw)

    # Shared stateless policy: fully vectorized.
    policy: Level0Policy = ps.models
    actions_j = _sample_rows(policy.rows()[ps.states], ps.rng)
    next_states = _sample_rows(jm.transition[ps.states, ai, actions_j, :], ps.rng)
    raw = ps.weights * jm.student_obs[next_states, actions_j, oi]
    ps.states = next_states
    return _maybe_resample(ps, raw)


def pf_marginal(ps: ParticleSet, component: int | str | None = None) -> Belief:
    """Weight-summed histogram over a state component (or the full state)."""
    if component is None or component == "state":
        values = ps.states
        size = ps.n_states
    else:
        if ps.state_components is None:
            raise ModelMismatch("particle set carries no state factorization")
        names = tuple(n for n, _ in ps.state_components)
        if isinstance(component, str):
            if component not in names:
                raise ModelMismatch(f"unknown state component {component!r}")
            axis = names.index(component)
        else:
            axis = int(component)
            if not 0 <= axis < len(names):
                raise ModelMismatch(f"state component index {axis} out of range")
        sizes = tuple(k for _, k in ps.state_components)
        values = np.unravel_index(ps.states, sizes)[axis]
        size = sizes[axis]
    histogram = np.zeros(size)
    np.add.at(histogram, values, ps.weights)
    return Belief(histogram / histogram.sum())
