"""Brute-force expectimax ground truth for the planners.

Everything here is a deliberate re-implementation in plain Python loops: it
shares the package's data types but none of the planner or belief-update code
paths, so agreement between the two routes is a meaningful check. No pruning,
no branch caps, no reductions: every action, observation, and teacher-action
branch is enumerated (zero-probability branches contribute nothing and are
skipped arithmetically).

Guard rails keep it honest about scale: at most 32 states and horizon 4.
"""

from __future__ import annotations

import math
from weakref import WeakKeyDictionary

import numpy as np

from .nested import (
    InteractiveBelief,
    InteractiveState,
    JointModel,
    Level0Policy,
    LevelKModel,
)
from .pomdp import Belief, PomdpModel, UtilitySpec

MAX_STATES = 32
MAX_HORIZON = 4

_TIE_ATOL = 1e-9

# (state, teacher model, weight) triples; the oracle's working belief form.
_Branches = list[tuple[int, object, float]]

_SWAP_CACHE: "WeakKeyDictionary[JointModel, dict]" = WeakKeyDictionary()


def _guard(n_states: int, horizon: int) -> None:
    if n_states > MAX_STATES:
        raise ValueError(
            f"oracle refuses to run: {n_states} states exceeds the {MAX_STATES}-state guard"
        )
    if horizon > MAX_HORIZON:
        raise ValueError(
            f"oracle refuses to run: horizon {horizon} exceeds the {MAX_HORIZON}-step guard"
        )


def _terminal(spec: UtilitySpec, probs: list[float]) -> float:
    """Belief utility, re-derived with scalar loops."""
    if spec.kind == "expected_state_reward":
        rewards = spec.rewards.tolist()
        return sum(r * p for r, p in zip(rewards, probs))
    if spec.kind == "neg_entropy_over_subset":
        shape = spec.shape
        sizes = [1] * len(shape)
        for axis in range(len(shape) - 2, -1, -1):
            sizes[axis] = sizes[axis + 1] * shape[axis + 1]
        marg: dict[tuple[int, ...], float] = {}
        for flat, p in enumerate(probs):
            key = tuple((flat // sizes[axis]) % shape[axis] for axis in spec.mask)
            marg[key] = marg.get(key, 0.0) + p
        values = list(marg.values())
    else:
        values = probs
    entropy = 0.0
    for p in values:
        if p > 0.0:
            entropy -= p * math.log2(p)
    return -entropy


# --- flat models --------------------------------------------------------------


def _flat_q(model: PomdpModel, probs: list[float], horizon: int) -> dict[str, float]:
    n_s = len(model.states)
    n_a = len(model.actions)
    n_o = len(model.observations)
    transition = model.transition.tolist()
    obs_model = model.observation_model.tolist()
    gamma = model.discount

    def action_ev(b: list[float], a: int, steps: int) -> float:
        predicted = [
            sum(transition[s][a][sp] * b[s] for s in range(n_s)) for sp in range(n_s)
        ]
        total = 0.0
        for o in range(n_o):
            posterior = [obs_model[sp][o] * predicted[sp] for sp in range(n_s)]
            mass = sum(posterior)
            if mass <= 0.0:
                continue
            total += mass * value([p / mass for p in posterior], steps)
        return total

    def value(b: list[float], steps: int) -> float:
        reward = _terminal(model.utility, b)
        if steps == 0 or gamma == 0.0:
            return reward
        best = None
        for a in range(n_a):
            ev = action_ev(b, a, steps - 1)
            if best is None or ev > best:
                best = ev
        return reward + gamma * best

    reward = _terminal(model.utility, probs)
    q: dict[str, float] = {}
    for a, label in enumerate(model.actions):
        if horizon == 0 or gamma == 0.0:
            q[label] = reward
        else:
            q[label] = reward + gamma * action_ev(probs, a, horizon - 1)
    return q


# --- interactive enumeration ---------------------------------------------------


def _swapped(jm: JointModel, model: LevelKModel) -> JointModel:
    """The joint dynamics from the modeled agent's side (cached only to skip
    re-validating identical tables; the swap itself is pure reindexing)."""
    cache = _SWAP_CACHE.setdefault(jm, {})
    key = model.frame._content_key
    found = cache.get(key)
    if found is None:
        found = JointModel(
            states=jm.states,
            student_actions=jm.teacher_actions,
            teacher_actions=jm.student_actions,
            student_observations=jm.teacher_observations,
            teacher_observations=jm.student_observations,
            transition=jm.transition.swapaxes(1, 2),
            student_obs=model.frame.observation_model,
            teacher_obs=jm.student_obs,
            student_utility=model.frame.utility,
            discount=model.frame.discount,
            state_components=jm.state_components,
        )
        cache[key] = found
    return found


def _advance_l0(model: Level0Policy, own_obs: int) -> Level0Policy:
    if model.obs_to_counterpart is None:
        return model
    seen = int(model.obs_to_counterpart[own_obs])
    if seen < 0 or seen + 1 == model.last_seen:
        return model
    return Level0Policy(model.table, model.obs_to_counterpart, seen + 1)


def _as_branches(ib: InteractiveBelief) -> _Branches:
    return [
        (b.physical, b.teacher_model, float(w))
        for b, w in zip(ib.branches, ib.weights)
    ]


def _dedup(raw: _Branches) -> _Branches:
    slots: dict[tuple[int, int], int] = {}
    out: _Branches = []
    for s, m, w in raw:
        key = (s, id(m))
        at = slots.get(key)
        if at is None:
            slots[key] = len(out)
            out.append((s, m, w))
        else:
            out[at] = (s, m, out[at][2] + w)
    return out


def _phys(branches: _Branches, n_s: int) -> list[float]:
    probs = [0.0] * n_s
    for s, _, w in branches:
        probs[s] += w
    return probs


def _teacher_dist(jm: JointModel, model, s: int) -> list[float]:
    """Level-0: table row. Level-k: argmax of the agent's own oracle solve,
    uniform over ties."""
    if isinstance(model, Level0Policy):
        return model.table[s, model.last_seen, :].tolist()
    q = _interactive_q(_swapped(jm, model), _as_branches(model.belief), model.plan_cfg.horizon)
    values = [q[a] for a in model.frame.actions]
    top = max(values)
    ties = [1.0 if abs(v - top) <= _TIE_ATOL else 0.0 for v in values]
    k = sum(ties)
    return [t / k for t in ties]


def _advance_model(jm: JointModel, model, own_action: int, own_obs: int):
    """The modeled agent's own Bayes step; None when the pair is impossible
    under its belief."""
    if isinstance(model, Level0Policy):
        return _advance_l0(model, own_obs)
    swapped = _swapped(jm, model)
    per_obs = _expand(swapped, _as_branches(model.belief), own_action)
    raw = per_obs[own_obs]
    mass = sum(w for _, _, w in raw)
    if mass <= 0.0:
        return None
    belief = InteractiveBelief(
        tuple(InteractiveState(s, m) for s, m, _ in raw),
        np.array([w / mass for _, _, w in raw]),
    )
    return LevelKModel(model.level, model.frame, belief, model.plan_cfg)


def _expand(jm: JointModel, branches: _Branches, ai: int) -> list[_Branches]:
    """Full (teacher action, next state, teacher observation) enumeration of
    one step; returns unnormalized successors per student observation, so the
    mass under observation o equals P(o | belief, ai)."""
    transition = jm.transition
    student_obs = jm.student_obs
    teacher_obs = jm.teacher_obs
    per_obs: list[_Branches] = [[] for _ in range(len(jm.student_observations))]
    for s, model, w in branches:
        pj = _teacher_dist(jm, model, s)
        static = isinstance(model, Level0Policy) and model.obs_to_counterpart is None
        for aj, p_aj in enumerate(pj):
            if p_aj <= 0.0:
                continue
            for sp in range(len(jm.states)):
                p_sp = float(transition[s, ai, aj, sp])
                if p_sp <= 0.0:
                    continue
                base = w * p_aj * p_sp
                if static:
                    successors = [(model, base)]
                else:
                    successors = []
                    for oj in range(len(jm.teacher_observations)):
                        p_oj = float(teacher_obs[sp, ai, oj])
                        if p_oj <= 0.0:
                            continue
                        advanced = _advance_model(jm, model, aj, oj)
                        if advanced is None:
                            continue
                        successors.append((advanced, base * p_oj))
                for oi in range(len(jm.student_observations)):
                    like = float(student_obs[sp, aj, oi])
                    if like <= 0.0:
                        continue
                    for advanced, mass in successors:
                        per_obs[oi].append((sp, advanced, mass * like))
    return [_dedup(obs) for obs in per_obs]


def enumerate_update(
    jm: JointModel, ib: InteractiveBelief, a_i: int | str, o_i: int | str
) -> InteractiveBelief:
    """The nested Bayes step by exhaustive enumeration (no pruning, exact
    duplicates collapsed); the ground truth for interactive_belief_update."""
    _guard(len(jm.states), 0)
    ai = jm.student_action_index(a_i)
    oi = jm.student_observation_index(o_i)
    raw = _expand(jm, _as_branches(ib), ai)[oi]
    mass = sum(w for _, _, w in raw)
    if mass <= 0.0:
        raise ValueError("observation has probability zero under every branch")
    return InteractiveBelief(
        tuple(InteractiveState(s, m) for s, m, _ in raw),
        np.array([w / mass for _, _, w in raw]),
    )


def _interactive_q(jm: JointModel, branches: _Branches, horizon: int) -> dict[str, float]:
    n_s = len(jm.states)
    gamma = jm.discount

    def action_ev(view: _Branches, ai: int, steps: int) -> float:
        per_obs = _expand(jm, view, ai)
        total = 0.0
        for raw in per_obs:
            mass = sum(w for _, _, w in raw)
            if mass <= 0.0:
                continue
            child = [(s, m, w / mass) for s, m, w in raw]
            total += mass * value(child, steps)
        return total

    def value(view: _Branches, steps: int) -> float:
        reward = _terminal(jm.student_utility, _phys(view, n_s))
        if steps == 0 or gamma == 0.0:
            return reward
        best = None
        for ai in range(len(jm.student_actions)):
            ev = action_ev(view, ai, steps - 1)
            if best is None or ev > best:
                best = ev
        return reward + gamma * best

    reward = _terminal(jm.student_utility, _phys(branches, n_s))
    q: dict[str, float] = {}
    for ai, label in enumerate(jm.student_actions):
        if horizon == 0 or gamma == 0.0:
            q[label] = reward
        else:
            q[label] = reward + gamma * action_ev(branches, ai, horizon - 1)
    return q


def brute_force_expectimax(
    model: PomdpModel | JointModel,
    belief: Belief | InteractiveBelief,
    horizon: int,
) -> dict[str, float]:
    """Exhaustively enumerated q-values; the ground truth for planner tests.

    At horizon 0 this is the terminal call: every action maps to R(b).
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if isinstance(model, PomdpModel):
        if not isinstance(belief, Belief):
            raise TypeError("flat models take a flat Belief")
        _guard(len(model.states), horizon)
        return _flat_q(model, belief.probs.tolist(), horizon)
    if not isinstance(belief, InteractiveBelief):
        raise TypeError("joint models take an InteractiveBelief")
    _guard(len(model.states), horizon)
    return _interactive_q(model, _as_branches(belief), horizon)


def oracle_select(
    model: PomdpModel | JointModel,
    belief: Belief | InteractiveBelief,
    horizon: int,
) -> str:
    """Argmax action under the oracle q-values, lowest index on ties."""
    q = brute_force_expectimax(model, belief, horizon)
    labels = model.actions if isinstance(model, PomdpModel) else model.student_actions
    best = max(q[a] for a in labels)
    for label in labels:
        if q[label] >= best - _TIE_ATOL:
            return label
    raise AssertionError("unreachable")
