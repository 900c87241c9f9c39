"""Interactive states, recursive agent models, and level-k planning.

The two-agent setting is student + teacher. The student's belief is a
weighted set of interactive states, each pairing a physical state with a
model of the teacher. Teacher models are either a level-0 stochastic policy
(the non-interactive grounding) or a level-k planner carrying its own frame
and interactive belief over the student one level down.

Field names are written from the student's perspective; inside a teacher's
own belief the ``teacher_model`` slot holds a student model.
"""

from __future__ import annotations

from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from .errors import EmptyBelief, GroundingError, ModelMismatch, ZeroNormalizer
from .planning import PlanConfig, PlanResult, _Counters, _kept_branches
from .pomdp import (
    Belief,
    UtilitySpec,
    check_rows_stochastic,
    resolve_index,
    utility_eval,
)

DEPTH_CAP_DEFAULT = 3


@dataclass(frozen=True)
class BranchConfig:
    """Branch bookkeeping for nested updates and level-k solving.

    argmax_softness > 0 replaces the strict argmax of lower-level planners
    with a softmax over q-values at that temperature; the default is strict
    (delta on the argmax, uniform over exact ties).
    """

    prune_epsilon: float = 1e-6
    merge_l1: float = 1e-9
    depth_cap: int = DEPTH_CAP_DEFAULT
    argmax_softness: float = 0.0

    def __post_init__(self) -> None:
        if self.prune_epsilon < 0 or self.merge_l1 < 0:
            raise ValueError("prune_epsilon and merge_l1 must be non-negative")
        if self.depth_cap < 1:
            raise ValueError("depth cap must be >= 1")
        if self.argmax_softness < 0:
            raise ValueError("argmax softness must be non-negative")


@dataclass(frozen=True, eq=False)
class AgentFrame:
    """The other agent's own view: actions, observations, sensing, utility.

    ``observation_model[s', a_counterpart]`` is that agent's distribution over
    its own observations in the arrived-at state, given the counterpart's
    action. Physical dynamics are shared knowledge and live on the JointModel.
    """

    actions: tuple[str, ...]
    observations: tuple[str, ...]
    observation_model: np.ndarray
    utility: UtilitySpec
    discount: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "observations", tuple(self.observations))
        om = np.asarray(self.observation_model, dtype=np.float64)
        if om.ndim != 3 or om.shape[2] != len(self.observations):
            raise ValueError("frame observation model must be (S, A_counterpart, O_own)")
        check_rows_stochastic(om, "frame observation model")
        om = om.copy()
        om.flags.writeable = False
        object.__setattr__(self, "observation_model", om)
        if not 0.0 <= float(self.discount) <= 1.0:
            raise ValueError("frame discount must lie in [0, 1]")
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "_content_key", (om.tobytes(), self.actions))


@dataclass(frozen=True, eq=False)
class Level0Policy:
    """Non-interactive grounding model: a stochastic action table.

    ``table[s, m, a_own]`` is the action distribution in physical state ``s``
    having last observed counterpart action ``m - 1`` (row 0 = nothing seen
    yet). ``obs_to_counterpart`` maps the agent's own observation index to the
    counterpart action it reveals (-1 = reveals nothing, memory unchanged);
    when it is None the policy is stateless and ``advance`` is the identity.
    """

    table: np.ndarray
    obs_to_counterpart: np.ndarray | None = None
    last_seen: int = 0

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.float64)
        if table.ndim != 3:
            raise ValueError("level-0 table must be (S, A_counterpart + 1, A_own)")
        check_rows_stochastic(table, "level-0 policy table")
        table = table.copy()
        table.flags.writeable = False
        object.__setattr__(self, "table", table)
        if not 0 <= self.last_seen < table.shape[1]:
            raise ValueError("last_seen outside the policy's memory axis")
        if self.obs_to_counterpart is not None:
            mapping = np.asarray(self.obs_to_counterpart, dtype=np.int64)
            if mapping.ndim != 1:
                raise ValueError("obs_to_counterpart must be a 1-d index vector")
            if np.any(mapping >= table.shape[1] - 1):
                raise ValueError("obs_to_counterpart maps past the memory axis")
            mapping = mapping.copy()
            mapping.flags.writeable = False
            object.__setattr__(self, "obs_to_counterpart", mapping)
        object.__setattr__(self, "_content_key", (table.tobytes(), self.last_seen))

    @property
    def level(self) -> int:
        return 0

    @property
    def stateless(self) -> bool:
        return self.obs_to_counterpart is None

    def rows(self) -> np.ndarray:
        """Action table at the current memory: shape (S, A_own)."""
        return self.table[:, self.last_seen, :]

    def advance(self, own_obs: int) -> "Level0Policy":
        if self.obs_to_counterpart is None:
            return self
        seen = int(self.obs_to_counterpart[own_obs])
        if seen < 0 or seen + 1 == self.last_seen:
            return self
        return Level0Policy(self.table, self.obs_to_counterpart, seen + 1)


@dataclass(frozen=True, eq=False)
class InteractiveState:
    """A physical state paired with a model of the other agent."""

    physical: int
    teacher_model: "AgentModel"


@dataclass(frozen=True, eq=False)
class InteractiveBelief:
    """Weighted set of interactive states.

    Duplicate-free within merge tolerance after every update; the constructor
    checks only the weight invariants (dedup is prune_merge's job).
    """

    branches: tuple[InteractiveState, ...]
    weights: np.ndarray

    def __post_init__(self) -> None:
        branches = tuple(self.branches)
        if not branches:
            raise ValueError("interactive belief needs at least one branch")
        object.__setattr__(self, "branches", branches)
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (len(branches),):
            raise ValueError("weights and branches disagree in length")
        if np.any(weights < 0):
            raise ValueError("branch weights must be non-negative")
        if abs(float(weights.sum()) - 1.0) > 1e-9:
            raise ValueError(f"branch weights must sum to 1, got {float(weights.sum())!r}")
        weights = weights.copy()
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.branches)


@dataclass(frozen=True, eq=False)
class LevelKModel:
    """A level-k planner: frame, interactive belief one level down, plan config."""

    level: int
    frame: AgentFrame
    belief: InteractiveBelief
    plan_cfg: PlanConfig

    def __post_init__(self) -> None:
        if self.level < 1:
            raise GroundingError("level-k models need level >= 1")
        for branch in self.belief.branches:
            nested = branch.teacher_model
            if nested.level != self.level - 1:
                raise GroundingError(
                    f"level-{self.level} model must nest level-{self.level - 1} "
                    f"models, found level-{nested.level}"
                )


AgentModel = Level0Policy | LevelKModel


def validate_agent_model(model: AgentModel, depth_cap: int = DEPTH_CAP_DEFAULT) -> int:
    """Walk a model chain; returns its depth, raising if it exceeds the cap
    or fails to ground out in a level-0 policy."""
    if isinstance(model, Level0Policy):
        return 0
    if not isinstance(model, LevelKModel):
        raise GroundingError(f"not an agent model: {type(model).__name__}")
    if model.level > depth_cap:
        raise GroundingError(
            f"nesting level {model.level} exceeds the depth cap {depth_cap}"
        )
    deepest = 0
    for branch in model.belief.branches:
        deepest = max(deepest, validate_agent_model(branch.teacher_model, depth_cap))
    return deepest + 1


@dataclass(frozen=True, eq=False)
class JointModel:
    """Two-agent dynamics over a shared physical state space.

    transition[s, a_i, a_j] is the next-state distribution under the joint
    action; student_obs[s', a_j] / teacher_obs[s', a_i] are each agent's
    observation distributions in the arrived-at state given the other
    agent's action.
    """

    states: tuple[str, ...]
    student_actions: tuple[str, ...]
    teacher_actions: tuple[str, ...]
    student_observations: tuple[str, ...]
    teacher_observations: tuple[str, ...]
    transition: np.ndarray
    student_obs: np.ndarray
    teacher_obs: np.ndarray
    student_utility: UtilitySpec
    discount: float
    state_components: tuple[tuple[str, int], ...] | None = None

    def __post_init__(self) -> None:
        for name in ("states", "student_actions", "teacher_actions",
                     "student_observations", "teacher_observations"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        n_s = len(self.states)
        n_ai = len(self.student_actions)
        n_aj = len(self.teacher_actions)
        n_oi = len(self.student_observations)
        n_oj = len(self.teacher_observations)
        if 0 in (n_s, n_ai, n_aj, n_oi, n_oj):
            raise ValueError("all label sets must be non-empty")

        transition = np.asarray(self.transition, dtype=np.float64)
        if transition.shape != (n_s, n_ai, n_aj, n_s):
            raise ValueError(f"joint transition shape {transition.shape} is wrong")
        check_rows_stochastic(transition, "joint transition")

        student_obs = np.asarray(self.student_obs, dtype=np.float64)
        if student_obs.shape != (n_s, n_aj, n_oi):
            raise ValueError(f"student observation model shape {student_obs.shape} is wrong")
        check_rows_stochastic(student_obs, "student observation model")

        teacher_obs = np.asarray(self.teacher_obs, dtype=np.float64)
        if teacher_obs.shape != (n_s, n_ai, n_oj):
            raise ValueError(f"teacher observation model shape {teacher_obs.shape} is wrong")
        check_rows_stochastic(teacher_obs, "teacher observation model")

        if not 0.0 <= float(self.discount) <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        object.__setattr__(self, "discount", float(self.discount))

        hint = self.student_utility.n_states_hint()
        if hint is not None and hint != n_s:
            raise ValueError("student utility is sized for a different state count")

        if self.state_components is not None:
            comps = tuple((str(n), int(k)) for n, k in self.state_components)
            if int(np.prod([k for _, k in comps])) != n_s:
                raise ValueError("state component sizes do not factor the state count")
            object.__setattr__(self, "state_components", comps)

        for name, arr in (
            ("transition", transition),
            ("student_obs", student_obs),
            ("teacher_obs", teacher_obs),
        ):
            frozen = arr.copy()
            frozen.flags.writeable = False
            object.__setattr__(self, name, frozen)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def student_action_index(self, a: int | str) -> int:
        return resolve_index(a, self.student_actions, "student action")

    def student_observation_index(self, o: int | str) -> int:
        return resolve_index(o, self.student_observations, "student observation")


_SWAP_CACHE: "WeakKeyDictionary[JointModel, dict]" = WeakKeyDictionary()


def swap_roles(jm: JointModel, frame: AgentFrame) -> JointModel:
    """The same dynamics seen from the other agent's side: its actions become
    the maximizing axis, its sensing (from the frame) the conditioning one.

    Cached per (joint model, frame content): the swap is pure reindexing and
    gets hit once per teacher solve otherwise.
    """
    if frame.observation_model.shape != jm.teacher_obs.shape:
        raise ModelMismatch("frame observation model does not fit the joint model")
    cache = _SWAP_CACHE.setdefault(jm, {})
    key = frame._content_key
    found = cache.get(key)
    if found is not None:
        return found
    swapped = _build_swapped(jm, frame)
    cache[key] = swapped
    return swapped


def _build_swapped(jm: JointModel, frame: AgentFrame) -> JointModel:
    return JointModel(
        states=jm.states,
        student_actions=jm.teacher_actions,
        teacher_actions=jm.student_actions,
        student_observations=jm.teacher_observations,
        teacher_observations=jm.student_observations,
        transition=jm.transition.swapaxes(1, 2),
        student_obs=frame.observation_model,
        teacher_obs=jm.student_obs,
        student_utility=frame.utility,
        discount=frame.discount,
        state_components=jm.state_components,
    )


def lift_flat_belief(
    physical: Belief, counterpart: AgentModel
) -> InteractiveBelief:
    """Canonicalize a flat belief into an interactive one: each support state
    becomes a branch carrying the given counterpart model."""
    support = np.flatnonzero(physical.probs > 0.0)
    branches = tuple(InteractiveState(int(s), counterpart) for s in support)
    return InteractiveBelief(branches, physical.probs[support] / physical.probs[support].sum())


def physical_marginal(ib: InteractiveBelief, n_states: int) -> np.ndarray:
    """Weight histogram over physical states."""
    out = np.zeros(n_states)
    for branch, w in zip(ib.branches, ib.weights):
        out[branch.physical] += w
    return out


def expected_partner_physical_belief(
    ib: InteractiveBelief, n_states: int
) -> np.ndarray | None:
    """The agent's expected counterpart belief over physical states
    (what the agent thinks the other agent believes). None when the
    counterpart models are level-0 and hold no belief."""
    out = np.zeros(n_states)
    for branch, w in zip(ib.branches, ib.weights):
        model = branch.teacher_model
        if isinstance(model, Level0Policy):
            return None
        out += w * physical_marginal(model.belief, n_states)
    return out


# --- merging machinery ------------------------------------------------------

def _max_state(ib: InteractiveBelief) -> int:
    """Largest physical index reachable anywhere in the nesting."""
    top = 0
    for branch in ib.branches:
        top = max(top, branch.physical)
        model = branch.teacher_model
        if isinstance(model, LevelKModel):
            top = max(top, _max_state(model.belief))
    return top


def _model_signature(model: AgentModel) -> tuple:
    """Structural key: models merge only within the same signature."""
    if isinstance(model, Level0Policy):
        return ("L0", model._content_key)
    return (
        "LK",
        model.level,
        model.frame._content_key,
        model.plan_cfg,
        frozenset(_model_signature(b.teacher_model) for b in model.belief.branches),
    )


def _model_vector(model: AgentModel, n_states: int) -> np.ndarray:
    """Canonical dense vector used for merge distance. Level-0 models are
    fully captured by their signature, so their vector is empty; level-k
    vectors are the physical marginal plus the weighted nested vectors."""
    if isinstance(model, Level0Policy):
        return np.zeros(0)
    parts = [physical_marginal(model.belief, n_states)]
    nested = None
    for branch, w in zip(model.belief.branches, model.belief.weights):
        vec = _model_vector(branch.teacher_model, n_states)
        if vec.size:
            nested = vec * w if nested is None else nested + vec * w
    if nested is not None:
        parts.append(nested)
    return np.concatenate(parts)


def _merge_models(
    a: AgentModel, wa: float, b: AgentModel, wb: float, cfg: "BranchConfig"
) -> AgentModel:
    """Weight-weighted belief averaging of two same-signature models."""
    if isinstance(a, Level0Policy):
        return a
    branches = a.belief.branches + b.belief.branches
    weights = np.concatenate([
        a.belief.weights * (wa / (wa + wb)),
        b.belief.weights * (wb / (wa + wb)),
    ])
    merged = prune_merge(
        InteractiveBelief(branches, weights / weights.sum()),
        prune_epsilon=0.0,
        merge_l1=cfg.merge_l1,
    )
    return LevelKModel(a.level, a.frame, merged, a.plan_cfg)


def prune_merge(
    ib: InteractiveBelief, prune_epsilon: float, merge_l1: float
) -> InteractiveBelief:
    """Drop sub-epsilon branches, merge near-duplicates, renormalize.

    Branches merge when they share the physical state and model structure and
    their belief vectors are within ``merge_l1`` in L1 distance.
    """
    keep = [i for i, w in enumerate(ib.weights) if w >= prune_epsilon]
    if not keep:
        raise EmptyBelief("pruning removed every branch")

    n_states = _max_state(ib) + 1
    cfg = BranchConfig(prune_epsilon=prune_epsilon, merge_l1=merge_l1)

    groups: dict[tuple, list[tuple[AgentModel, np.ndarray, float]]] = {}
    order: list[tuple] = []
    for i in keep:
        branch, w = ib.branches[i], float(ib.weights[i])
        sig = (branch.physical, _model_signature(branch.teacher_model))
        bucket = groups.setdefault(sig, [])
        if not bucket:
            order.append(sig)
        vec = _model_vector(branch.teacher_model, n_states)
        for slot, (model, ref_vec, ref_w) in enumerate(bucket):
            if vec.size == ref_vec.size and (
                vec.size == 0 or float(np.abs(vec - ref_vec).sum()) <= merge_l1
            ):
                merged = _merge_models(model, ref_w, branch.teacher_model, w, cfg)
                new_w = ref_w + w
                bucket[slot] = (merged, _model_vector(merged, n_states), new_w)
                break
        else:
            bucket.append((branch.teacher_model, vec, w))

    branches: list[InteractiveState] = []
    weights: list[float] = []
    for sig in order:
        physical = sig[0]
        for model, _, w in groups[sig]:
            branches.append(InteractiveState(physical, model))
            weights.append(w)
    weights_arr = np.asarray(weights)
    return InteractiveBelief(tuple(branches), weights_arr / weights_arr.sum())


# --- nested dynamics --------------------------------------------------------

def _is_static(model: AgentModel) -> bool:
    """True when ``advance`` is the identity for every observation."""
    return isinstance(model, Level0Policy) and model.stateless


def advance_model(
    jm: JointModel,
    model: AgentModel,
    own_action: int,
    own_obs: int,
    cfg: BranchConfig,
) -> AgentModel:
    """Advance the modeled agent's own state by its update rule.

    ``own_action``/``own_obs`` are indexed in that agent's action and
    observation spaces (i.e. the teacher's, for a teacher model). Raises
    ZeroNormalizer when the pair is impossible under the model's belief.
    """
    if isinstance(model, Level0Policy):
        return model.advance(own_obs)
    swapped = swap_roles(jm, model.frame)
    updated = interactive_belief_update(swapped, model.belief, own_action, own_obs, cfg)
    return LevelKModel(model.level, model.frame, updated, model.plan_cfg)


def teacher_action_distribution(
    jm: JointModel,
    model: AgentModel,
    context: int | Belief | np.ndarray | None = None,
    cfg: BranchConfig | None = None,
    _depth: int = 0,
) -> np.ndarray:
    """Distribution over the modeled agent's actions.

    Level-0 policies are table rows, mixed over ``context`` (a physical state
    index or belief) when state-dependent. Level-k models solve their own
    planning problem and act by strict argmax: a delta, uniform over the
    argmax set on ties (or a softmax when the config sets a softness).
    """
    cfg = cfg or BranchConfig()
    if _depth > cfg.depth_cap:
        raise GroundingError(f"model recursion exceeded depth cap {cfg.depth_cap}")
    if isinstance(model, Level0Policy):
        rows = model.rows()
        if context is None:
            raise ModelMismatch("level-0 policies need a physical state or belief context")
        if isinstance(context, (int, np.integer)):
            return rows[int(context)]
        probs = context.probs if isinstance(context, Belief) else np.asarray(context)
        return probs @ rows

    result = _solve(jm_for_model(jm, model), model.belief, model.plan_cfg, cfg, _depth + 1)
    q = np.array([result.q_values[a] for a in model.frame.actions])
    if cfg.argmax_softness > 0.0:
        scaled = (q - q.max()) / cfg.argmax_softness
        exp = np.exp(scaled)
        return exp / exp.sum()
    ties = np.isclose(q, q.max(), rtol=0.0, atol=1e-9)
    return ties / ties.sum()


def jm_for_model(jm: JointModel, model: LevelKModel) -> JointModel:
    """Joint model oriented so that ``model``'s agent is the maximizer."""
    return swap_roles(jm, model.frame)


def _expand(
    jm: JointModel,
    ib: InteractiveBelief,
    a_i: int,
    cfg: BranchConfig,
    depth: int,
) -> list[list[tuple[int, AgentModel, float]]]:
    """One-step joint expansion of every branch under student action ``a_i``.

    Returns, per student observation, the unnormalized successor branches
    (physical state, advanced teacher model, joint weight). The mass under
    observation o equals P(o | ib, a_i).
    """
    n_oi = len(jm.student_observations)
    per_obs: list[list[tuple[int, AgentModel, float]]] = [[] for _ in range(n_oi)]
    for branch, w in zip(ib.branches, ib.weights):
        s = branch.physical
        model = branch.teacher_model
        pj = teacher_action_distribution(jm, model, s, cfg, depth)
        static = _is_static(model)
        for aj in np.flatnonzero(pj > 0.0):
            trans_row = jm.transition[s, a_i, aj]
            for sp in np.flatnonzero(trans_row > 0.0):
                base = w * float(pj[aj]) * float(trans_row[sp])
                successors: list[tuple[AgentModel, float]]
                if static:
                    successors = [(model, base)]
                else:
                    successors = []
                    oj_probs = jm.teacher_obs[sp, a_i]
                    for oj in np.flatnonzero(oj_probs > 0.0):
                        try:
                            advanced = advance_model(jm, model, int(aj), int(oj), cfg)
                        except ZeroNormalizer:
                            continue  # impossible under the teacher's own belief
                        successors.append((advanced, base * float(oj_probs[oj])))
                obs_likes = jm.student_obs[sp, aj]
                for oi in np.flatnonzero(obs_likes > 0.0):
                    like = float(obs_likes[oi])
                    for advanced, mass in successors:
                        per_obs[oi].append((int(sp), advanced, mass * like))
    return per_obs


def _gather(
    raw: list[tuple[int, AgentModel, float]], cfg: BranchConfig
) -> InteractiveBelief:
    """Normalize raw expansion output into a pruned, merged belief."""
    total = sum(w for _, _, w in raw)
    if total <= 0.0:
        raise ZeroNormalizer("observation has probability zero under every branch")
    # Exact-duplicate collapse first (cheap; identical model objects dominate).
    seen: dict[tuple[int, int], int] = {}
    branches: list[InteractiveState] = []
    weights: list[float] = []
    for sp, model, w in raw:
        key = (sp, id(model))
        slot = seen.get(key)
        if slot is None:
            seen[key] = len(branches)
            branches.append(InteractiveState(sp, model))
            weights.append(w / total)
        else:
            weights[slot] += w / total
    ib = InteractiveBelief(tuple(branches), np.asarray(weights))
    return prune_merge(ib, cfg.prune_epsilon, cfg.merge_l1)


def interactive_belief_update(
    jm: JointModel,
    ib: InteractiveBelief,
    a_i: int | str,
    o_i: int | str,
    cfg: BranchConfig | None = None,
) -> InteractiveBelief:
    """Nested Bayes step: expand branches over the teacher's actions and next
    states, weight by the student's observation likelihood, split over the
    teacher's observations advancing each teacher model, then prune-merge."""
    cfg = cfg or BranchConfig()
    ai = jm.student_action_index(a_i)
    oi = jm.student_observation_index(o_i)
    per_obs = _expand(jm, ib, ai, cfg, 0)
    return _gather(per_obs[oi], cfg)


# --- level-k solving --------------------------------------------------------

_REDUCTION_CACHE: "WeakKeyDictionary[JointModel, dict]" = WeakKeyDictionary()


def _reduction(jm: JointModel, policy: Level0Policy) -> np.ndarray:
    """Collapsed single-agent dynamics for a stateless level-0 teacher.

    M[a_i, s, s', o_i] = sum_aj pi(aj | s) T(s' | s, a_i, aj) O_i(o_i | s', aj),
    so a flat belief pushes through one einsum per node.
    """
    cache = _REDUCTION_CACHE.setdefault(jm, {})
    key = policy._content_key
    found = cache.get(key)
    if found is None:
        found = np.einsum(
            "sj,sajt,tjo->asto",
            policy.rows(),
            jm.transition,
            jm.student_obs,
            optimize=True,
        )
        cache[key] = found
    return found


def _shared_static_policy(ib: InteractiveBelief) -> Level0Policy | None:
    first = ib.branches[0].teacher_model
    if not _is_static(first):
        return None
    for branch in ib.branches[1:]:
        model = branch.teacher_model
        if model is not first and (
            not _is_static(model) or model._content_key != first._content_key
        ):
            return None
    return first


def _solve_reduced(
    jm: JointModel,
    probs: np.ndarray,
    dynamics: np.ndarray,
    cfg: PlanConfig,
    gamma: float,
) -> PlanResult:
    counters = _Counters(nodes=1)

    def eu(vec: np.ndarray, steps: int) -> float:
        reward = utility_eval(jm.student_utility, Belief(vec))
        if steps == 0 or gamma == 0.0:
            return reward
        counters.nodes += 1
        children = np.einsum("s,asto->ato", vec, dynamics)
        best = -np.inf
        for ai in range(children.shape[0]):
            best = max(best, branch_value(children[ai], steps - 1))
        return reward + gamma * best

    def branch_value(child: np.ndarray, steps: int) -> float:
        obs_probs = child.sum(axis=0)
        kept, weights = _kept_branches(obs_probs, cfg.observation_branch_cap, counters)
        total = 0.0
        for oi, weight in zip(kept, weights):
            total += weight * eu(child[:, oi] / child[:, oi].sum(), steps)
        return total

    reward = utility_eval(jm.student_utility, Belief(probs))
    values = np.empty(len(jm.student_actions))
    if gamma == 0.0:
        values[:] = reward
    else:
        children = np.einsum("s,asto->ato", probs, dynamics)
        for ai in range(len(jm.student_actions)):
            values[ai] = reward + gamma * branch_value(children[ai], cfg.horizon - 1)

    chosen = int(np.argmax(values))
    return PlanResult(
        chosen_action=jm.student_actions[chosen],
        q_values={a: float(values[i]) for i, a in enumerate(jm.student_actions)},
        nodes_expanded=counters.nodes,
        branches_pruned=counters.pruned,
    )


def _solve(
    jm: JointModel,
    ib: InteractiveBelief,
    cfg: PlanConfig,
    branch_cfg: BranchConfig,
    depth: int,
) -> PlanResult:
    if depth > branch_cfg.depth_cap:
        raise GroundingError(f"model recursion exceeded depth cap {branch_cfg.depth_cap}")
    gamma = jm.discount if cfg.discount_override is None else cfg.discount_override

    policy = _shared_static_policy(ib)
    if policy is not None and policy.table.shape[2] == len(jm.teacher_actions):
        probs = physical_marginal(ib, jm.n_states)
        return _solve_reduced(jm, probs, _reduction(jm, policy), cfg, gamma)

    counters = _Counters(nodes=1)

    def eu(belief: InteractiveBelief, steps: int) -> float:
        reward = utility_eval(
            jm.student_utility, Belief(physical_marginal(belief, jm.n_states))
        )
        if steps == 0 or gamma == 0.0:
            return reward
        counters.nodes += 1
        best = -np.inf
        for ai in range(len(jm.student_actions)):
            best = max(best, branch_value(belief, ai, steps - 1))
        return reward + gamma * best

    def branch_value(belief: InteractiveBelief, ai: int, steps: int) -> float:
        per_obs = _expand(jm, belief, ai, branch_cfg, depth)
        masses = np.array([sum(w for _, _, w in obs) for obs in per_obs])
        kept, weights = _kept_branches(masses, cfg.observation_branch_cap, counters)
        total = 0.0
        for oi, weight in zip(kept, weights):
            total += weight * eu(_gather(per_obs[oi], branch_cfg), steps)
        return total

    reward = utility_eval(jm.student_utility, Belief(physical_marginal(ib, jm.n_states)))
    values = np.empty(len(jm.student_actions))
    for ai in range(len(jm.student_actions)):
        if gamma == 0.0:
            values[ai] = reward
        else:
            values[ai] = reward + gamma * branch_value(ib, ai, cfg.horizon - 1)

    chosen = int(np.argmax(values))
    return PlanResult(
        chosen_action=jm.student_actions[chosen],
        q_values={a: float(values[i]) for i, a in enumerate(jm.student_actions)},
        nodes_expanded=counters.nodes,
        branches_pruned=counters.pruned,
    )


def solve_level_k(
    jm: JointModel,
    ib: InteractiveBelief,
    cfg: PlanConfig,
    branch_cfg: BranchConfig | None = None,
) -> PlanResult:
    """Expectimax over student actions and observations, with teacher actions
    marginalized out of every expansion via the branch teacher models.

    Terminal values are the student utility of the physical marginal. The
    chosen action is the argmax with the lowest-index tie-break.
    """
    for branch in ib.branches:
        validate_agent_model(branch.teacher_model, (branch_cfg or BranchConfig()).depth_cap)
    return _solve(jm, ib, cfg, branch_cfg or BranchConfig(), 0)
