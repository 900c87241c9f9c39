"""Seeded episode simulation, batch experiments, and metrics.

Randomness is drawn from counter-based streams keyed by (seed, step,
channel), so adding a draw to one channel never shifts another and traces
replay byte-identically for a fixed (scenario, seed).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    STUDENT_TURN,
    TEACHER_TURN,
    DomainConfig,
    GameSpaces,
    Scenario,
    TeacherSignal,
    build_student_ipomdp,
    game_spaces,
    initial_teacher_model,
    level0_teacher_policy,
)
from .nested import (
    BranchConfig,
    InteractiveBelief,
    JointModel,
    Level0Policy,
    advance_model,
    expected_partner_physical_belief,
    interactive_belief_update,
    physical_marginal,
    solve_level_k,
    teacher_action_distribution,
)
from .planning import PlanConfig
from .pomdp import entropy_bits, marginal

THRESHOLD = 0.95

# RNG channels; one Philox stream per (seed, step, channel).
_CH_THETA = 0
_CH_ACTION = 1
_CH_TRANSITION = 2
_CH_STUDENT_OBS = 3
_CH_TEACHER_OBS = 4


def stream(seed: int, step: int, channel: int) -> np.random.Generator:
    """Counter-based generator for one draw site."""
    return np.random.Generator(
        np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, channel], counter=[step, 0, 0, 0])
    )


def _draw(probs: np.ndarray, rng: np.random.Generator) -> int:
    return int(rng.choice(len(probs), p=probs / probs.sum()))


@dataclass(frozen=True)
class StepRecord:
    step: int
    agent: str
    action: str
    true_state: str
    observation: str
    theta_belief: tuple[float, ...]
    entropy_bits: float
    nested_theta_belief: tuple[float, ...] | None = None
    q_values: dict[str, float] | None = None


@dataclass(frozen=True)
class EpisodeTrace:
    config_hash: str
    seed: int
    scenario: str
    theta: str
    hypotheses: tuple[str, ...]
    initial_theta_belief: tuple[float, ...]
    steps: tuple[StepRecord, ...]
    format: str = "trace/1"


@dataclass(frozen=True)
class Metrics:
    """time_to_threshold is the first step whose max concept posterior
    reaches 0.95 (inf when never); declare_accuracy scores the last declared
    hypothesis, falling back to the final maximum-posterior hypothesis when
    the agent never bothered to declare."""

    time_to_threshold: float
    final_entropy_bits: float
    declare_accuracy: float
    entropy_curve: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.time_to_threshold < 0:
            raise ValueError("time_to_threshold must be >= 0")
        if not 0.0 <= self.declare_accuracy <= 1.0:
            raise ValueError("declare_accuracy must lie in [0, 1]")


def config_hash(cfg: DomainConfig) -> str:
    from .formats import domain_config_to_json

    return hashlib.sha256(domain_config_to_json(cfg).encode()).hexdigest()[:16]


def _theta_marginal(ib: InteractiveBelief, sp: GameSpaces) -> np.ndarray:
    phys = physical_marginal(ib, sp.n_states)
    shape = tuple(k for _, k in sp.state_components())
    return marginal(phys, shape, (0,))


def _nested_theta(ib: InteractiveBelief, sp: GameSpaces) -> tuple[float, ...] | None:
    partner = expected_partner_physical_belief(ib, sp.n_states)
    if partner is None:
        return None
    shape = tuple(k for _, k in sp.state_components())
    return tuple(float(x) for x in marginal(partner, shape, (0,)))


def run_episode(scenario: Scenario, seed: int) -> EpisodeTrace:
    """Simulate ground truth and both agents to the horizon.

    Scripted events force that actor's action (and, for teacher events, the
    student's observation); remaining steps run the configured teacher and
    the planning student. Deterministic given (scenario, seed).
    """
    cfg = scenario.config
    sp = game_spaces(cfg)
    jm, ib = build_student_ipomdp(cfg, scenario.theta_prior)
    bc = BranchConfig()

    if scenario.true_theta is not None:
        theta = sp.hyp_labels.index(scenario.true_theta)
    else:
        if scenario.theta_prior is not None:
            prior = np.asarray(scenario.theta_prior, dtype=np.float64)
            prior = prior / prior.sum()
        else:
            prior = np.full(cfg.n_hypotheses, 1.0 / cfg.n_hypotheses)
        theta = _draw(prior, stream(seed, 0, _CH_THETA))

    turn0 = TEACHER_TURN if cfg.start_turn == "teacher" else STUDENT_TURN
    state = sp.state_index(theta, turn0, "none")

    if cfg.teacher_level == 0:
        sim_teacher = level0_teacher_policy(cfg, sp)
    else:
        sim_teacher = initial_teacher_model(cfg, sp, state)

    wait_i = sp.student_actions.index("wait")
    wait_j = sp.teacher_actions.index("wait")
    plan_cfg = PlanConfig(horizon=cfg.plan_horizon, seed=seed)

    initial_theta = tuple(float(x) for x in _theta_marginal(ib, sp))
    script = list(scenario.script)
    records: list[StepRecord] = []

    for step in range(cfg.horizon):
        _, turn, _ = sp.split_state(state)
        event = None
        if script and (
            (turn == TEACHER_TURN and script[0].actor == "teacher")
            or (turn == STUDENT_TURN and script[0].actor == "student")
        ):
            event = script.pop(0)

        q_values = None
        if turn == TEACHER_TURN:
            agent = "teacher"
            ai = wait_i
            if event is not None:
                aj = sp.teacher_actions.index(event.action)
            elif isinstance(sim_teacher, Level0Policy):
                aj = _draw(sim_teacher.rows()[state], stream(seed, step, _CH_ACTION))
            else:
                dist = teacher_action_distribution(jm, sim_teacher, state, bc)
                aj = _draw(dist, stream(seed, step, _CH_ACTION))
            action_label = sp.teacher_actions[aj]
        else:
            agent = "student"
            aj = wait_j
            if event is not None:
                ai = sp.student_actions.index(event.action)
            else:
                plan = solve_level_k(jm, ib, plan_cfg, bc)
                ai = sp.student_actions.index(plan.chosen_action)
                q_values = plan.q_values
            action_label = sp.student_actions[ai]

        next_state = _draw(jm.transition[state, ai, aj], stream(seed, step, _CH_TRANSITION))

        if event is not None and event.actor == "teacher" and event.observed is not None:
            obs_label = event.observed
        else:
            oi = _draw(jm.student_obs[next_state, aj], stream(seed, step, _CH_STUDENT_OBS))
            obs_label = sp.student_observations[oi]

        if not isinstance(sim_teacher, Level0Policy):
            oj = _draw(jm.teacher_obs[next_state, ai], stream(seed, step, _CH_TEACHER_OBS))
            sim_teacher = advance_model(jm, sim_teacher, aj, oj, bc)

        ib = interactive_belief_update(jm, ib, action_label if agent == "student" else "wait",
                                       obs_label, bc)

        theta_belief = _theta_marginal(ib, sp)
        records.append(StepRecord(
            step=step,
            agent=agent,
            action=action_label,
            true_state=sp.state_label(next_state),
            observation=obs_label,
            theta_belief=tuple(float(x) for x in theta_belief),
            entropy_bits=entropy_bits(theta_belief),
            nested_theta_belief=_nested_theta(ib, sp),
            q_values=q_values,
        ))
        state = next_state

    return EpisodeTrace(
        config_hash=config_hash(cfg),
        seed=seed,
        scenario=scenario.name,
        theta=sp.hyp_labels[theta],
        hypotheses=sp.hyp_labels,
        initial_theta_belief=initial_theta,
        steps=tuple(records),
    )


def compute_metrics(trace: EpisodeTrace) -> Metrics:
    time_to_threshold = math.inf
    for record in trace.steps:
        if max(record.theta_belief) >= THRESHOLD:
            time_to_threshold = float(record.step)
            break

    curve = (entropy_bits(np.asarray(trace.initial_theta_belief)),) + tuple(
        record.entropy_bits for record in trace.steps
    )

    declared: str | None = None
    for record in trace.steps:
        if record.agent == "student" and record.action.startswith("declare_"):
            declared = record.action.removeprefix("declare_")
    if declared is None:
        final = trace.steps[-1].theta_belief if trace.steps else trace.initial_theta_belief
        declared = trace.hypotheses[int(np.argmax(final))]
    accuracy = 1.0 if declared == trace.theta else 0.0

    final_entropy = curve[-1]
    return Metrics(
        time_to_threshold=time_to_threshold,
        final_entropy_bits=float(final_entropy),
        declare_accuracy=accuracy,
        entropy_curve=curve,
    )


def aggregate_metrics(per_seed: list[Metrics]) -> Metrics:
    if not per_seed:
        raise ValueError("need at least one episode")
    curves = np.array([m.entropy_curve for m in per_seed])
    return Metrics(
        time_to_threshold=float(np.mean([m.time_to_threshold for m in per_seed])),
        final_entropy_bits=float(np.mean([m.final_entropy_bits for m in per_seed])),
        declare_accuracy=float(np.mean([m.declare_accuracy for m in per_seed])),
        entropy_curve=tuple(float(x) for x in curves.mean(axis=0)),
    )


def run_batch(
    scenario: Scenario, n_seeds: int
) -> tuple[Metrics, list[tuple[int, Metrics]]]:
    """run_episode over seeds 0..n_seeds-1 plus the aggregate. Any episode
    error aborts the batch, naming the offending seed."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    per_seed: list[tuple[int, Metrics]] = []
    for seed in range(n_seeds):
        try:
            trace = run_episode(scenario, seed)
        except Exception as exc:
            raise RuntimeError(f"episode failed at seed {seed}: {exc}") from exc
        per_seed.append((seed, compute_metrics(trace)))
    return aggregate_metrics([m for _, m in per_seed]), per_seed


def questions_before_threshold(trace: EpisodeTrace) -> int:
    """Student questions asked strictly before the posterior first hit the
    certainty threshold (inf-threshold traces count every question)."""
    count = 0
    for record in trace.steps:
        if max(record.theta_belief) >= THRESHOLD:
            break
        if record.agent == "student" and record.action.startswith(("ask_",)):
            count += 1
    return count
