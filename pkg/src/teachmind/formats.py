"""JSON, JSONL, and CSV format codecs.

Format versions: "pomdp/1" (flat models), "ipomdp/1" (joint models plus an
optional serialized interactive belief), "teachdomain/1" (domain configs and
scenario files), "trace/1" (episode traces, one JSON object per line with a
header line first). All floats round-trip exactly through repr.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

import numpy as np

from .domain import DomainConfig, NoiseConfig, Scenario, ScriptEvent
from .episodes import EpisodeTrace, Metrics, StepRecord
from .errors import ModelMismatch
from .nested import (
    AgentFrame,
    AgentModel,
    InteractiveBelief,
    InteractiveState,
    JointModel,
    Level0Policy,
    LevelKModel,
)
from .planning import PlanConfig
from .pomdp import Belief, PomdpModel, UtilitySpec

POMDP_FORMAT = "pomdp/1"
IPOMDP_FORMAT = "ipomdp/1"
DOMAIN_FORMAT = "teachdomain/1"
TRACE_FORMAT = "trace/1"


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _require_format(obj: dict, expected: str) -> None:
    found = obj.get("format")
    if found != expected:
        raise ModelMismatch(f"expected format {expected!r}, found {found!r}")


# --- utility specs -----------------------------------------------------------

def utility_to_obj(spec: UtilitySpec) -> dict:
    obj: dict[str, Any] = {"kind": spec.kind}
    if spec.kind == "neg_entropy_over_subset":
        obj["shape"] = list(spec.shape)
        obj["mask"] = list(spec.mask)
    if spec.kind == "expected_state_reward":
        obj["rewards"] = spec.rewards.tolist()
    return obj


def utility_from_obj(obj: dict) -> UtilitySpec:
    kind = obj["kind"]
    if kind == "neg_entropy_over_subset":
        return UtilitySpec(kind, shape=tuple(obj["shape"]), mask=tuple(obj["mask"]))
    if kind == "expected_state_reward":
        return UtilitySpec(kind, rewards=np.asarray(obj["rewards"]))
    return UtilitySpec(kind)


# --- flat models -------------------------------------------------------------

def model_to_obj(model: PomdpModel) -> dict:
    obj = {
        "format": POMDP_FORMAT,
        "states": list(model.states),
        "actions": list(model.actions),
        "observations": list(model.observations),
        "transition": model.transition.tolist(),
        "observation_model": model.observation_model.tolist(),
        "utility": utility_to_obj(model.utility),
        "discount": model.discount,
    }
    if model.state_components is not None:
        obj["state_components"] = [[n, k] for n, k in model.state_components]
    return obj


def model_from_obj(obj: dict) -> PomdpModel:
    _require_format(obj, POMDP_FORMAT)
    components = obj.get("state_components")
    return PomdpModel(
        states=tuple(obj["states"]),
        actions=tuple(obj["actions"]),
        observations=tuple(obj["observations"]),
        transition=np.asarray(obj["transition"]),
        observation_model=np.asarray(obj["observation_model"]),
        utility=utility_from_obj(obj["utility"]),
        discount=float(obj["discount"]),
        state_components=tuple((n, int(k)) for n, k in components) if components else None,
    )


def model_to_json(model: PomdpModel) -> str:
    return _dump(model_to_obj(model))


def model_from_json(text: str) -> PomdpModel:
    return model_from_obj(json.loads(text))


# --- agent models and interactive beliefs ------------------------------------

def plan_cfg_to_obj(cfg: PlanConfig) -> dict:
    return {
        "horizon": cfg.horizon,
        "discount_override": cfg.discount_override,
        "observation_branch_cap": cfg.observation_branch_cap,
        "action_priority": list(cfg.action_priority) if cfg.action_priority else None,
        "seed": cfg.seed,
    }


def plan_cfg_from_obj(obj: dict) -> PlanConfig:
    priority = obj.get("action_priority")
    return PlanConfig(
        horizon=int(obj["horizon"]),
        discount_override=obj.get("discount_override"),
        observation_branch_cap=obj.get("observation_branch_cap"),
        action_priority=tuple(priority) if priority else None,
        seed=int(obj.get("seed", 0)),
    )


def frame_to_obj(frame: AgentFrame) -> dict:
    return {
        "actions": list(frame.actions),
        "observations": list(frame.observations),
        "observation_model": frame.observation_model.tolist(),
        "utility": utility_to_obj(frame.utility),
        "discount": frame.discount,
    }


def frame_from_obj(obj: dict) -> AgentFrame:
    return AgentFrame(
        actions=tuple(obj["actions"]),
        observations=tuple(obj["observations"]),
        observation_model=np.asarray(obj["observation_model"]),
        utility=utility_from_obj(obj["utility"]),
        discount=float(obj["discount"]),
    )


def agent_model_to_obj(model: AgentModel) -> dict:
    if isinstance(model, Level0Policy):
        return {
            "type": "level0",
            "table": model.table.tolist(),
            "obs_to_counterpart": (
                model.obs_to_counterpart.tolist()
                if model.obs_to_counterpart is not None else None
            ),
            "last_seen": model.last_seen,
        }
    return {
        "type": "levelk",
        "level": model.level,
        "frame": frame_to_obj(model.frame),
        "belief": interactive_belief_to_obj(model.belief),
        "plan": plan_cfg_to_obj(model.plan_cfg),
    }


def agent_model_from_obj(obj: dict) -> AgentModel:
    if obj["type"] == "level0":
        decoder = obj.get("obs_to_counterpart")
        return Level0Policy(
            table=np.asarray(obj["table"]),
            obs_to_counterpart=np.asarray(decoder, dtype=np.int64) if decoder else None,
            last_seen=int(obj.get("last_seen", 0)),
        )
    if obj["type"] == "levelk":
        return LevelKModel(
            level=int(obj["level"]),
            frame=frame_from_obj(obj["frame"]),
            belief=interactive_belief_from_obj(obj["belief"]),
            plan_cfg=plan_cfg_from_obj(obj["plan"]),
        )
    raise ModelMismatch(f"unknown agent model type {obj.get('type')!r}")


def interactive_belief_to_obj(ib: InteractiveBelief) -> dict:
    return {
        "branches": [
            {"physical": b.physical, "model": agent_model_to_obj(b.teacher_model)}
            for b in ib.branches
        ],
        "weights": ib.weights.tolist(),
    }


def interactive_belief_from_obj(obj: dict) -> InteractiveBelief:
    branches = tuple(
        InteractiveState(int(b["physical"]), agent_model_from_obj(b["model"]))
        for b in obj["branches"]
    )
    return InteractiveBelief(branches, np.asarray(obj["weights"]))


# --- joint models ------------------------------------------------------------

def joint_model_to_obj(jm: JointModel, initial_belief: InteractiveBelief | None = None) -> dict:
    obj = {
        "format": IPOMDP_FORMAT,
        "states": list(jm.states),
        "student_actions": list(jm.student_actions),
        "teacher_actions": list(jm.teacher_actions),
        "student_observations": list(jm.student_observations),
        "teacher_observations": list(jm.teacher_observations),
        "transition": jm.transition.tolist(),
        "student_observation_model": jm.student_obs.tolist(),
        "teacher_observation_model": jm.teacher_obs.tolist(),
        "student_utility": utility_to_obj(jm.student_utility),
        "discount": jm.discount,
    }
    if jm.state_components is not None:
        obj["state_components"] = [[n, k] for n, k in jm.state_components]
    if initial_belief is not None:
        obj["initial_belief"] = interactive_belief_to_obj(initial_belief)
    return obj


def joint_model_from_obj(obj: dict) -> tuple[JointModel, InteractiveBelief | None]:
    _require_format(obj, IPOMDP_FORMAT)
    components = obj.get("state_components")
    jm = JointModel(
        states=tuple(obj["states"]),
        student_actions=tuple(obj["student_actions"]),
        teacher_actions=tuple(obj["teacher_actions"]),
        student_observations=tuple(obj["student_observations"]),
        teacher_observations=tuple(obj["teacher_observations"]),
        transition=np.asarray(obj["transition"]),
        student_obs=np.asarray(obj["student_observation_model"]),
        teacher_obs=np.asarray(obj["teacher_observation_model"]),
        student_utility=utility_from_obj(obj["student_utility"]),
        discount=float(obj["discount"]),
        state_components=tuple((n, int(k)) for n, k in components) if components else None,
    )
    belief = obj.get("initial_belief")
    return jm, interactive_belief_from_obj(belief) if belief else None


def joint_model_to_json(jm: JointModel, initial_belief: InteractiveBelief | None = None) -> str:
    return _dump(joint_model_to_obj(jm, initial_belief))


def joint_model_from_json(text: str) -> tuple[JointModel, InteractiveBelief | None]:
    return joint_model_from_obj(json.loads(text))


# --- domain configs and scenarios ---------------------------------------------

def domain_config_to_obj(cfg: DomainConfig) -> dict:
    return {
        "format": DOMAIN_FORMAT,
        "config": {
            "n_objects": cfg.n_objects,
            "objects": [list(o) for o in cfg.objects],
            "hypotheses": [list(h) for h in cfg.hypotheses],
            "noise": {
                "epsilon_speak": cfg.noise.epsilon_speak,
                "epsilon_hear": cfg.noise.epsilon_hear,
                "epsilon_point": cfg.noise.epsilon_point,
                "epsilon_answer": cfg.noise.epsilon_answer,
                "epsilon_ask": cfg.noise.epsilon_ask,
            },
            "teacher_level": cfg.teacher_level,
            "horizon": cfg.horizon,
            "plan_horizon": cfg.plan_horizon,
            "teacher_plan_horizon": cfg.teacher_plan_horizon,
            "discount": cfg.discount,
            "seed": cfg.seed,
            "point_rate": cfg.point_rate,
            "utter_color_bias": cfg.utter_color_bias,
            "include_object_questions": cfg.include_object_questions,
            "include_clarify": cfg.include_clarify,
            "track_consistency": cfg.track_consistency,
            "human_channel_noiseless": cfg.human_channel_noiseless,
            "start_turn": cfg.start_turn,
        },
    }


def domain_config_from_obj(obj: dict) -> DomainConfig:
    _require_format(obj, DOMAIN_FORMAT)
    raw = obj["config"]
    noise = raw.get("noise", {})
    return DomainConfig(
        n_objects=int(raw.get("n_objects", 4)),
        objects=tuple(tuple(o) for o in raw["objects"]) if "objects" in raw else None,
        hypotheses=tuple(tuple(h) for h in raw["hypotheses"]) if "hypotheses" in raw else None,
        noise=NoiseConfig(**noise),
        teacher_level=int(raw.get("teacher_level", 0)),
        horizon=int(raw.get("horizon", 12)),
        plan_horizon=int(raw.get("plan_horizon", 2)),
        teacher_plan_horizon=int(raw.get("teacher_plan_horizon", 1)),
        discount=float(raw.get("discount", 0.95)),
        seed=int(raw.get("seed", 0)),
        point_rate=float(raw.get("point_rate", 0.3)),
        utter_color_bias=float(raw.get("utter_color_bias", 0.5)),
        include_object_questions=bool(raw.get("include_object_questions", True)),
        include_clarify=bool(raw.get("include_clarify", True)),
        track_consistency=raw.get("track_consistency"),
        human_channel_noiseless=bool(raw.get("human_channel_noiseless", True)),
        start_turn=raw.get("start_turn", "teacher"),
    )


def domain_config_to_json(cfg: DomainConfig) -> str:
    return _dump(domain_config_to_obj(cfg))


def domain_config_from_json(text: str) -> DomainConfig:
    return domain_config_from_obj(json.loads(text))


def scenario_to_obj(scenario: Scenario) -> dict:
    obj = domain_config_to_obj(scenario.config)
    obj["scenario"] = {
        "name": scenario.name,
        "description": scenario.description,
        "theta_prior": list(scenario.theta_prior) if scenario.theta_prior else None,
        "script": [
            {"actor": e.actor, "action": e.action, "observed": e.observed}
            for e in scenario.script
        ],
        "expected_actions": list(scenario.expected_actions),
        "assert_horizon": scenario.assert_horizon,
        "true_theta": scenario.true_theta,
    }
    return obj


def scenario_from_obj(obj: dict) -> Scenario:
    cfg = domain_config_from_obj(obj)
    raw = obj.get("scenario") or {}
    prior = raw.get("theta_prior")
    return Scenario(
        name=raw.get("name", "unnamed"),
        config=cfg,
        description=raw.get("description", ""),
        theta_prior=tuple(prior) if prior else None,
        script=tuple(
            ScriptEvent(e["actor"], e["action"], e.get("observed"))
            for e in raw.get("script", [])
        ),
        expected_actions=tuple(raw.get("expected_actions", [])),
        assert_horizon=int(raw.get("assert_horizon", 2)),
        true_theta=raw.get("true_theta"),
    )


def scenario_to_json(scenario: Scenario) -> str:
    return _dump(scenario_to_obj(scenario))


def scenario_from_json(text: str) -> Scenario:
    return scenario_from_obj(json.loads(text))


# --- traces -------------------------------------------------------------------

def trace_to_jsonl(trace: EpisodeTrace) -> str:
    header = {
        "format": TRACE_FORMAT,
        "config_hash": trace.config_hash,
        "seed": trace.seed,
        "scenario": trace.scenario,
        "theta": trace.theta,
        "hypotheses": list(trace.hypotheses),
        "initial_theta_belief": list(trace.initial_theta_belief),
    }
    lines = [_dump(header)]
    for record in trace.steps:
        lines.append(_dump({
            "step": record.step,
            "agent": record.agent,
            "action": record.action,
            "true_state": record.true_state,
            "observation": record.observation,
            "theta_belief": list(record.theta_belief),
            "entropy_bits": record.entropy_bits,
            "nested_theta_belief": (
                list(record.nested_theta_belief)
                if record.nested_theta_belief is not None else None
            ),
            "q_values": record.q_values,
        }))
    return "\n".join(lines) + "\n"


def trace_from_jsonl(text: str) -> EpisodeTrace:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ModelMismatch("empty trace")
    header = json.loads(lines[0])
    _require_format(header, TRACE_FORMAT)
    steps = []
    for line in lines[1:]:
        raw = json.loads(line)
        nested = raw.get("nested_theta_belief")
        steps.append(StepRecord(
            step=int(raw["step"]),
            agent=raw["agent"],
            action=raw["action"],
            true_state=raw["true_state"],
            observation=raw["observation"],
            theta_belief=tuple(raw["theta_belief"]),
            entropy_bits=float(raw["entropy_bits"]),
            nested_theta_belief=tuple(nested) if nested is not None else None,
            q_values=raw.get("q_values"),
        ))
    return EpisodeTrace(
        config_hash=header["config_hash"],
        seed=int(header["seed"]),
        scenario=header["scenario"],
        theta=header["theta"],
        hypotheses=tuple(header["hypotheses"]),
        initial_theta_belief=tuple(header["initial_theta_belief"]),
        steps=tuple(steps),
    )


# --- metrics CSV ---------------------------------------------------------------

def metrics_to_csv(per_seed: list[tuple[int, Metrics]]) -> str:
    if not per_seed:
        raise ValueError("nothing to write")
    curve_len = len(per_seed[0][1].entropy_curve)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["seed", "time_to_threshold", "final_entropy_bits", "declare_accuracy"]
        + [f"entropy_{i}" for i in range(curve_len)]
    )
    for seed, metrics in per_seed:
        writer.writerow(
            [seed, repr(metrics.time_to_threshold), repr(metrics.final_entropy_bits),
             repr(metrics.declare_accuracy)]
            + [repr(x) for x in metrics.entropy_curve]
        )
    return buffer.getvalue()


def metrics_from_csv(text: str) -> list[tuple[int, Metrics]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    curve_len = len(header) - 4
    out = []
    for row in reader:
        if not row:
            continue
        seed = int(row[0])
        out.append((seed, Metrics(
            time_to_threshold=float(row[1]),
            final_entropy_bits=float(row[2]),
            declare_accuracy=float(row[3]),
            entropy_curve=tuple(float(x) for x in row[4:4 + curve_len]),
        )))
    return out


# --- misc helpers ---------------------------------------------------------------

def parse_belief_csv(text: str) -> Belief:
    """Comma-separated probabilities, as taken by the CLI --belief flag."""
    values = [float(part) for part in text.split(",") if part.strip()]
    return Belief(np.asarray(values))


def pomdp_models_equal(a: PomdpModel, b: PomdpModel) -> bool:
    return (
        a.states == b.states and a.actions == b.actions
        and a.observations == b.observations
        and np.array_equal(a.transition, b.transition)
        and np.array_equal(a.observation_model, b.observation_model)
        and utility_to_obj(a.utility) == utility_to_obj(b.utility)
        and a.discount == b.discount
        and a.state_components == b.state_components
    )


def joint_models_equal(a: JointModel, b: JointModel) -> bool:
    return (
        a.states == b.states
        and a.student_actions == b.student_actions
        and a.teacher_actions == b.teacher_actions
        and a.student_observations == b.student_observations
        and a.teacher_observations == b.teacher_observations
        and np.array_equal(a.transition, b.transition)
        and np.array_equal(a.student_obs, b.student_obs)
        and np.array_equal(a.teacher_obs, b.teacher_obs)
        and utility_to_obj(a.student_utility) == utility_to_obj(b.student_utility)
        and a.discount == b.discount
        and a.state_components == b.state_components
    )


def interactive_beliefs_equal(a: InteractiveBelief, b: InteractiveBelief) -> bool:
    return interactive_belief_to_obj(a) == interactive_belief_to_obj(b)
