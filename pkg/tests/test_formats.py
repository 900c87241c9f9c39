import json

import numpy as np
import pytest

from teachmind.domain import DomainConfig, NoiseConfig, build_student_ipomdp, scenario_library
from teachmind.episodes import run_episode, run_batch
from teachmind.errors import ModelMismatch
from teachmind.formats import (
    domain_config_from_json,
    domain_config_to_json,
    interactive_belief_from_obj,
    interactive_belief_to_obj,
    interactive_beliefs_equal,
    joint_model_from_json,
    joint_model_to_json,
    joint_models_equal,
    metrics_from_csv,
    metrics_to_csv,
    model_from_json,
    model_to_json,
    parse_belief_csv,
    pomdp_models_equal,
    scenario_from_json,
    scenario_to_json,
    trace_from_jsonl,
    trace_to_jsonl,
)
from teachmind.micro import random_pomdp, two_door_model
from teachmind.domain import Scenario

from conftest import noiseless_config


class TestPomdpFormat:
    def test_round_trip_two_door(self):
        model = two_door_model()
        again = model_from_json(model_to_json(model))
        assert pomdp_models_equal(model, again)

    def test_round_trip_random(self, rng):
        model = random_pomdp(rng, 4, 3, 2, utility_kind="expected_state_reward")
        again = model_from_json(model_to_json(model))
        assert pomdp_models_equal(model, again)

    def test_format_field_required(self):
        obj = json.loads(model_to_json(two_door_model()))
        obj["format"] = "pomdp/2"
        with pytest.raises(ModelMismatch, match="format"):
            model_from_json(json.dumps(obj))

    def test_json_carries_version_field(self):
        obj = json.loads(model_to_json(two_door_model()))
        assert obj["format"] == "pomdp/1"
        assert obj["transition"][0][0][0] == 1.0


class TestIpomdpFormat:
    @pytest.mark.parametrize("teacher_level", [0, 1])
    def test_round_trip_with_initial_belief(self, teacher_level):
        cfg = DomainConfig(
            teacher_level=teacher_level,
            include_object_questions=False,
            include_clarify=False,
        )
        jm, ib = build_student_ipomdp(cfg)
        text = joint_model_to_json(jm, ib)
        jm2, ib2 = joint_model_from_json(text)
        assert joint_models_equal(jm, jm2)
        assert ib2 is not None
        assert interactive_beliefs_equal(ib, ib2)

    def test_belief_obj_round_trip_exact(self):
        cfg = DomainConfig(teacher_level=1, include_object_questions=False,
                           include_clarify=False)
        _, ib = build_student_ipomdp(cfg)
        again = interactive_belief_from_obj(interactive_belief_to_obj(ib))
        assert interactive_beliefs_equal(ib, again)


class TestDomainFormat:
    def test_config_round_trip(self):
        cfg = DomainConfig(
            noise=NoiseConfig(0.11, 0.03, 0.07, 0.01, 0.2),
            teacher_level=1, point_rate=0.4, utter_color_bias=0.8,
            include_object_questions=False, horizon=9, seed=5,
        )
        assert domain_config_from_json(domain_config_to_json(cfg)) == cfg

    def test_scenario_round_trip(self):
        for scenario in scenario_library():
            assert scenario_from_json(scenario_to_json(scenario)) == scenario

    def test_bare_config_becomes_unnamed_scenario(self):
        text = domain_config_to_json(DomainConfig())
        scenario = scenario_from_json(text)
        assert scenario.name == "unnamed"
        assert scenario.config == DomainConfig()


class TestTraceFormat:
    def test_round_trip_identity(self):
        scenario = Scenario(name="t", config=noiseless_config(horizon=6))
        trace = run_episode(scenario, 11)
        text = trace_to_jsonl(trace)
        again = trace_from_jsonl(text)
        assert again == trace
        assert trace_to_jsonl(again) == text

    def test_header_first_line(self):
        scenario = Scenario(name="t", config=noiseless_config(horizon=4))
        text = trace_to_jsonl(run_episode(scenario, 0))
        header = json.loads(text.splitlines()[0])
        assert header["format"] == "trace/1"
        assert "config_hash" in header and "seed" in header


class TestMetricsCsv:
    def test_round_trip(self):
        scenario = Scenario(name="t", config=noiseless_config(horizon=6))
        _, per_seed = run_batch(scenario, 3)
        text = metrics_to_csv(per_seed)
        again = metrics_from_csv(text)
        assert again == per_seed
        assert metrics_to_csv(again) == text

    def test_infinite_threshold_round_trips(self):
        from teachmind.episodes import Metrics

        rows = [(0, Metrics(float("inf"), 2.0, 0.0, (2.0, 2.0)))]
        assert metrics_from_csv(metrics_to_csv(rows)) == rows


class TestBeliefCsv:
    def test_parse(self):
        b = parse_belief_csv("0.25, 0.25,0.25,0.25")
        assert np.allclose(b.probs, 0.25)

    def test_invalid_rejected(self):
        with pytest.raises(ValueError):
            parse_belief_csv("0.9,0.9")
