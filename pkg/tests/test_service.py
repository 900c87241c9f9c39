import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from teachmind.domain import TeacherSignal
from teachmind.episodes import run_episode
from teachmind.formats import domain_config_to_obj, trace_from_jsonl
from teachmind.service import PROTOCOL_VERSION, SessionRegistry, create_app, handle_message

from conftest import golden_scenario, noiseless_config

GOLDEN_DIR = Path(__file__).parent / "golden"


def send(registry, **payload):
    return handle_message(registry, json.dumps(payload))


def make_session(registry, config=None):
    reply = send(registry, v=1, type="create_session", config=config)
    assert reply["type"] == "session_created", reply
    return reply["session_id"], reply["state"]


class TestCreateSession:
    def test_default_config_uniform_prior(self):
        registry = SessionRegistry()
        _, state = make_session(registry)
        assert state["entropy_bits"] == pytest.approx(2.0)
        assert state["belief"] == [0.25, 0.25, 0.25, 0.25]
        assert state["turn"] == "teacher"
        assert state["v"] == PROTOCOL_VERSION

    def test_single_hypothesis_zero_entropy(self):
        registry = SessionRegistry()
        config = domain_config_to_obj(noiseless_config(hypotheses=(("red", "ball"),)))
        _, state = make_session(registry, config)
        assert state["entropy_bits"] == 0.0

    def test_malformed_json_is_parse_error(self):
        registry = SessionRegistry()
        reply = handle_message(registry, "{not json")
        assert reply["type"] == "error" and reply["code"] == "parse"

    def test_bad_config_code(self):
        registry = SessionRegistry()
        reply = send(registry, v=1, type="create_session",
                     config={"format": "teachdomain/1", "config": {"teacher_level": 9}})
        assert reply["code"] == "bad_config"

    def test_unknown_type_keeps_going(self):
        registry = SessionRegistry()
        reply = send(registry, v=1, type="mystery")
        assert reply["code"] == "type"
        # the registry still works afterwards
        make_session(registry)

    def test_version_field_required(self):
        registry = SessionRegistry()
        reply = send(registry, type="create_session")
        assert reply["code"] == "version"


class TestSignals:
    def test_noiseless_answer_drops_entropy_by_enumerated_amount(self):
        """Feature answer after an utterance: the exact posterior is computed
        by the same Bayes arithmetic the harness oracle checks."""
        registry = SessionRegistry()
        config = domain_config_to_obj(noiseless_config(horizon=6))
        sid, state = make_session(registry, config)
        reply = send(registry, v=1, type="signal", session_id=sid,
                     signal={"kind": "utter_feature", "payload": "red"})
        # noiseless utterance resolves the color dimension exactly: 1 bit left
        assert reply["entropy_bits"] == pytest.approx(1.0, abs=1e-9)
        assert reply["seq"] == state["seq"] + 1
        assert reply["chosen_action"] is not None

    def test_unknown_session(self):
        registry = SessionRegistry()
        reply = send(registry, v=1, type="signal", session_id="missing",
                     signal={"kind": "wait"})
        assert reply["code"] == "session"

    def test_bad_signal_payload(self):
        registry = SessionRegistry()
        sid, _ = make_session(registry)
        reply = send(registry, v=1, type="signal", session_id=sid,
                     signal={"kind": "utter_feature", "payload": "green"})
        assert reply["code"] == "signal"

    def test_signal_label_form_accepted(self):
        registry = SessionRegistry()
        sid, _ = make_session(registry)
        reply = send(registry, v=1, type="signal", session_id=sid,
                     signal={"label": "utter_blue"})
        assert reply["type"] == "state"

    def test_wrong_turn_leaves_session_unchanged(self):
        registry = SessionRegistry()
        config = domain_config_to_obj(noiseless_config(horizon=2))
        sid, _ = make_session(registry, config)
        done = send(registry, v=1, type="signal", session_id=sid,
                    signal={"kind": "utter_feature", "payload": "red"})
        assert done["done"] is True and done["turn"] == "done"
        snapshot_before = send(registry, v=1, type="snapshot_request", session_id=sid)
        rejected = send(registry, v=1, type="signal", session_id=sid,
                        signal={"kind": "utter_feature", "payload": "blue"})
        assert rejected["code"] == "turn"
        snapshot_after = send(registry, v=1, type="snapshot_request", session_id=sid)
        assert snapshot_before == snapshot_after

    def test_student_turn_rejected_directly(self):
        registry = SessionRegistry()
        sid, _ = make_session(registry)
        registry.sessions[sid].turn = "student"
        reply = send(registry, v=1, type="signal", session_id=sid,
                     signal={"kind": "wait"})
        assert reply["code"] == "turn"


class TestSnapshot:
    def test_fresh_snapshot_equals_created_state(self):
        registry = SessionRegistry()
        sid, state = make_session(registry)
        snap = send(registry, v=1, type="snapshot_request", session_id=sid)
        assert snap == state

    def test_snapshot_after_k_signals_is_kth_state(self):
        registry = SessionRegistry()
        config = domain_config_to_obj(noiseless_config(horizon=8))
        sid, _ = make_session(registry, config)
        states = []
        # utter_red resolves color, the student asks the shape question,
        # answer_yes resolves it (consistent with the pending question)
        for signal in ({"kind": "utter_feature", "payload": "red"},
                       {"kind": "answer", "payload": "yes"}):
            states.append(send(registry, v=1, type="signal", session_id=sid,
                               signal=signal))
        assert all(s["type"] == "state" for s in states)
        snap = send(registry, v=1, type="snapshot_request", session_id=sid)
        assert snap == states[-1]
        assert snap["seq"] == 2

    def test_model_inconsistent_signal_rejected_cleanly(self):
        """Uttering while a question is pending has zero likelihood under the
        modeled teacher; the service refuses it and keeps the session."""
        registry = SessionRegistry()
        config = domain_config_to_obj(noiseless_config(horizon=8))
        sid, _ = make_session(registry, config)
        send(registry, v=1, type="signal", session_id=sid,
             signal={"kind": "utter_feature", "payload": "red"})
        before = send(registry, v=1, type="snapshot_request", session_id=sid)
        reply = send(registry, v=1, type="signal", session_id=sid,
                     signal={"kind": "utter_feature", "payload": "ball"})
        assert reply["code"] == "signal"
        after = send(registry, v=1, type="snapshot_request", session_id=sid)
        assert before == after

    def test_repeated_snapshots_identical(self):
        registry = SessionRegistry()
        sid, _ = make_session(registry)
        a = send(registry, v=1, type="snapshot_request", session_id=sid)
        b = send(registry, v=1, type="snapshot_request", session_id=sid)
        assert a == b


class TestGoldenParity:
    def test_service_matches_golden_trace_step_for_step(self):
        """Replaying the golden scenario's teacher signals through the service
        must reproduce the committed trace's student beliefs exactly."""
        scenario = golden_scenario()
        committed = trace_from_jsonl((GOLDEN_DIR / "golden_seed42.jsonl").read_text())
        registry = SessionRegistry()
        sid, _ = make_session(registry, domain_config_to_obj(scenario.config))
        # beliefs recorded on the student's steps (after each full exchange)
        student_records = [r for r in committed.steps if r.agent == "student"]
        for event, expected in zip(scenario.script, student_records):
            signal = TeacherSignal.from_action_label(event.action)
            reply = send(registry, v=1, type="signal", session_id=sid,
                         signal={"kind": signal.kind, "payload": signal.payload})
            got = np.asarray(reply["belief"])
            want = np.asarray(expected.theta_belief)
            assert np.abs(got - want).max() <= 1e-9
            assert reply["chosen_action"]["label"] == expected.action


class TestWebSocketLayer:
    def test_healthz(self):
        client = TestClient(create_app())
        response = client.get("/healthz")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok" and "version" in body

    def test_full_session_over_websocket(self):
        client = TestClient(create_app())
        with client.websocket_connect("/session") as ws:
            ws.send_text(json.dumps({"v": 1, "type": "create_session", "config": None}))
            created = json.loads(ws.receive_text())
            assert created["type"] == "session_created"
            sid = created["session_id"]
            ws.send_text(json.dumps({
                "v": 1, "type": "signal", "session_id": sid,
                "signal": {"kind": "utter_feature", "payload": "red"},
            }))
            state = json.loads(ws.receive_text())
            assert state["type"] == "state" and state["seq"] == 1
            ws.send_text("garbage{{")
            error = json.loads(ws.receive_text())
            assert error["code"] == "parse"
            # connection survives the malformed frame
            ws.send_text(json.dumps({"v": 1, "type": "snapshot_request", "session_id": sid}))
            snap = json.loads(ws.receive_text())
            assert snap["seq"] == 1

    def test_sessions_are_isolated(self):
        client = TestClient(create_app())
        with client.websocket_connect("/session") as ws:
            ws.send_text(json.dumps({"v": 1, "type": "create_session", "config": None}))
            a = json.loads(ws.receive_text())["session_id"]
            ws.send_text(json.dumps({"v": 1, "type": "create_session", "config": None}))
            b = json.loads(ws.receive_text())["session_id"]
            assert a != b
            ws.send_text(json.dumps({
                "v": 1, "type": "signal", "session_id": a,
                "signal": {"kind": "utter_feature", "payload": "red"},
            }))
            json.loads(ws.receive_text())
            ws.send_text(json.dumps({"v": 1, "type": "snapshot_request", "session_id": b}))
            untouched = json.loads(ws.receive_text())
            assert untouched["seq"] == 0
            assert untouched["entropy_bits"] == pytest.approx(2.0)
