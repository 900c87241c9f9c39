"""Long-running session service: a human plays the teacher over a JSON
WebSocket protocol while the engine maintains the student.

One JSON ProtocolMessage per frame, UTF-8, version field mandatory. Each
teacher signal atomically advances the world by two steps (the teacher's
move, then the student's planned reply), so between frames a live session is
always waiting at the teacher's turn; the turn error surfaces once the
horizon is exhausted. Malformed frames get an error reply and the connection
stays open.
"""

from __future__ import annotations

import asyncio
import json
import logging
import uuid
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import __version__
from .domain import (
    DomainConfig,
    GameSpaces,
    StudentAction,
    TeacherSignal,
    build_student_ipomdp,
    game_spaces,
)
from .episodes import _CH_STUDENT_OBS, _theta_marginal, _nested_theta, stream
from .formats import DOMAIN_FORMAT, domain_config_from_obj
from .errors import ZeroNormalizer
from .nested import BranchConfig, interactive_belief_update, solve_level_k
from .planning import PlanConfig
from .pomdp import entropy_bits

PROTOCOL_VERSION = 1

logger = logging.getLogger("teachmind.service")


class ServiceError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class Session:
    session_id: str
    cfg: DomainConfig
    sp: GameSpaces
    jm: Any
    ib: Any
    seq: int = 0
    step: int = 0
    turn: str = "teacher"
    last_state: dict | None = None
    trace: list[dict] = field(default_factory=list)
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)


class SessionRegistry:
    """Engine-side session handling; the WebSocket layer is a thin shell."""

    def __init__(self) -> None:
        self.sessions: dict[str, Session] = {}

    def _state_payload(
        self,
        session: Session,
        chosen: str | None = None,
        q_values: dict[str, float] | None = None,
    ) -> dict:
        theta = _theta_marginal(session.ib, session.sp)
        payload = {
            "v": PROTOCOL_VERSION,
            "type": "state",
            "session_id": session.session_id,
            "seq": session.seq,
            "step": session.step,
            "turn": session.turn,
            "hypotheses": list(session.sp.hyp_labels),
            "belief": [float(x) for x in theta],
            "entropy_bits": entropy_bits(theta),
            "nested_belief": (
                list(nested) if (nested := _nested_theta(session.ib, session.sp)) else None
            ),
            "chosen_action": None,
            "q_values": q_values,
            "done": session.turn == "done",
        }
        if chosen is not None:
            action = StudentAction.from_action_label(chosen)
            payload["chosen_action"] = {
                "kind": action.kind,
                "payload": action.payload,
                "label": chosen,
            }
        return payload

    def _student_move(self, session: Session) -> tuple[str, dict[str, float]]:
        plan = solve_level_k(
            session.jm,
            session.ib,
            PlanConfig(horizon=session.cfg.plan_horizon, seed=session.cfg.seed),
            BranchConfig(),
        )
        session.ib = interactive_belief_update(
            session.jm, session.ib, plan.chosen_action, "silence", BranchConfig()
        )
        session.step += 1
        return plan.chosen_action, plan.q_values

    def _refresh_turn(self, session: Session) -> None:
        session.turn = "done" if session.step >= session.cfg.horizon else "teacher"

    def create_session(self, config_obj: dict | None) -> dict:
        try:
            if config_obj is None:
                cfg = DomainConfig()
            elif isinstance(config_obj, dict) and config_obj.get("format") == DOMAIN_FORMAT:
                cfg = domain_config_from_obj(config_obj)
            elif isinstance(config_obj, dict):
                cfg = domain_config_from_obj({"format": DOMAIN_FORMAT, "config": config_obj})
            else:
                raise ValueError("config must be an object")
        except Exception as exc:
            raise ServiceError("bad_config", str(exc)) from exc

        jm, ib = build_student_ipomdp(cfg)
        session = Session(
            session_id=uuid.uuid4().hex,
            cfg=cfg,
            sp=game_spaces(cfg),
            jm=jm,
            ib=ib,
        )
        chosen = None
        q_values = None
        if cfg.start_turn == "student":
            chosen, q_values = self._student_move(session)
        self._refresh_turn(session)
        session.last_state = self._state_payload(session, chosen, q_values)
        self.sessions[session.session_id] = session
        logger.info("session %s created (|H|=%d)", session.session_id, cfg.n_hypotheses)
        return {
            "v": PROTOCOL_VERSION,
            "type": "session_created",
            "session_id": session.session_id,
            "state": session.last_state,
        }

    def get(self, session_id: str | None) -> Session:
        if not session_id or session_id not in self.sessions:
            raise ServiceError("session", f"unknown session {session_id!r}")
        return self.sessions[session_id]

    def handle_teacher_signal(self, session_id: str, signal_obj: dict) -> dict:
        session = self.get(session_id)
        if session.turn != "teacher":
            raise ServiceError("turn", f"not the teacher's turn (turn={session.turn})")
        try:
            if "label" in signal_obj:
                signal = TeacherSignal.from_action_label(signal_obj["label"])
            else:
                signal = TeacherSignal(signal_obj["kind"], signal_obj.get("payload"))
        except Exception as exc:
            raise ServiceError("signal", str(exc)) from exc

        if session.cfg.human_channel_noiseless:
            observed = signal.observation_label()
        else:
            # The hearing channel depends only on the signal; sample the row.
            row = session.jm.student_obs[0, session.sp.teacher_actions.index(signal.action_label())]
            rng = stream(session.cfg.seed, session.step, _CH_STUDENT_OBS)
            observed = session.sp.student_observations[int(rng.choice(len(row), p=row))]

        ib_before = session.ib
        step_before = session.step
        try:
            session.ib = interactive_belief_update(
                session.jm, session.ib, "wait", observed, BranchConfig()
            )
            session.step += 1
            chosen = None
            q_values = None
            if session.step < session.cfg.horizon:
                chosen, q_values = self._student_move(session)
        except ZeroNormalizer as exc:
            session.ib = ib_before
            session.step = step_before
            raise ServiceError(
                "signal",
                f"signal impossible under the student's teacher model: {exc}",
            ) from exc
        except Exception:
            session.ib = ib_before
            session.step = step_before
            raise
        session.seq += 1
        self._refresh_turn(session)
        session.last_state = self._state_payload(session, chosen, q_values)
        session.trace.append({"signal": signal.action_label(), "observed": observed,
                              "state": session.last_state})
        return session.last_state

    def snapshot(self, session_id: str) -> dict:
        session = self.get(session_id)
        if session.last_state is None:
            raise ServiceError("session", "session has no state yet")
        return session.last_state


def _error(code: str, message: str) -> dict:
    return {"v": PROTOCOL_VERSION, "type": "error", "code": code, "message": message}


def handle_message(registry: SessionRegistry, raw: str) -> dict:
    """Dispatch one frame; always returns a reply frame."""
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as exc:
        return _error("parse", f"malformed JSON: {exc}")
    if not isinstance(msg, dict):
        return _error("parse", "frame must be a JSON object")
    if msg.get("v") != PROTOCOL_VERSION:
        return _error("version", f"unsupported protocol version {msg.get('v')!r}")
    msg_type = msg.get("type")
    try:
        if msg_type == "create_session":
            return registry.create_session(msg.get("config"))
        if msg_type == "signal":
            signal_obj = msg.get("signal")
            if not isinstance(signal_obj, dict):
                return _error("signal", "signal payload must be an object")
            return registry.handle_teacher_signal(msg.get("session_id"), signal_obj)
        if msg_type == "snapshot_request":
            return registry.snapshot(msg.get("session_id"))
        return _error("type", f"unknown message type {msg_type!r}")
    except ServiceError as exc:
        return _error(exc.code, str(exc))
    except Exception as exc:  # never let one frame kill the process
        logger.exception("internal error handling %s", msg_type)
        return _error("internal", str(exc))


def create_app(console_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="teachmind session service", version=__version__)
    registry = SessionRegistry()
    app.state.registry = registry

    @app.get("/healthz")
    def healthz() -> dict:
        return {
            "status": "ok",
            "version": __version__,
            "protocol": PROTOCOL_VERSION,
            "sessions": len(registry.sessions),
        }

    @app.websocket("/session")
    async def session_socket(ws: WebSocket) -> None:
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_text()
                # Serialize per session; frames without a session id (create,
                # malformed) need no lock.
                session_id = None
                try:
                    session_id = json.loads(raw).get("session_id")
                except Exception:
                    pass
                session = registry.sessions.get(session_id) if session_id else None
                if session is not None:
                    async with session.lock:
                        reply = handle_message(registry, raw)
                else:
                    reply = handle_message(registry, raw)
                await ws.send_text(json.dumps(reply, sort_keys=True))
        except WebSocketDisconnect:
            return

    if console_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=console_dir, html=True), name="console")
    return app
