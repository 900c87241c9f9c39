/**
 * The console's view model and its pure reducer.
 *
 * Every probability shown originates from a server frame; the reducer does
 * no inference of its own. Frames with a sequence number at or below the
 * last applied one are stale and never overwrite newer state.
 */

import {
  ErrorFrame,
  ServerFrame,
  SessionCreatedFrame,
  StateFrame,
  isErrorFrame,
  isSessionCreatedFrame,
  isStateFrame,
} from "./protocol.js";

export type ConnectionStatus = "idle" | "connecting" | "open" | "closed";

export interface LogEntry {
  seq: number;
  who: "teacher" | "agent" | "system";
  text: string;
}

export interface SessionViewModel {
  sessionId: string | null;
  connection: ConnectionStatus;
  turn: "teacher" | "done" | "unknown";
  seq: number;
  step: number;
  hypotheses: string[];
  belief: number[];
  entropyBits: number | null;
  entropyHistory: number[];
  nestedBelief: number[] | null;
  log: LogEntry[];
  error: string | null;
  awaitingReply: boolean;
  targetConcept: string | null;
}

export function emptyView(): SessionViewModel {
  return {
    sessionId: null,
    connection: "idle",
    turn: "unknown",
    seq: -1,
    step: 0,
    hypotheses: [],
    belief: [],
    entropyBits: null,
    entropyHistory: [],
    nestedBelief: null,
    log: [],
    error: null,
    awaitingReply: false,
    targetConcept: null,
  };
}

function describeAction(frame: StateFrame): string | null {
  if (!frame.chosen_action) return null;
  const action = frame.chosen_action;
  switch (action.kind) {
    case "ask_feature":
      return action.payload === "color" ? "asks: is it red?" : "asks: is it a ball?";
    case "ask_object":
      return `asks: is it object ${action.payload}?`;
    case "ask_clarify":
      return "asks you to say that again";
    case "declare":
      return `declares: the target is ${action.payload}`;
    case "listen":
      return "listens";
    case "look_at_teacher":
      return "looks at you";
    default:
      return action.label;
  }
}

function argmaxLabel(frame: StateFrame): string {
  if (!frame.q_values || !frame.chosen_action) return "";
  return ` (argmax of ${Object.keys(frame.q_values).length} options)`;
}

function applyState(view: SessionViewModel, frame: StateFrame): SessionViewModel {
  if (frame.seq <= view.seq) {
    return view; // stale frame: a lower (or repeated) sequence never wins
  }
  const log = view.log.slice();
  const said = describeAction(frame);
  if (said) {
    log.push({ seq: frame.seq, who: "agent", text: said + argmaxLabel(frame) });
  }
  if (frame.done) {
    log.push({ seq: frame.seq, who: "system", text: "session complete" });
  }
  return {
    ...view,
    sessionId: frame.session_id,
    turn: frame.turn,
    seq: frame.seq,
    step: frame.step,
    hypotheses: frame.hypotheses,
    belief: frame.belief,
    entropyBits: frame.entropy_bits,
    entropyHistory: [...view.entropyHistory, frame.entropy_bits],
    nestedBelief: frame.nested_belief,
    log,
    error: null,
    awaitingReply: false,
  };
}

function applyError(view: SessionViewModel, frame: ErrorFrame): SessionViewModel {
  // surface the error inline and keep the previous state intact
  return {
    ...view,
    error: `${frame.code}: ${frame.message}`,
    awaitingReply: false,
    log: [...view.log, { seq: view.seq, who: "system", text: `error ${frame.code}` }],
  };
}

function applyCreated(view: SessionViewModel, frame: SessionCreatedFrame): SessionViewModel {
  const seeded = applyState({ ...view, seq: -1, entropyHistory: [], log: [] }, frame.state);
  return {
    ...seeded,
    sessionId: frame.session_id,
    log: [
      { seq: frame.state.seq, who: "system", text: `session ${frame.session_id.slice(0, 8)} started` },
      ...seeded.log,
    ],
  };
}

/**
 * Pure reducer from (previous view, server frame) to the next view.
 * Deterministic and side-effect free, so frame sequences snapshot-test.
 */
export function renderState(view: SessionViewModel, frame: ServerFrame): SessionViewModel {
  if (isSessionCreatedFrame(frame)) return applyCreated(view, frame);
  if (isStateFrame(frame)) return applyState(view, frame);
  if (isErrorFrame(frame)) return applyError(view, frame);
  return view;
}

/** Malformed (unparseable) frames: error banner, previous view retained. */
export function renderMalformed(view: SessionViewModel): SessionViewModel {
  return { ...view, error: "malformed frame from server", awaitingReply: false };
}

export function recordSentSignal(view: SessionViewModel, label: string): SessionViewModel {
  return {
    ...view,
    awaitingReply: true,
    error: null,
    log: [...view.log, { seq: view.seq, who: "teacher", text: label }],
  };
}

export function setConnection(
  view: SessionViewModel, connection: ConnectionStatus
): SessionViewModel {
  return { ...view, connection };
}

export function setTargetConcept(view: SessionViewModel, concept: string): SessionViewModel {
  return { ...view, targetConcept: concept };
}

/** Rendered bars must sum to one within a percent after rounding. */
export function beliefSumOk(view: SessionViewModel): boolean {
  if (view.belief.length === 0) return true;
  const total = view.belief.reduce((a, b) => a + b, 0);
  return Math.abs(total - 1.0) <= 0.01;
}

export function logOrdered(view: SessionViewModel): boolean {
  for (let i = 1; i < view.log.length; i++) {
    if (view.log[i].seq < view.log[i - 1].seq) return false;
  }
  return true;
}
