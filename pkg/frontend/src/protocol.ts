/**
 * Wire protocol for the session service: one JSON frame per WebSocket
 * message, version field mandatory on every frame.
 */

export const PROTOCOL_VERSION = 1;

export interface ChosenAction {
  kind: string;
  payload: string | number | null;
  label: string;
}

export interface StateFrame {
  v: number;
  type: "state";
  session_id: string;
  seq: number;
  step: number;
  turn: "teacher" | "done";
  hypotheses: string[];
  belief: number[];
  entropy_bits: number;
  nested_belief: number[] | null;
  chosen_action: ChosenAction | null;
  q_values: Record<string, number> | null;
  done: boolean;
}

export interface SessionCreatedFrame {
  v: number;
  type: "session_created";
  session_id: string;
  state: StateFrame;
}

export interface ErrorFrame {
  v: number;
  type: "error";
  code: string;
  message: string;
}

export type ServerFrame = StateFrame | SessionCreatedFrame | ErrorFrame;

export type SignalKind = "utter_feature" | "point" | "answer" | "wait";

export interface SignalSpec {
  kind: SignalKind;
  payload: string | number | null;
  label: string;
}

function isFiniteNumberArray(value: unknown): value is number[] {
  return Array.isArray(value) && value.every((x) => typeof x === "number" && isFinite(x));
}

export function isStateFrame(frame: unknown): frame is StateFrame {
  const f = frame as StateFrame;
  return (
    !!f &&
    f.v === PROTOCOL_VERSION &&
    f.type === "state" &&
    typeof f.session_id === "string" &&
    typeof f.seq === "number" &&
    isFiniteNumberArray(f.belief) &&
    typeof f.entropy_bits === "number"
  );
}

export function isSessionCreatedFrame(frame: unknown): frame is SessionCreatedFrame {
  const f = frame as SessionCreatedFrame;
  return (
    !!f &&
    f.v === PROTOCOL_VERSION &&
    f.type === "session_created" &&
    typeof f.session_id === "string" &&
    isStateFrame(f.state)
  );
}

export function isErrorFrame(frame: unknown): frame is ErrorFrame {
  const f = frame as ErrorFrame;
  return !!f && f.type === "error" && typeof f.code === "string";
}

/** Parse one incoming frame; null when it is not valid protocol JSON. */
export function parseFrame(raw: string): ServerFrame | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return null;
  }
  if (isStateFrame(parsed) || isSessionCreatedFrame(parsed) || isErrorFrame(parsed)) {
    return parsed;
  }
  return null;
}

export function makeCreateSession(config: object | null): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "create_session", config });
}

export function makeSignal(sessionId: string, signal: SignalSpec): string {
  return JSON.stringify({
    v: PROTOCOL_VERSION,
    type: "signal",
    session_id: sessionId,
    signal: { kind: signal.kind, payload: signal.payload },
  });
}

export function makeSnapshotRequest(sessionId: string): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "snapshot_request", session_id: sessionId });
}

/** The discrete signal set the console exposes; no free text by design. */
export function signalCatalog(nObjects: number): SignalSpec[] {
  const signals: SignalSpec[] = [];
  for (const feature of ["red", "blue", "ball", "box"]) {
    signals.push({ kind: "utter_feature", payload: feature, label: `say "${feature}"` });
  }
  for (let i = 0; i < nObjects; i++) {
    signals.push({ kind: "point", payload: i, label: `point at object ${i}` });
  }
  signals.push({ kind: "answer", payload: "yes", label: "answer yes" });
  signals.push({ kind: "answer", payload: "no", label: "answer no" });
  signals.push({ kind: "wait", payload: null, label: "stay silent" });
  return signals;
}
