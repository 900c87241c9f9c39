/**
 * Socket glue: one WebSocket per session, reconnect with a snapshot request
 * on drops, all rendering through the pure reducer in view.ts.
 */

import { paint } from "./dom.js";
import {
  SignalSpec,
  makeCreateSession,
  makeSignal,
  makeSnapshotRequest,
  parseFrame,
  signalCatalog,
} from "./protocol.js";
import {
  SessionViewModel,
  emptyView,
  recordSentSignal,
  renderMalformed,
  renderState,
  setConnection,
  setTargetConcept,
} from "./view.js";

let view: SessionViewModel = emptyView();
let socket: WebSocket | null = null;
let retryTimer: number | null = null;

function update(next: SessionViewModel): void {
  view = next;
  paint(view);
}

function field<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function sessionConfig(): object {
  const level = Number((field<HTMLSelectElement>("teacher-level")).value);
  const noiseless = (field<HTMLInputElement>("noiseless")).checked;
  const horizon = Number((field<HTMLInputElement>("horizon")).value) || 12;
  const config: Record<string, unknown> = {
    teacher_level: level,
    horizon,
    human_channel_noiseless: noiseless,
  };
  if (level === 1) {
    // keep the joint model small enough for live planning
    config["include_object_questions"] = false;
    config["include_clarify"] = false;
  }
  return config;
}

function serverUrl(): string {
  const raw = (field<HTMLInputElement>("server-url")).value.trim();
  const base = raw || `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}`;
  return base.replace(/^http/, "ws").replace(/\/$/, "") + "/session";
}

function connect(): void {
  if (retryTimer !== null) {
    clearTimeout(retryTimer);
    retryTimer = null;
  }
  socket?.close();
  const resuming = view.sessionId;
  update(setConnection(view, "connecting"));
  socket = new WebSocket(serverUrl());

  socket.onopen = () => {
    update(setConnection(view, "open"));
    if (resuming && socket) {
      socket.send(makeSnapshotRequest(resuming));
    } else if (socket) {
      const target = (field<HTMLSelectElement>("target-concept")).value;
      update(setTargetConcept(view, target));
      socket.send(makeCreateSession(sessionConfig()));
    }
  };

  socket.onmessage = (event) => {
    const frame = parseFrame(String(event.data));
    update(frame === null ? renderMalformed(view) : renderState(view, frame));
  };

  socket.onclose = () => {
    update(setConnection(view, "closed"));
    if (view.sessionId && view.turn !== "done") {
      retryTimer = window.setTimeout(connect, 1500);
    }
  };
}

function sendSignal(signal: SignalSpec): void {
  if (!socket || socket.readyState !== WebSocket.OPEN || !view.sessionId) return;
  if (view.turn !== "teacher" || view.awaitingReply) return;
  update(recordSentSignal(view, signal.label));
  socket.send(makeSignal(view.sessionId, signal));
}

function buildSignalButtons(): void {
  const host = field<HTMLDivElement>("signals");
  host.innerHTML = "";
  for (const signal of signalCatalog(4)) {
    const button = document.createElement("button");
    button.textContent = signal.label;
    button.disabled = true;
    button.onclick = () => sendSignal(signal);
    host.appendChild(button);
  }
}

function main(): void {
  buildSignalButtons();
  field<HTMLButtonElement>("connect").onclick = () => {
    view = emptyView();
    connect();
  };
  field<HTMLButtonElement>("reconnect").onclick = () => connect();
  paint(view);
}

main();
