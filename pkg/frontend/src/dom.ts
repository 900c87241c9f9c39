/** DOM renderer: paints a SessionViewModel into the static page skeleton. */

import { SessionViewModel, beliefSumOk } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function paintBars(container: HTMLElement, labels: string[], probs: number[],
                   highlight: string | null): void {
  container.innerHTML = "";
  probs.forEach((p, i) => {
    const row = document.createElement("div");
    row.className = "bar-row";
    const name = document.createElement("span");
    name.className = "bar-label";
    name.textContent = labels[i] ?? `h${i}`;
    if (highlight && labels[i] === highlight) name.classList.add("target");
    const track = document.createElement("div");
    track.className = "bar-track";
    const fill = document.createElement("div");
    fill.className = "bar-fill";
    fill.style.width = `${(p * 100).toFixed(1)}%`;
    const pct = document.createElement("span");
    pct.className = "bar-pct";
    pct.textContent = `${(p * 100).toFixed(1)}%`;
    track.appendChild(fill);
    row.append(name, track, pct);
    container.appendChild(row);
  });
}

function sparklinePath(history: number[], width: number, height: number): string {
  if (history.length === 0) return "";
  const top = Math.max(...history, 1e-9);
  const stepX = history.length > 1 ? width / (history.length - 1) : 0;
  return history
    .map((h, i) => {
      const x = (i * stepX).toFixed(1);
      const y = (height - (h / top) * (height - 2) - 1).toFixed(1);
      return `${i === 0 ? "M" : "L"}${x},${y}`;
    })
    .join(" ");
}

export function paint(view: SessionViewModel): void {
  el("connection").textContent = view.connection;
  el("connection").dataset.state = view.connection;

  const turn = el("turn");
  if (view.turn === "teacher") {
    turn.textContent = view.awaitingReply ? "waiting for the agent..." : "your turn";
  } else if (view.turn === "done") {
    turn.textContent = "session complete";
  } else {
    turn.textContent = "-";
  }

  const entropy = el("entropy");
  entropy.textContent =
    view.entropyBits === null ? "-" : `${view.entropyBits.toFixed(2)} bits`;

  paintBars(el("belief-bars"), view.hypotheses, view.belief, view.targetConcept);
  if (!beliefSumOk(view)) {
    el("error-banner").textContent = "belief bars out of tolerance";
  }

  const nestedPanel = el("nested-panel");
  if (view.nestedBelief) {
    nestedPanel.hidden = false;
    paintBars(el("nested-bars"), view.hypotheses, view.nestedBelief, null);
  } else {
    nestedPanel.hidden = true;
  }

  const spark = el("sparkline-path");
  spark.setAttribute("d", sparklinePath(view.entropyHistory, 220, 48));

  const log = el("log");
  log.innerHTML = "";
  for (const entry of view.log) {
    const line = document.createElement("li");
    line.className = `log-${entry.who}`;
    line.textContent = `[${entry.seq}] ${entry.who}: ${entry.text}`;
    log.appendChild(line);
  }
  log.scrollTop = log.scrollHeight;

  const banner = el("error-banner");
  banner.textContent = view.error ?? "";
  banner.hidden = view.error === null;

  const disabled = view.turn !== "teacher" || view.awaitingReply
    || view.connection !== "open";
  document.querySelectorAll<HTMLButtonElement>("#signals button").forEach((button) => {
    button.disabled = disabled;
  });

  const badge = el("target-badge");
  badge.textContent = view.targetConcept
    ? `you are teaching: ${view.targetConcept}`
    : "";
}
