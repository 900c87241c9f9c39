import { describe, expect, it } from "vitest";
import { ServerFrame, StateFrame, parseFrame } from "../src/protocol.js";
import {
  SessionViewModel,
  beliefSumOk,
  emptyView,
  logOrdered,
  recordSentSignal,
  renderMalformed,
  renderState,
} from "../src/view.js";
import frames from "./fixtures/frames.json";

function replay(raw: unknown[]): SessionViewModel {
  let view = emptyView();
  for (const frame of raw) {
    const parsed = parseFrame(JSON.stringify(frame));
    view = parsed === null ? renderMalformed(view) : renderState(view, parsed);
  }
  return view;
}

const stateFrames = frames.filter((f) => f.type === "state") as unknown as StateFrame[];

describe("reducer over the recorded golden session", () => {
  it("is a deterministic function of the frame history", () => {
    const once = replay(frames);
    const twice = replay(frames);
    expect(twice).toEqual(once);
    expect(once).toMatchSnapshot();
  });

  it("keeps the rendered belief a distribution", () => {
    let view = emptyView();
    for (const frame of frames) {
      view = renderState(view, parseFrame(JSON.stringify(frame)) as ServerFrame);
      expect(beliefSumOk(view)).toBe(true);
    }
  });

  it("orders the log by sequence number", () => {
    const view = replay(frames);
    expect(logOrdered(view)).toBe(true);
  });

  it("tracks entropy history one point per state frame", () => {
    const view = replay(frames);
    expect(view.entropyHistory).toHaveLength(stateFrames.length + 1); // + created
  });

  it("final belief matches the last state frame (no client inference)", () => {
    const view = replay(frames);
    const last = stateFrames[stateFrames.length - 1];
    expect(view.belief).toEqual(last.belief);
    expect(view.entropyBits).toBe(last.entropy_bits);
  });

  it("surfaces the trailing turn error inline and keeps state", () => {
    const view = replay(frames);
    expect(view.error).toMatch(/^turn/);
    const last = stateFrames[stateFrames.length - 1];
    expect(view.belief).toEqual(last.belief);
  });
});

describe("staleness", () => {
  it("ignores out-of-order frames", () => {
    const created = parseFrame(JSON.stringify(frames[0])) as ServerFrame;
    const first = parseFrame(JSON.stringify(frames[1])) as ServerFrame;
    const second = parseFrame(JSON.stringify(frames[2])) as ServerFrame;
    let view = renderState(emptyView(), created);
    view = renderState(view, first);
    view = renderState(view, second);
    const ahead = { ...view };
    view = renderState(view, first); // replayed stale frame
    expect(view).toEqual(ahead);
  });

  it("ignores duplicate snapshots at the same sequence", () => {
    let view = replay(frames.slice(0, 2));
    const again = renderState(view, parseFrame(JSON.stringify(frames[1])) as ServerFrame);
    expect(again).toEqual(view);
  });
});

describe("edge frames", () => {
  it("malformed frames set the banner and retain the view", () => {
    const before = replay(frames.slice(0, 2));
    const after = renderMalformed(before);
    expect(after.error).toMatch(/malformed/);
    expect(after.belief).toEqual(before.belief);
    expect(after.log).toEqual(before.log);
  });

  it("sent signals append to the log and gate the controls", () => {
    const view = recordSentSignal(replay(frames.slice(0, 2)), 'say "red"');
    expect(view.awaitingReply).toBe(true);
    expect(view.log[view.log.length - 1].who).toBe("teacher");
    expect(logOrdered(view)).toBe(true);
  });

  it("q-value frames annotate the agent's action in the log", () => {
    const view = replay(frames.slice(0, 2));
    const agentLines = view.log.filter((entry) => entry.who === "agent");
    expect(agentLines).toHaveLength(1);
    expect(agentLines[0].text).toMatch(/argmax/);
  });
});
