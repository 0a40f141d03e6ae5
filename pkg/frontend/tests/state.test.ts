import { describe, expect, it } from "vitest";

import type { EditOp, SessionView } from "../src/api.js";
import * as st from "../src/state.js";

function view(revision = 0): SessionView {
  return {
    session_id: "abc",
    revision,
    utterance_id: "u1",
    speaker_id: "s",
    phones: [
      { symbol: "o", kind: "phone", stressed: true },
      { symbol: "<wb>", kind: "word_boundary", stressed: false },
      { symbol: "a", kind: "phone", stressed: false },
    ],
    normalized: [[0.1, 0.2, 0.3], [0, 0, 0], [-0.4, 0.5, 0.0]],
    raw: [[190, 0.1, 12], [0, 0, 0], [180, 0.09, 10]],
    base_normalized: [[0.1, 0.2, 0.3], [0, 0, 0], [-0.4, 0.5, 0.0]],
    measured: null,
    stats: {
      f0: { mean: 180, std: 12 },
      energy: { mean: 0.1, std: 0.02 },
      duration: { mean: 10, std: 3 },
    },
    script: { ops: [], meta: {} },
  };
}

const op = (k: number): EditOp => ({
  selector: "all_phones", feature: "f0", action: { shift_sigma: k },
});

describe("undo/redo stacks", () => {
  it("accepting a delta pushes undo and clears redo", () => {
    let s = st.connected(view());
    s = { ...s, redoStack: [[op(9)]] };
    s = st.acceptDelta(s, view(1), [op(0.25)]);
    expect(s.undoStack).toEqual([[op(0.25)]]);
    expect(s.redoStack).toEqual([]);
  });

  it("undo pops the last delta and exposes the remaining replay", () => {
    let s = st.connected(view());
    s = st.acceptDelta(s, view(1), [op(0.25)]);
    s = st.acceptDelta(s, view(2), [op(-0.1)]);
    const popped = st.popUndo(s)!;
    expect(popped.replay).toEqual([op(0.25)]);
    expect(popped.state.undoStack).toEqual([[op(0.25)]]);
    expect(popped.state.redoStack).toEqual([[op(-0.1)]]);
  });

  it("undo then redo restores the stacks exactly", () => {
    let s = st.connected(view());
    s = st.acceptDelta(s, view(1), [op(0.25)]);
    const before = s;
    const popped = st.popUndo(s)!;
    const afterUndo = st.afterUndoReplay(popped.state, view(3));
    const redo = st.popRedo(afterUndo)!;
    const afterRedo = st.afterRedo(redo.state, view(4), redo.delta);
    expect(afterRedo.undoStack).toEqual(before.undoStack);
    expect(afterRedo.redoStack).toEqual([]);
  });

  it("undo on an empty stack is a no-op", () => {
    expect(st.popUndo(st.connected(view()))).toBeNull();
    expect(st.popRedo(st.connected(view()))).toBeNull();
  });

  it("fullScript flattens deltas in order", () => {
    let s = st.connected(view());
    s = st.acceptDelta(s, view(1), [op(0.25)]);
    s = st.acceptDelta(s, view(2), [op(-0.1), op(0.05)]);
    expect(st.fullScript(s)).toEqual([op(0.25), op(-0.1), op(0.05)]);
  });
});

describe("selection", () => {
  it("toggles phone indices and keeps them sorted", () => {
    let s = st.connected(view());
    s = st.toggleSelect(s, 2);
    s = st.toggleSelect(s, 0);
    expect(s.selected).toEqual([0, 2]);
    s = st.toggleSelect(s, 2);
    expect(s.selected).toEqual([0]);
  });

  it("boundary tokens cannot be selected", () => {
    let s = st.connected(view());
    s = st.toggleSelect(s, 1);
    expect(s.selected).toEqual([]);
  });
});

describe("conflicts", () => {
  it("markConflict flags and withView clears", () => {
    let s = st.connected(view());
    s = st.markConflict(s);
    expect(s.conflict).toBe(true);
    s = st.withView(s, view(5));
    expect(s.conflict).toBe(false);
  });
});
