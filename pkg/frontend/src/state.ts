/** Editor state and its pure transitions.
 *
 * The state never computes feature values itself: `view` is always the
 * latest service response, and undo/redo replay edit-script deltas
 * through the service. Undo then redo restores the state exactly
 * because the service recomputes from the immutable base features.
 */

import type { EditOp, SessionView } from "./api.js";

export type AbSlot = "base" | "edited";

export interface EditorState {
  view: SessionView | null;
  /** one entry per accepted POST /edits, in order */
  undoStack: EditOp[][];
  redoStack: EditOp[][];
  selected: number[];
  abSlot: AbSlot;
  audio: { base?: string; edited?: string };
  /** measured rows of the base rendition, for the realized-vs-requested overlay */
  baseMeasured: number[][] | null;
  conflict: boolean;
  busy: boolean;
}

export function initialState(): EditorState {
  return {
    view: null,
    undoStack: [],
    redoStack: [],
    selected: [],
    abSlot: "edited",
    audio: {},
    baseMeasured: null,
    conflict: false,
    busy: false,
  };
}

export function withView(state: EditorState, view: SessionView): EditorState {
  return { ...state, view, conflict: false };
}

export function connected(view: SessionView): EditorState {
  return { ...initialState(), view };
}

export function acceptDelta(state: EditorState, view: SessionView,
                            delta: EditOp[]): EditorState {
  return {
    ...state,
    view,
    undoStack: [...state.undoStack, delta],
    redoStack: [],
    conflict: false,
  };
}

/** Undo pops the most recent delta; the remaining script must be replayed
 * through the service. Returns null when there is nothing to undo. */
export function popUndo(state: EditorState): { state: EditorState; replay: EditOp[] } | null {
  if (state.undoStack.length === 0) return null;
  const undoStack = state.undoStack.slice(0, -1);
  const popped = state.undoStack[state.undoStack.length - 1];
  return {
    state: { ...state, undoStack, redoStack: [...state.redoStack, popped] },
    replay: undoStack.flat(),
  };
}

export function popRedo(state: EditorState): { state: EditorState; delta: EditOp[] } | null {
  if (state.redoStack.length === 0) return null;
  const redoStack = state.redoStack.slice(0, -1);
  const delta = state.redoStack[state.redoStack.length - 1];
  return { state: { ...state, redoStack }, delta };
}

export function afterUndoReplay(state: EditorState, view: SessionView): EditorState {
  return { ...state, view, conflict: false };
}

export function afterRedo(state: EditorState, view: SessionView,
                          delta: EditOp[]): EditorState {
  return { ...state, view, undoStack: [...state.undoStack, delta], conflict: false };
}

export function clearedScript(state: EditorState, view: SessionView): EditorState {
  return { ...state, view, undoStack: [], redoStack: [], conflict: false };
}

export function toggleSelect(state: EditorState, index: number): EditorState {
  const phones = state.view?.phones ?? [];
  if (phones[index]?.kind !== "phone") return state; // boundary tokens disabled
  const selected = state.selected.includes(index)
    ? state.selected.filter((i) => i !== index)
    : [...state.selected, index].sort((a, b) => a - b);
  return { ...state, selected };
}

export function markConflict(state: EditorState): EditorState {
  return { ...state, conflict: true };
}

/** Full edit script accumulated so far (what replaying a session needs). */
export function fullScript(state: EditorState): EditOp[] {
  return state.undoStack.flat();
}
