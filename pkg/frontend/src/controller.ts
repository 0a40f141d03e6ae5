/** Orchestrates the session: every mutation round-trips through the
 * service and the resulting view replaces local state wholesale. DOM-free
 * so scripted tests drive exactly the code the pointer handlers call. */

import { ConflictError, ServiceClient } from "./api.js";
import type { EditOp, FeatureName, SessionView, SynthesizeView } from "./api.js";
import { dragToOp, laneShiftToOp, selectionShiftToOp } from "./script.js";
import * as st from "./state.js";
import type { EditorState } from "./state.js";

export type Listener = (state: EditorState) => void;

export class EditorController {
  state: EditorState = st.initialState();

  constructor(readonly client: ServiceClient, readonly onChange: Listener = () => {}) {}

  private emit(next: EditorState) {
    this.state = next;
    this.onChange(next);
  }

  private get view(): SessionView {
    if (!this.state.view) throw new Error("no live session");
    return this.state.view;
  }

  async connect(utteranceId: string, speakerId?: string): Promise<void> {
    const view = await this.client.createSession(utteranceId, speakerId);
    this.emit(st.connected(view));
    // base rendition for the A slot and the measured overlay
    const synth = await this.client.synthesize(view.session_id);
    this.emit({
      ...st.withView(this.state, synth),
      audio: { base: synth.audio_url },
      baseMeasured: synth.measured,
    });
  }

  private async sendDelta(ops: EditOp[]): Promise<void> {
    const view = this.view;
    try {
      const next = await this.client.postEdits(view.session_id, view.revision, ops);
      this.emit(st.acceptDelta(this.state, next, ops));
    } catch (err) {
      if (err instanceof ConflictError) {
        this.emit(st.markConflict(this.state));
        return;
      }
      throw err;
    }
  }

  /** Drag of one phone's bar to an absolute sigma value. */
  async dragPhone(index: number, feature: FeatureName, valueSigma: number): Promise<void> {
    if (this.view.phones[index]?.kind !== "phone") return; // boundaries disabled
    await this.sendDelta([dragToOp(index, feature, valueSigma)]);
  }

  /** Lane-wide slider: shift every phone by k sigma. */
  async laneShift(feature: FeatureName, k: number): Promise<void> {
    await this.sendDelta([laneShiftToOp(feature, k)]);
  }

  /** Shift the current multi-selection. */
  async selectionShift(feature: FeatureName, k: number): Promise<void> {
    if (this.state.selected.length === 0) return;
    await this.sendDelta([selectionShiftToOp(this.state.selected, feature, k)]);
  }

  toggleSelect(index: number): void {
    this.emit(st.toggleSelect(this.state, index));
  }

  async synthesize(): Promise<SynthesizeView> {
    const synth = await this.client.synthesize(this.view.session_id);
    const audio = this.state.undoStack.length === 0
      ? { ...this.state.audio, base: synth.audio_url, edited: undefined }
      : { ...this.state.audio, edited: synth.audio_url };
    const next: EditorState = { ...st.withView(this.state, synth), audio };
    if (this.state.undoStack.length === 0) next.baseMeasured = synth.measured;
    this.emit(next);
    return synth;
  }

  async undo(): Promise<void> {
    const popped = st.popUndo(this.state);
    if (!popped) return;
    const sessionId = this.view.session_id;
    let view = await this.client.reset(sessionId);
    if (popped.replay.length > 0) {
      view = await this.client.postEdits(view.session_id, view.revision, popped.replay);
    }
    this.emit(st.afterUndoReplay(popped.state, view));
  }

  async redo(): Promise<void> {
    const popped = st.popRedo(this.state);
    if (!popped) return;
    const view = this.view;
    const next = await this.client.postEdits(view.session_id, view.revision, popped.delta);
    this.emit(st.afterRedo(popped.state, next, popped.delta));
  }

  async reset(): Promise<void> {
    const view = await this.client.reset(this.view.session_id);
    this.emit(st.clearedScript(this.state, view));
  }

  async reload(): Promise<void> {
    const view = await this.client.getFeatures(this.view.session_id);
    this.emit(st.withView(this.state, view));
  }
}
