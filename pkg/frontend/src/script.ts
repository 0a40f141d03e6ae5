/** Interaction-to-edit-script mapping: what each gesture emits. */

import type { EditOp, FeatureName } from "./api.js";

/** Dragging one phone's bar sets that phone's normalized value. */
export function dragToOp(index: number, feature: FeatureName,
                         valueSigma: number): EditOp {
  return {
    selector: { phone_indices: [index] },
    feature,
    action: { set_normalized: valueSigma },
  };
}

/** A lane-wide slider shifts every (non-boundary) phone by k sigma. */
export function laneShiftToOp(feature: FeatureName, k: number): EditOp {
  return { selector: "all_phones", feature, action: { shift_sigma: k } };
}

/** Multi-selection plus a shift emits a phone_indices selector. */
export function selectionShiftToOp(indices: number[], feature: FeatureName,
                                   k: number): EditOp {
  return {
    selector: { phone_indices: [...indices].sort((a, b) => a - b) },
    feature,
    action: { shift_sigma: k },
  };
}
