/** Scripted editor round trip against the real service.
 *
 * Builds a small corpus with the batch pipeline, starts the session
 * service as a subprocess, then drives the same controller code the
 * pointer handlers use: create a session, drag one phone's F0 to
 * +0.5 sigma, synthesize. The resulting edit script must, replayed
 * server-side on a fresh session, change only that phone's measured F0
 * (3% locality bound), and undo must restore the base state exactly.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ServiceClient } from "../src/api.js";
import { EditorController } from "../src/controller.js";
import { fullScript } from "../src/state.js";

const PY = process.env.PROSOCTL_PYTHON ?? "python3";
const PORT = 8901 + (process.pid % 50);
const BASE = `http://127.0.0.1:${PORT}`;

let work: string;
let server: ChildProcess | null = null;

function run(args: string[]): void {
  const res = spawnSync(PY, args, { stdio: "pipe", encoding: "utf-8" });
  if (res.status !== 0) {
    throw new Error(`${PY} ${args.join(" ")} failed:\n${res.stdout}\n${res.stderr}`);
  }
}

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/utterances`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 300));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  work = mkdtempSync(join(tmpdir(), "prosody-editor-"));
  run(["-m", "prosoctl.demo", join(work, "corpus"), "--utterances", "6", "--seed", "3"]);
  run(["-m", "prosoctl.cli", "extract", "--align", join(work, "corpus/align"),
       "--wav", join(work, "corpus/wav"), "--out", join(work, "feats")]);
  run(["-m", "prosoctl.cli", "stats", "--features", join(work, "feats"),
       "--out", join(work, "stats.json")]);
  run(["-m", "prosoctl.cli", "train-afp", "--features", join(work, "feats"),
       "--out", join(work, "afp.npz"), "--iterations", "400", "--seed", "5"]);
  server = spawn(PY, ["-m", "prosoctl.cli", "serve",
                      "--align", join(work, "corpus/align"),
                      "--ckpt", join(work, "afp.npz"),
                      "--stats", join(work, "stats.json"),
                      "--port", String(PORT)],
                 { stdio: "ignore" });
  await waitForService();
});

afterAll(() => {
  server?.kill();
  rmSync(work, { recursive: true, force: true });
});

describe("editor round trip", () => {
  it("drag one phone's F0 to +0.5σ: local effect, replayable, undo exact", async () => {
    const client = new ServiceClient(BASE);
    const controller = new EditorController(client);

    const utts = await client.listUtterances();
    const target = utts.reduce((a, b) => (b.n_tokens > a.n_tokens ? b : a));
    await controller.connect(target.utterance_id);

    const baseView = controller.state.view!;
    const baseNormalized = structuredClone(baseView.normalized);
    const baseMeasured = controller.state.baseMeasured!;
    expect(baseMeasured).not.toBeNull();
    const f0Stats = baseView.stats.f0;

    // a voiced phone whose base value sits far from the +0.5σ drag target
    let phone = -1;
    let bestGap = 0.3;
    baseView.phones.forEach((p, i) => {
      const gap = Math.abs(0.5 - baseView.normalized[i][0]);
      if (p.kind === "phone" && baseMeasured[i][0] > 50 && gap > bestGap) {
        phone = i;
        bestGap = gap;
      }
    });
    expect(phone).toBeGreaterThanOrEqual(0);
    const expectedDelta = (0.5 - baseView.normalized[phone][0]) * f0Stats.std;

    // the drag, through the same code path the pointer handler calls
    await controller.dragPhone(phone, "f0", 0.5);
    expect(controller.state.view!.normalized[phone][0]).toBeCloseTo(0.5, 10);
    expect(controller.state.undoStack).toHaveLength(1);

    const synth = await controller.synthesize();
    const edited = synth.measured!;

    // on-target phone realized the request
    const measuredDelta = edited[phone][0] - baseMeasured[phone][0];
    expect(Math.abs(measuredDelta - expectedDelta))
      .toBeLessThan(Math.max(2.0, 0.3 * Math.abs(expectedDelta)));

    // locality: every other phone's F0 within 3% of the speaker mean scale
    baseView.phones.forEach((p, i) => {
      if (i === phone || p.kind !== "phone") return;
      const drift = Math.abs(edited[i][0] - baseMeasured[i][0]) / f0Stats.mean;
      expect(drift, `phone ${i} (${p.symbol}) drifted`).toBeLessThan(0.03);
      expect(edited[i][2]).toBe(baseMeasured[i][2]); // durations untouched
    });

    // the script artifact replays server-side to the same local change
    const script = fullScript(controller.state);
    expect(script).toEqual([{
      selector: { phone_indices: [phone] },
      feature: "f0",
      action: { set_normalized: 0.5 },
    }]);
    const replayView = await client.createSession(target.utterance_id);
    const replayEdited = await client.postEdits(replayView.session_id,
                                                replayView.revision, script);
    expect(replayEdited.normalized).toEqual(controller.state.view!.normalized);
    const replaySynth = await client.synthesize(replayEdited.session_id);
    expect(replaySynth.measured).toEqual(synth.measured);
    const wavA = await client.fetchAudio(synth.audio_url);
    const wavB = await client.fetchAudio(replaySynth.audio_url);
    expect(Buffer.from(wavA).equals(Buffer.from(wavB))).toBe(true);

    // undo restores the base state exactly
    await controller.undo();
    expect(controller.state.undoStack).toHaveLength(0);
    expect(controller.state.view!.normalized).toEqual(baseNormalized);

    // redo brings the edit back exactly
    await controller.redo();
    expect(controller.state.view!.normalized[phone][0]).toBeCloseTo(0.5, 10);
    expect(controller.state.undoStack).toHaveLength(1);
  });

  it("surfaces revision conflicts instead of merging", async () => {
    const client = new ServiceClient(BASE);
    const controller = new EditorController(client);
    const utts = await client.listUtterances();
    await controller.connect(utts[0].utterance_id);

    // another writer races ahead of the controller
    const view = controller.state.view!;
    await client.postEdits(view.session_id, view.revision,
                           [{ selector: "all_phones", feature: "energy",
                              action: { shift_sigma: 0.1 } }]);
    await controller.laneShift("f0", 0.25);
    expect(controller.state.conflict).toBe(true);
    expect(controller.state.undoStack).toHaveLength(0);

    await controller.reload();
    expect(controller.state.conflict).toBe(false);
  });
});
