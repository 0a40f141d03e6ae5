/** Browser bootstrap: wires the controller to the lane SVG and toolbar. */

import { ServiceClient } from "./api.js";
import type { FeatureName } from "./api.js";
import { EditorController } from "./controller.js";
import { renderLanes } from "./lanes.js";
import { AbPlayback } from "./playback.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const baseUrl = params.get("service") ?? "http://127.0.0.1:8765";
  const client = new ServiceClient(baseUrl);
  const status = $("status");
  const playback = new AbPlayback((msg) => { status.textContent = msg; });

  const svg = $("lanes") as unknown as SVGSVGElement;
  const controller = new EditorController(client, (state) => {
    if (state.view) {
      renderLanes(svg, state.view, state.baseMeasured, state.selected, {
        onDrag: (i, f, v) => void controller.dragPhone(i, f, v).then(render),
        onToggleSelect: (i) => controller.toggleSelect(i),
      });
    }
    $("undo").toggleAttribute("disabled", state.undoStack.length === 0);
    $("redo").toggleAttribute("disabled", state.redoStack.length === 0);
    $("conflict").style.display = state.conflict ? "block" : "none";
    ($("play-a") as HTMLButtonElement).disabled = !state.audio.base;
    ($("play-b") as HTMLButtonElement).disabled = !state.audio.edited;
  });
  const render = () => controller.onChange(controller.state);

  const select = $("utterance") as HTMLSelectElement;
  for (const u of await client.listUtterances()) {
    const opt = document.createElement("option");
    opt.value = u.utterance_id;
    opt.textContent = `${u.utterance_id} (${u.speaker_id}, ${u.n_tokens} tokens)`;
    select.appendChild(opt);
  }

  $("open").onclick = () => void controller.connect(select.value)
    .catch((err) => { status.textContent = String(err); });
  $("synthesize").onclick = () => void controller.synthesize()
    .then(() => { status.textContent = "synthesized"; })
    .catch((err) => { status.textContent = String(err); });
  $("undo").onclick = () => void controller.undo();
  $("redo").onclick = () => void controller.redo();
  $("reset").onclick = () => void controller.reset();
  $("reload").onclick = () => void controller.reload();
  $("play-a").onclick = () => {
    const url = controller.state.audio.base;
    if (url) playback.play(client.audioUrl(url), "A (base)");
  };
  $("play-b").onclick = () => {
    const url = controller.state.audio.edited;
    if (url) playback.play(client.audioUrl(url), "B (edited)");
  };
  for (const feature of ["f0", "energy", "duration"] as FeatureName[]) {
    const slider = $(`shift-${feature}`) as HTMLInputElement;
    slider.onchange = () => {
      const k = Number(slider.value);
      slider.value = "0";
      if (k !== 0) void controller.laneShift(feature, k);
    };
  }
}

void boot();
