/** Typed client for the editor session service. The client never does
 * feature math: every number it exposes came out of a service response. */

export type FeatureName = "f0" | "energy" | "duration";
export const FEATURES: FeatureName[] = ["f0", "energy", "duration"];

export interface PhoneInfo {
  symbol: string;
  kind: "phone" | "word_boundary" | "sentence_boundary";
  stressed: boolean;
}

export interface FeatureStats {
  mean: number;
  std: number;
}

export interface EditAction {
  shift_sigma?: number;
  set_normalized?: number;
  scale_raw?: number;
}

export interface EditOp {
  selector: "all_phones" | { phone_indices: number[] }
    | { stressed_vowels_random: { fraction: number; seed: number } };
  feature: FeatureName;
  action: EditAction;
}

export interface SessionView {
  session_id: string;
  revision: number;
  utterance_id: string;
  speaker_id: string;
  phones: PhoneInfo[];
  normalized: number[][];
  raw: number[][];
  base_normalized: number[][];
  measured: number[][] | null;
  stats: Record<FeatureName, FeatureStats>;
  script: { ops: unknown[]; meta: Record<string, unknown> };
}

export interface SynthesizeView extends SessionView {
  audio_url: string;
  n_frames: number;
  warnings: string[];
}

export interface UtteranceInfo {
  utterance_id: string;
  speaker_id: string;
  n_tokens: number;
}

export class ConflictError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "ConflictError";
  }
}

async function expectJson<T>(resp: Response): Promise<T> {
  if (resp.status === 409) {
    const body = await resp.json().catch(() => ({ detail: "revision conflict" }));
    throw new ConflictError(String((body as { detail?: string }).detail ?? "conflict"));
  }
  if (!resp.ok) {
    const text = await resp.text();
    throw new Error(`${resp.status} ${resp.statusText}: ${text}`);
  }
  return (await resp.json()) as T;
}

export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async listUtterances(): Promise<UtteranceInfo[]> {
    return expectJson(await fetch(this.url("/utterances")));
  }

  async createSession(utteranceId: string, speakerId?: string): Promise<SessionView> {
    return expectJson(await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ utterance_id: utteranceId, speaker_id: speakerId ?? null }),
    }));
  }

  async getFeatures(sessionId: string): Promise<SessionView> {
    return expectJson(await fetch(this.url(`/sessions/${sessionId}/features`)));
  }

  async postEdits(sessionId: string, revision: number, ops: EditOp[]): Promise<SessionView> {
    return expectJson(await fetch(this.url(`/sessions/${sessionId}/edits`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, ops, meta: {} }),
    }));
  }

  async synthesize(sessionId: string): Promise<SynthesizeView> {
    return expectJson(await fetch(this.url(`/sessions/${sessionId}/synthesize`), {
      method: "POST",
    }));
  }

  async reset(sessionId: string): Promise<SessionView> {
    return expectJson(await fetch(this.url(`/sessions/${sessionId}/reset`), {
      method: "POST",
    }));
  }

  audioUrl(relative: string): string {
    return this.url(relative);
  }

  async fetchAudio(relative: string): Promise<ArrayBuffer> {
    const resp = await fetch(this.url(relative));
    if (!resp.ok) throw new Error(`audio fetch failed: ${resp.status}`);
    return await resp.arrayBuffer();
  }
}
