/** A/B playback of the base vs edited renditions. Playback failures are
 * reported through the status callback and never block editing. */

export class AbPlayback {
  private audio: HTMLAudioElement | null = null;

  constructor(readonly onStatus: (msg: string) => void = () => {}) {}

  play(url: string, label: string): void {
    try {
      this.stop();
      this.audio = new Audio(url);
      this.audio.onerror = () => this.onStatus(`playback failed for ${label}`);
      void this.audio.play().catch((err) => {
        this.onStatus(`playback failed for ${label}: ${err}`);
      });
      this.onStatus(`playing ${label}`);
    } catch (err) {
      this.onStatus(`playback failed for ${label}: ${err}`);
    }
  }

  stop(): void {
    if (this.audio) {
      this.audio.pause();
      this.audio = null;
    }
  }
}
