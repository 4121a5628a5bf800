/** Audible alert cue: two short synthesized yips, muteable. */

export class AlertSound {
  muted = false;
  private context: AudioContext | null = null;

  toggleMute(): boolean {
    this.muted = !this.muted;
    return this.muted;
  }

  play(): void {
    if (this.muted || typeof AudioContext === 'undefined') return;
    this.context = this.context ?? new AudioContext();
    const t0 = this.context.currentTime;
    this.yip(t0, 620);
    this.yip(t0 + 0.18, 840);
  }

  private yip(at: number, hz: number): void {
    if (!this.context) return;
    const oscillator = this.context.createOscillator();
    const gain = this.context.createGain();
    oscillator.type = 'square';
    oscillator.frequency.setValueAtTime(hz, at);
    gain.gain.setValueAtTime(0.22, at);
    gain.gain.exponentialRampToValueAtTime(0.001, at + 0.14);
    oscillator.connect(gain).connect(this.context.destination);
    oscillator.start(at);
    oscillator.stop(at + 0.15);
  }
}
