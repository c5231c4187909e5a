"""Built-in DSP baselines on a synthetic signal.

Synthesizes one second that glides from a 440 Hz tone into noise, then
walks through the three built-in extractors: log-mel frames, MFCCs, and the
seeded random projection.  Everything is a pure function of (audio,
config), so the printed checksums are stable across runs and machines.
"""

import numpy as np

from hearness import dsp

SR = 16000

t = np.arange(SR) / SR
audio = np.where(
    t < 0.5,
    0.6 * np.sin(2 * np.pi * 440 * t),
    0.2 * np.sin(2 * np.pi * 440 * t) + np.random.default_rng(0).normal(0, 0.2, SR),
)

cfg = dsp.DspConfig(sample_rate=SR)
print(f"config: {cfg.window_ms} ms Hann window, {cfg.hop_ms} ms hop, "
      f"{cfg.n_mels} mel bands, n_fft={cfg.effective_n_fft}")

logmel = dsp.logmel(audio, cfg)
print(f"\nlog-mel: {logmel.n_frames} frames x {logmel.dim} dims")
print(f"  timestamps: {logmel.timestamps[:4]} ... (constant {cfg.hop_ms} ms spacing)")

# the tonal half concentrates energy near the 440 Hz mel band
centers = dsp.mel_filter_centers(cfg)
tonal_peak = int(np.argmax(logmel.matrix[:10].mean(axis=0)))
print(f"  peak band over the tonal half: {tonal_peak} "
      f"(center {centers[tonal_peak]:.0f} Hz, tone at 440 Hz)")
noisy_frame = logmel.matrix[-1]
print(f"  last (noisy) frame spread: min {noisy_frame.min():.1f}, "
      f"max {noisy_frame.max():.1f}")

mfcc = dsp.mfcc(audio, cfg)
print(f"\nmfcc: {mfcc.n_frames} frames x {mfcc.dim} coefficients")
print(f"  frame 0 head: {np.round(mfcc.matrix[0, :4], 2)}")

proj = dsp.random_projection_embed(audio, cfg)
print(f"\nrandom projection: {proj.n_frames} frames x {proj.dim} dims "
      f"(seed {cfg.projection_seed})")
print(f"  ReLU sparsity: {(proj.matrix == 0).mean():.0%} zeros")

pooled = dsp.scene_pool(logmel)
print(f"\nscene pooling: temporal mean -> vector of {pooled.dim} dims")
print(f"  deterministic checksum: {float(np.abs(pooled.vector).sum()):.6f}")
