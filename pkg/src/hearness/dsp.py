"""Built-in baseline embedding extractors.

Three baselines keep the harness exercisable without any external model:
log-mel spectrogram frames, MFCCs, and a seeded random projection of the
log-mel frames through a ReLU.  All extractors are pure functions of
(audio, config): same input, bitwise-same output.

Conventions (fixed so golden tests stay stable):
  * Hann window, frames fully inside the signal (no edge padding); frame t
    starts at t * hop and its timestamp is t * hop seconds.
  * Mel filterbank: triangular filters on the HTK mel scale
    (mel = 2595 * log10(1 + f/700)), each normalized to unit area in Hz.
  * Power spectrum |rfft|^2 of the windowed frame, then natural log of
    (mel energy + log_floor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .embio import SceneEmbedding, TimestampEmbedding
from .errors import AudioTooShort, EmptyEmbedding


@dataclass(frozen=True)
class DspConfig:
    sample_rate: int
    window_ms: float = 25.0
    hop_ms: float = 50.0  # matches the harness's default timestamp interval
    n_fft: int | None = None  # default: next power of two >= window samples
    n_mels: int = 64
    n_mfcc: int = 20
    log_floor: float = 1e-10
    fmin: float = 0.0
    fmax: float | None = None  # default: sample_rate / 2
    projection_dim: int = 512
    projection_seed: int = 0

    def __post_init__(self):
        if self.hop_ms <= 0 or self.window_ms <= 0:
            raise ValueError("window_ms and hop_ms must be positive")
        if self.n_mfcc > self.n_mels:
            raise ValueError("n_mfcc must not exceed n_mels")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")
        fmax = self.effective_fmax
        if not (0 <= self.fmin < fmax <= self.sample_rate / 2):
            raise ValueError("need 0 <= fmin < fmax <= sample_rate/2")
        n_fft = self.effective_n_fft
        if n_fft < self.window_samples or n_fft & (n_fft - 1):
            raise ValueError("n_fft must be a power of two >= the window length")
        if self.projection_dim < 1:
            raise ValueError("projection_dim must be positive")

    @property
    def window_samples(self) -> int:
        return round(self.sample_rate * self.window_ms / 1000.0)

    @property
    def hop_samples(self) -> int:
        return round(self.sample_rate * self.hop_ms / 1000.0)

    @property
    def effective_fmax(self) -> float:
        return self.sample_rate / 2 if self.fmax is None else self.fmax

    @property
    def effective_n_fft(self) -> int:
        if self.n_fft is not None:
            return self.n_fft
        n = 1
        while n < self.window_samples:
            n <<= 1
        return n


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_centers(cfg: DspConfig) -> np.ndarray:
    """Center frequency in Hz of each of the n_mels triangular filters."""
    mels = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.effective_fmax), cfg.n_mels + 2)
    return mel_to_hz(mels)[1:-1]


def mel_filterbank(cfg: DspConfig) -> np.ndarray:
    """(n_mels, n_fft//2 + 1) triangular filters, each with unit area in Hz."""
    n_fft = cfg.effective_n_fft
    bin_freqs = np.arange(n_fft // 2 + 1, dtype=np.float64) * cfg.sample_rate / n_fft
    mels = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.effective_fmax), cfg.n_mels + 2)
    edges = mel_to_hz(mels)  # (n_mels + 2,) left/center/right per filter

    fbank = np.zeros((cfg.n_mels, bin_freqs.size))
    for m in range(cfg.n_mels):
        left, center, right = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        fbank[m] = np.maximum(0.0, np.minimum(rising, falling))
        fbank[m] *= 2.0 / (right - left)  # unit area
    return fbank


def _frame(audio: np.ndarray, cfg: DspConfig) -> np.ndarray:
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim != 1:
        raise ValueError("audio must be a mono 1-D array")
    win, hop = cfg.window_samples, cfg.hop_samples
    if audio.size < win:
        raise AudioTooShort(
            f"{audio.size} samples is shorter than one {win}-sample window"
        )
    n_frames = (audio.size - win) // hop + 1
    frames = np.lib.stride_tricks.sliding_window_view(audio, win)[::hop][:n_frames]
    return frames


def _timestamps(n_frames: int, cfg: DspConfig) -> np.ndarray:
    return np.arange(n_frames, dtype=np.float64) * (cfg.hop_ms / 1000.0)


def mel_power(audio, cfg: DspConfig) -> np.ndarray:
    """(n_frames, n_mels) linear mel energies, before the log."""
    frames = _frame(audio, cfg)
    window = np.hanning(cfg.window_samples)
    spectrum = np.fft.rfft(frames * window, n=cfg.effective_n_fft, axis=1)
    power = np.abs(spectrum) ** 2
    return power @ mel_filterbank(cfg).T


def logmel(audio, cfg: DspConfig) -> TimestampEmbedding:
    """Log-mel spectrogram frames with timestamps in seconds."""
    mel = mel_power(audio, cfg)
    values = np.log(mel + cfg.log_floor)
    return TimestampEmbedding(
        timestamps=_timestamps(values.shape[0], cfg),
        matrix=values.astype(np.float32),
    )


def mfcc(audio, cfg: DspConfig) -> TimestampEmbedding:
    """First n_mfcc coefficients of the orthonormal DCT-II of each log-mel frame."""
    mel = np.log(mel_power(audio, cfg) + cfg.log_floor)
    coeffs = scipy.fft.dct(mel, type=2, norm="ortho", axis=1)[:, : cfg.n_mfcc]
    return TimestampEmbedding(
        timestamps=_timestamps(coeffs.shape[0], cfg),
        matrix=coeffs.astype(np.float32),
    )


def projection_matrix(cfg: DspConfig) -> np.ndarray:
    """The fixed seeded Gaussian projection, entries ~ N(0, 1/n_mels)."""
    rng = np.random.default_rng(cfg.projection_seed)
    return rng.normal(0.0, 1.0 / np.sqrt(cfg.n_mels), size=(cfg.n_mels, cfg.projection_dim))


def project_frames(frames: np.ndarray, cfg: DspConfig) -> np.ndarray:
    """Apply the seeded projection and ReLU to (T, n_mels) frames."""
    return np.maximum(0.0, np.asarray(frames, dtype=np.float64) @ projection_matrix(cfg))


def random_projection_embed(audio, cfg: DspConfig) -> TimestampEmbedding:
    """Log-mel frames through the seeded Gaussian projection and a ReLU."""
    mel = np.log(mel_power(audio, cfg) + cfg.log_floor)
    projected = project_frames(mel, cfg)
    return TimestampEmbedding(
        timestamps=_timestamps(projected.shape[0], cfg),
        matrix=projected.astype(np.float32),
    )


def scene_pool(emb) -> SceneEmbedding:
    """Reduce a timestamp embedding to a scene vector by the temporal mean."""
    matrix = emb.matrix if isinstance(emb, TimestampEmbedding) else np.asarray(emb)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise EmptyEmbedding("scene_pool needs at least one frame")
    return SceneEmbedding(vector=matrix.mean(axis=0, dtype=np.float64).astype(np.float32))


BASELINES = {
    "logmel": logmel,
    "mfcc": mfcc,
    "randproj": random_projection_embed,
}
