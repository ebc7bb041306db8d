"""Deterministic audio DSP: probe sweeps, STFT power, mel filterbanks, log-mel
images and Welch PSD curves.

All heavy lifting is done in float64; returned spectrogram grids are float32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .errors import (
    FrequencyAboveNyquist,
    InvalidAmplitude,
    InvalidBand,
    NonPositiveDuration,
    SignalTooShort,
)

LOG_FLOOR = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Waveform:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float32).reshape(-1)
        if samples.size == 0:
            raise SignalTooShort("waveform has no samples")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class MelSpectrogram:
    data: np.ndarray  # (n_mels, n_frames)
    hop_s: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValueError(f"mel grid must be 2-D with >= 1 band, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("mel grid contains non-finite cells")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def n_mels(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class PsdCurve:
    freqs_hz: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=np.float64)
        p = np.asarray(self.power, dtype=np.float64)
        if f.shape != p.shape or f.ndim != 1:
            raise ValueError("frequency and power arrays must be 1-D of equal length")
        if f.size > 1 and not np.all(np.diff(f) > 0):
            raise ValueError("frequencies must be strictly ascending")
        if np.any(p < 0):
            raise ValueError("power must be nonnegative")
        object.__setattr__(self, "freqs_hz", _frozen(f))
        object.__setattr__(self, "power", _frozen(p))

    def band_mean(self, lo_hz: float, hi_hz: float) -> float:
        sel = (self.freqs_hz >= lo_hz) & (self.freqs_hz <= hi_hz)
        return float(self.power[sel].mean())

    def peak_hz(self) -> float:
        return float(self.freqs_hz[int(np.argmax(self.power))])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("freq_hz,power\n")
            for f, p in zip(self.freqs_hz, self.power):
                fh.write(f"{float(f)!r},{float(p)!r}\n")


@dataclass(frozen=True, eq=False)
class MelFilterbank:
    weights: np.ndarray  # (n_mels, window_len // 2 + 1)
    f_min_hz: float
    f_max_hz: float
    centers_hz: np.ndarray = field(repr=False)

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class MelConfig:
    window_len: int = 2048
    hop: int = 512
    n_mels: int = 64
    f_min_hz: float = 20.0
    f_max_hz: float = 20000.0


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def generate_sweep(
    duration_s: float,
    f_start_hz: float,
    f_end_hz: float,
    sample_rate_hz: int,
    amplitude: float = 1.0,
) -> Waveform:
    """Exponential (logarithmic) sine sweep from ``f_start_hz`` to ``f_end_hz``.

    ``x(t) = A sin(2 pi f0 T / ln k (k^(t/T) - 1))`` with ``k = f_end / f_start``;
    ``k == 1`` degenerates to a pure tone.
    """
    if not duration_s > 0:
        raise NonPositiveDuration(f"duration must be positive, got {duration_s}")
    if not 0 < amplitude <= 1:
        raise InvalidAmplitude(f"amplitude must lie in (0, 1], got {amplitude}")
    if not 0 < f_start_hz <= f_end_hz:
        raise InvalidBand(f"need 0 < f_start <= f_end, got {f_start_hz}, {f_end_hz}")
    if f_end_hz >= sample_rate_hz / 2:
        raise FrequencyAboveNyquist(
            f"end frequency {f_end_hz} Hz is not below Nyquist ({sample_rate_hz / 2} Hz)"
        )
    n = int(round(duration_s * sample_rate_hz))
    if n < 1:
        raise NonPositiveDuration("duration rounds to zero samples")
    t = np.arange(n, dtype=np.float64) / sample_rate_hz
    k = f_end_hz / f_start_hz
    if k == 1.0:
        phase = 2 * np.pi * f_start_hz * t
    else:
        T = float(duration_s)
        phase = 2 * np.pi * f_start_hz * T / math.log(k) * (np.power(k, t / T) - 1.0)
    return Waveform(amplitude * np.sin(phase), sample_rate_hz)


def sweep_instantaneous_hz(t_s: float, duration_s: float, f_start_hz: float, f_end_hz: float) -> float:
    return f_start_hz * (f_end_hz / f_start_hz) ** (t_s / duration_s)


def hann(n: int) -> np.ndarray:
    """Periodic Hann window (the STFT convention)."""
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def frame_signal(x: np.ndarray, window_len: int, hop: int) -> np.ndarray:
    if window_len < 1 or window_len & (window_len - 1):
        raise ValueError(f"window length must be a power of two, got {window_len}")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    if x.size < window_len:
        raise SignalTooShort(f"{x.size} samples is shorter than the {window_len}-sample window")
    return np.lib.stride_tricks.sliding_window_view(x, window_len)[::hop]


def stft_power(w: Waveform, window_len: int = 2048, hop: int = 512) -> np.ndarray:
    """Magnitude-squared one-sided STFT, shape ``(window_len // 2 + 1, n_frames)``."""
    frames = frame_signal(w.samples.astype(np.float64), window_len, hop)
    spec = np.fft.rfft(frames * hann(window_len), axis=1)
    return (spec.real**2 + spec.imag**2).T


def mel_filterbank(
    n_mels: int = 64,
    window_len: int = 2048,
    sample_rate_hz: int = 44100,
    f_min_hz: float = 20.0,
    f_max_hz: float = 20000.0,
) -> MelFilterbank:
    """Triangular mel filters with unit (un-normalized) peaks on the rFFT bin grid."""
    if n_mels < 2:
        raise InvalidBand(f"need at least 2 mel bands, got {n_mels}")
    if not 0 <= f_min_hz < f_max_hz <= sample_rate_hz / 2:
        raise InvalidBand(
            f"band [{f_min_hz}, {f_max_hz}] Hz invalid for sample rate {sample_rate_hz}"
        )
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min_hz), hz_to_mel(f_max_hz), n_mels + 2))
    bins = np.arange(window_len // 2 + 1) * (sample_rate_hz / window_len)
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (bins[None, :] - lo) / (mid - lo)
    down = (hi - bins[None, :]) / (hi - mid)
    weights = np.maximum(0.0, np.minimum(up, down))
    empty = np.flatnonzero(weights.max(axis=1) <= 0)
    if empty.size:
        raise InvalidBand(
            f"mel bands {empty.tolist()} cover no FFT bin; use fewer bands or a longer window"
        )
    return MelFilterbank(_frozen(weights), float(f_min_hz), float(f_max_hz), _frozen(edges[1:-1]))


_FB_CACHE: dict = {}


def _cached_filterbank(cfg: MelConfig, sample_rate_hz: int) -> MelFilterbank:
    key = (cfg.n_mels, cfg.window_len, sample_rate_hz, cfg.f_min_hz, cfg.f_max_hz)
    fb = _FB_CACHE.get(key)
    if fb is None:
        fb = _FB_CACHE[key] = mel_filterbank(*key)
    return fb


def mel_power(w: Waveform, cfg: MelConfig = MelConfig()) -> np.ndarray:
    fb = _cached_filterbank(cfg, w.sample_rate_hz)
    return fb.weights @ stft_power(w, cfg.window_len, cfg.hop)


def log_mel_power(w: Waveform, cfg: MelConfig = MelConfig()) -> np.ndarray:
    """Un-normalized ``log10(P + 1e-10)`` mel grid (float64)."""
    return np.log10(mel_power(w, cfg) + LOG_FLOOR)


def minmax_normalize(grid: np.ndarray) -> np.ndarray:
    lo, hi = grid.min(), grid.max()
    if hi == lo:
        return np.zeros_like(grid)
    return (grid - lo) / (hi - lo)


def log_mel_spectrogram(w: Waveform, cfg: MelConfig = MelConfig()) -> MelSpectrogram:
    grid = minmax_normalize(log_mel_power(w, cfg))
    return MelSpectrogram(grid, cfg.hop / w.sample_rate_hz)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-centred bilinear resize of a 2-D grid; equal sizes are the identity."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    in_h, in_w = img.shape

    def axis(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0, n_in - 1)
        i0 = np.floor(src).astype(int)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, src - i0

    r0, r1, fr = axis(in_h, out_h)
    c0, c1, fc = axis(in_w, out_w)
    top = img[r0][:, c0] * (1 - fc) + img[r0][:, c1] * fc
    bot = img[r1][:, c0] * (1 - fc) + img[r1][:, c1] * fc
    return top * (1 - fr[:, None]) + bot * fr[:, None]


def spectrogram_to_image(m: MelSpectrogram, out_h: int = 64, out_w: int = 64) -> np.ndarray:
    """Single-channel ``(1, out_h, out_w)`` image; low mel bands stay in row 0."""
    img = resize_bilinear(m.data.astype(np.float64), out_h, out_w)
    return np.clip(img, 0.0, 1.0).astype(np.float32)[None]


def welch_psd(w: Waveform, segment_len: int = 4096, overlap_frac: float = 0.5) -> PsdCurve:
    """Hann-windowed averaged periodogram, one-sided, power per Hz."""
    if not 0 <= overlap_frac < 1:
        raise ValueError(f"overlap fraction must lie in [0, 1), got {overlap_frac}")
    if segment_len > len(w):
        raise SignalTooShort(f"{len(w)} samples is shorter than the {segment_len}-sample segment")
    freqs, power = scipy.signal.welch(
        w.samples.astype(np.float64),
        fs=w.sample_rate_hz,
        window="hann",
        nperseg=segment_len,
        noverlap=int(segment_len * overlap_frac),
        detrend=False,
        return_onesided=True,
        scaling="density",
        average="mean",
    )
    return PsdCurve(freqs, np.maximum(power, 0.0))
