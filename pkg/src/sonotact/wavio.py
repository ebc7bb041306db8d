"""RIFF/WAVE mono I/O: 16-bit PCM and 32-bit IEEE float. Stereo is averaged on read."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.io.wavfile

from .audio import Waveform
from .errors import UnreadableWav


def read_wav(path) -> Waveform:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.io.wavfile.WavFileWarning)
            rate, data = scipy.io.wavfile.read(path)
    except (OSError, ValueError, EOFError) as exc:
        raise UnreadableWav(f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise UnreadableWav(f"{path}: unsupported sample type {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.size == 0:
        raise UnreadableWav(f"{path}: no samples")
    try:
        return Waveform(x, int(rate))
    except ValueError as exc:
        raise UnreadableWav(f"{path}: {exc}") from exc


def write_wav(path, w: Waveform, sample_format: str = "float32") -> None:
    """Write mono ``w``; ``sample_format`` is ``"float32"`` or ``"pcm16"``."""
    if sample_format == "float32":
        data = w.samples.astype("<f4")
    elif sample_format == "pcm16":
        data = np.round(np.clip(w.samples.astype(np.float64), -1.0, 32767 / 32768) * 32768.0)
        data = data.astype("<i2")
    else:
        raise ValueError(f"unknown sample format {sample_format!r}")
    scipy.io.wavfile.write(path, w.sample_rate_hz, data)
