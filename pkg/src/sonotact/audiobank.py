"""Labeled audio bank: parametric contact-mode clips or ingested WAV recordings,
plus label-conditioned sampling."""

from __future__ import annotations

import enum
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import Waveform, generate_sweep
from .errors import EmptyBank, MissingLabel, UnreadableWav
from .wavio import read_wav, write_wav

SAMPLE_RATE = 44100
CLIP_SAMPLES = SAMPLE_RATE
MANIFEST_NAME = "bank.jsonl"


class ContactLabel(enum.Enum):
    FREE = "free"
    POINT = "point"
    LINE = "line"
    PATCH = "patch"

    @property
    def index(self) -> int:
        return _LABEL_ORDER.index(self)

    @classmethod
    def parse(cls, value) -> "ContactLabel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise MissingLabel(
                f"unknown contact label {value!r}; expected one of free|point|line|patch"
            ) from None


_LABEL_ORDER = list(ContactLabel)
LABELS = tuple(_LABEL_ORDER)


@dataclass(frozen=True)
class SynthProfile:
    """Spectral envelope parameters per contact mode (gains in dB)."""

    point_center_hz: float = 200.0
    point_width_hz: float = 80.0
    point_gain_db: float = 12.0
    line_gain_db: float = 8.0
    line_lo_hz: float = 300.0
    line_hi_hz: float = 1000.0
    line_rolloff_db_per_oct: float = 3.0
    line_low_slope_db_per_oct: float = 6.0
    patch_gain_db: float = -10.0
    patch_knee_hz: float = 100.0
    free_gain_db: float = 0.0
    gain_jitter_db: float = 3.0
    center_jitter_frac: float = 0.2
    snr_db: float = 30.0
    # shared pickup response of the receiving transducer (2nd-order high-pass)
    pickup_highpass_hz: float = 100.0
    sweep_amplitude: float = 0.1

    def __post_init__(self):
        gains = [self.point_gain_db, self.line_gain_db, self.patch_gain_db, self.free_gain_db,
                 self.gain_jitter_db, self.line_rolloff_db_per_oct]
        if not all(np.isfinite(gains)):
            raise ValueError("profile gains must be finite")
        if not self.snr_db > 0:
            raise ValueError(f"SNR must be positive, got {self.snr_db} dB")


def _highpass2_db(f: np.ndarray, corner_hz: float) -> np.ndarray:
    r4 = (f / corner_hz) ** 4
    with np.errstate(divide="ignore"):
        return 10 * np.log10(r4 / (1 + r4))


def envelope_db(label: ContactLabel, f: np.ndarray, profile: SynthProfile,
                center_scale: float = 1.0) -> np.ndarray:
    """Label envelope in dB over frequencies ``f`` (Hz), before gain jitter."""
    f = np.asarray(f, dtype=np.float64)
    if label is ContactLabel.FREE:
        return np.full_like(f, profile.free_gain_db)
    if label is ContactLabel.POINT:
        c = profile.point_center_hz * center_scale
        return profile.point_gain_db * np.exp(-0.5 * ((f - c) / profile.point_width_hz) ** 2)
    if label is ContactLabel.LINE:
        lo = profile.line_lo_hz * center_scale
        hi = profile.line_hi_hz * center_scale
        fs = np.maximum(f, 1e-3)
        g = np.full_like(f, profile.line_gain_db)
        g = np.where(fs > hi, g - profile.line_rolloff_db_per_oct * np.log2(fs / hi), g)
        return np.where(fs < lo, g - profile.line_low_slope_db_per_oct * np.log2(lo / fs), g)
    knee = profile.patch_knee_hz * center_scale
    return profile.patch_gain_db + _highpass2_db(np.maximum(f, 1e-3), knee)


def synth_clip(label: ContactLabel, profile: SynthProfile = SynthProfile(), seed: int = 0) -> Waveform:
    """One second of probe-sweep response for ``label``; deterministic per (label, seed)."""
    label = ContactLabel.parse(label)
    rng = np.random.default_rng([int(seed), label.index])
    gain_db = rng.uniform(-profile.gain_jitter_db, profile.gain_jitter_db)
    center_scale = 1.0 + rng.uniform(-profile.center_jitter_frac, profile.center_jitter_frac)

    sweep = generate_sweep(1.0, 20.0, 20000.0, SAMPLE_RATE, profile.sweep_amplitude)
    x = sweep.samples.astype(np.float64)
    f = np.fft.rfftfreq(x.size, 1.0 / SAMPLE_RATE)
    total_db = (envelope_db(label, f, profile, center_scale) + gain_db
                + _highpass2_db(np.maximum(f, 1e-3), profile.pickup_highpass_hz))
    y = np.fft.irfft(np.fft.rfft(x) * 10.0 ** (total_db / 20.0), n=x.size)

    noise_rms = np.sqrt(np.mean(y**2) / 10.0 ** (profile.snr_db / 10.0))
    y = y + rng.normal(0.0, noise_rms, size=y.size)
    return Waveform(y, SAMPLE_RATE)


def standardize(w: Waveform) -> Waveform:
    """Resample to 44.1 kHz by linear interpolation, then truncate/zero-pad to 1 s."""
    x = w.samples.astype(np.float64)
    if w.sample_rate_hz != SAMPLE_RATE:
        t_out = np.arange(int(round(x.size * SAMPLE_RATE / w.sample_rate_hz))) / SAMPLE_RATE
        t_in = np.arange(x.size) / w.sample_rate_hz
        x = np.interp(t_out, t_in, x)
    out = np.zeros(CLIP_SAMPLES)
    n = min(CLIP_SAMPLES, x.size)
    out[:n] = x[:n]
    return Waveform(out, SAMPLE_RATE)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class BankClip:
    clip_id: str
    label: ContactLabel
    path: str
    sha256: str

    def to_json(self) -> str:
        return json.dumps({"clip_id": self.clip_id, "label": self.label.value,
                           "path": self.path, "sha256": self.sha256})


class AudioBank:
    """Immutable collection of standardized clips; waveforms load lazily from ``root``."""

    def __init__(self, clips, root):
        clips = tuple(clips)
        if not clips:
            raise EmptyBank("audio bank contains no clips")
        ids = [c.clip_id for c in clips]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate clip ids in bank")
        self.clips = clips
        self.root = Path(root)
        self._by_id = {c.clip_id: c for c in clips}
        self._by_label = {lab: tuple(c.clip_id for c in clips if c.label is lab) for lab in LABELS}

    def __len__(self):
        return len(self.clips)

    @property
    def counts(self) -> dict:
        return {lab.value: len(ids) for lab, ids in self._by_label.items()}

    def ids_for(self, label: ContactLabel) -> tuple:
        return self._by_label[ContactLabel.parse(label)]

    def clip(self, clip_id: str) -> BankClip:
        return self._by_id[clip_id]

    def label_of(self, clip_id: str) -> ContactLabel:
        return self._by_id[clip_id].label

    def load(self, clip_id: str) -> Waveform:
        return read_wav(self.root / self._by_id[clip_id].path)

    def require_all_labels(self) -> None:
        missing = [lab.value for lab, ids in self._by_label.items() if not ids]
        if missing:
            raise MissingLabel(f"audio bank has no clips for label(s): {', '.join(missing)}")

    def manifest_text(self) -> str:
        return "".join(c.to_json() + "\n" for c in self.clips)

    def content_hash(self) -> str:
        return hashlib.sha256(self.manifest_text().encode()).hexdigest()

    def save_manifest(self) -> Path:
        path = self.root / MANIFEST_NAME
        path.write_text(self.manifest_text(), encoding="utf-8")
        return path

    @classmethod
    def open(cls, root) -> "AudioBank":
        root = Path(root)
        path = root / MANIFEST_NAME
        if not path.exists():
            raise FileNotFoundError(f"no bank manifest at {path}")
        clips = [_clip_from_record(json.loads(line), path)
                 for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
        return cls(clips, root)


def _clip_from_record(rec: dict, where) -> BankClip:
    try:
        return BankClip(str(rec["clip_id"]), ContactLabel.parse(rec["label"]),
                        str(rec["path"]), str(rec.get("sha256", "")))
    except KeyError as exc:
        if isinstance(exc, MissingLabel):
            raise
        raise ValueError(f"{where}: manifest record missing field {exc}") from None


def build_synthetic_bank(out_dir, per_label, seed: int = 1,
                         profile: SynthProfile = SynthProfile()) -> AudioBank:
    """Materialize synthetic clips as float32 WAVs under ``out_dir/clips``.

    ``per_label`` is either an int or a mapping label -> count.
    """
    if isinstance(per_label, int):
        per_label = {lab: per_label for lab in LABELS}
    counts = {ContactLabel.parse(k): int(v) for k, v in per_label.items()}
    missing = [lab.value for lab in LABELS if counts.get(lab, 0) < 1]
    if missing:
        raise MissingLabel(f"synthetic bank needs >= 1 clip for label(s): {', '.join(missing)}")
    out_dir = Path(out_dir)
    (out_dir / "clips").mkdir(parents=True, exist_ok=True)
    clips = []
    for lab in LABELS:
        for i in range(counts[lab]):
            clip_id = f"{lab.value}-{i:05d}"
            rel = f"clips/{clip_id}.wav"
            clip_seed = int(np.random.SeedSequence([seed, lab.index, i]).generate_state(1)[0])
            write_wav(out_dir / rel, synth_clip(lab, profile, clip_seed))
            clips.append(BankClip(clip_id, lab, rel, sha256_file(out_dir / rel)))
    bank = AudioBank(clips, out_dir)
    bank.save_manifest()
    return bank


def ingest_wav_directory(src_dir, out_dir, manifest_name: str = MANIFEST_NAME) -> AudioBank:
    """Standardize recorded clips listed in ``src_dir/manifest_name`` into ``out_dir``.

    Input records need ``clip_id``, ``label`` and ``path`` (relative to ``src_dir``);
    a ``sha256`` field, when present, is verified against the source file.
    """
    src_dir, out_dir = Path(src_dir), Path(out_dir)
    manifest = src_dir / manifest_name
    if not manifest.exists():
        raise FileNotFoundError(f"no label manifest at {manifest}")
    records = [json.loads(line) for line in manifest.read_text(encoding="utf-8").splitlines()
               if line.strip()]
    if not records:
        raise EmptyBank(f"{manifest} lists no clips")
    (out_dir / "clips").mkdir(parents=True, exist_ok=True)
    clips = []
    for rec in records:
        src = _clip_from_record(rec, manifest)
        src_path = src_dir / src.path
        if not src_path.exists():
            raise UnreadableWav(f"{src_path}: file not found")
        if src.sha256 and sha256_file(src_path) != src.sha256:
            raise UnreadableWav(f"{src_path}: sha256 does not match manifest")
        rel = f"clips/{src.clip_id}.wav"
        write_wav(out_dir / rel, standardize(read_wav(src_path)))
        clips.append(BankClip(src.clip_id, src.label, rel, sha256_file(out_dir / rel)))
    bank = AudioBank(clips, out_dir)
    bank.require_all_labels()
    bank.save_manifest()
    return bank


def build_bank(source, out_dir, seed: int = 1, profile: SynthProfile = SynthProfile()) -> AudioBank:
    """Dispatch: ``source`` is a directory path (recorded clips) or a per-label count spec."""
    if isinstance(source, (str, os.PathLike)):
        return ingest_wav_directory(source, out_dir)
    return build_synthetic_bank(out_dir, source, seed, profile)


def sample_clip(bank: AudioBank, label: ContactLabel, rng: np.random.Generator) -> str:
    """Uniform draw among clips of ``label``; advances ``rng``."""
    ids = bank.ids_for(label)
    if not ids:
        raise MissingLabel(f"audio bank has no clips labeled {ContactLabel.parse(label).value}")
    return ids[int(rng.integers(len(ids)))]
