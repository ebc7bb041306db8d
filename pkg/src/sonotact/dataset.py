"""Real-to-sim hallucination: pair simulated frames with label-matched bank audio,
serialize observation records and split them by episode."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import scene as sc
from .audio import MelConfig, log_mel_spectrogram, spectrogram_to_image
from .audiobank import LABELS, AudioBank, ContactLabel, sample_clip
from .errors import ChecksumMismatch, DegenerateSplit, IoFailure
from .tensorio import decode_tensor, read_all, read_tensor, write_tensor

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
META_NAME = "dataset.json"
SPECTROGRAMS_NAME = "spectrograms.sntt"
FIELDS = ("depth_crop", "ref_depth_crop", "flow_crop", "proprio", "gt_mask", "crop_origin")


@dataclass(frozen=True)
class DatasetConfig:
    n_episodes: int = 100
    crop_side: int = 32
    spec_side: int = 32
    test_frac: float = 0.2


@dataclass(frozen=True, eq=False)
class ObservationRecord:
    record_id: str
    clip_id: str
    depth_crop: np.ndarray  # (4, s, s): depth + coords
    ref_depth_crop: np.ndarray  # (4, s, s)
    flow_crop: np.ndarray  # (5, s, s): du, dv + coords
    proprio: np.ndarray  # (7,)
    gt_mask: np.ndarray  # (H, W)
    gt_label: ContactLabel
    episode_id: int
    frame_idx: int
    crop_origin: tuple  # (row, col) of the crop's top-left pixel in the full image
    clip_label: ContactLabel | None = None

    def __post_init__(self):
        for name in ("depth_crop", "ref_depth_crop", "flow_crop", "proprio", "gt_mask"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{self.record_id}: {name} has non-finite values")
        if (self.gt_label is ContactLabel.FREE) != (not self.gt_mask.any()):
            raise ValueError(f"{self.record_id}: Free label must coincide with an empty mask")
        if self.clip_label is not None and self.clip_label is not self.gt_label:
            raise ValueError(f"{self.record_id}: audio label {self.clip_label} != {self.gt_label}")

    @property
    def in_contact(self) -> bool:
        return self.gt_label is not ContactLabel.FREE


@dataclass(frozen=True)
class RecordEntry:
    record_id: str
    blob: str
    offsets: dict
    label: ContactLabel
    clip_id: str
    episode_id: int
    frame_idx: int
    split: str = "unassigned"

    def to_json(self) -> str:
        return json.dumps({
            "record_id": self.record_id, "blob": self.blob, "offsets": self.offsets,
            "label": self.label.value, "clip_id": self.clip_id, "episode_id": self.episode_id,
            "frame_idx": self.frame_idx, "split": self.split,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, d: dict) -> "RecordEntry":
        return cls(d["record_id"], d["blob"], dict(d["offsets"]), ContactLabel.parse(d["label"]),
                   d["clip_id"], int(d["episode_id"]), int(d["frame_idx"]), d.get("split", "unassigned"))


@dataclass(eq=False)
class DatasetManifest:
    root: Path
    records: list
    config_hash: str
    bank_hash: str
    blob_sha256: dict
    clip_ids: list  # row order of the spectrogram tensor
    clip_labels: dict
    meta: dict = field(default_factory=dict)
    _spec_cache: np.ndarray | None = field(default=None, repr=False)
    _blob_cache: dict = field(default_factory=dict, repr=False)
    _clip_rows: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        self.root = Path(self.root)
        ids = [r.record_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("record ids must be unique")

    def __len__(self):
        return len(self.records)

    # persistence ------------------------------------------------------
    def manifest_text(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def manifest_hash(self) -> str:
        return hashlib.sha256(self.manifest_text().encode()).hexdigest()

    def save(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / MANIFEST_NAME).write_text(self.manifest_text(), encoding="utf-8")
        meta = dict(self.meta, config_hash=self.config_hash, bank_hash=self.bank_hash,
                    blob_sha256=self.blob_sha256, clip_ids=self.clip_ids,
                    clip_labels=self.clip_labels, spectrograms=SPECTROGRAMS_NAME)
        (self.root / META_NAME).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")

    @classmethod
    def load(cls, root) -> "DatasetManifest":
        root = Path(root)
        try:
            meta = json.loads((root / META_NAME).read_text(encoding="utf-8"))
            lines = (root / MANIFEST_NAME).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoFailure(f"cannot read dataset at {root}: {exc}") from exc
        records = [RecordEntry.from_json(json.loads(line)) for line in lines if line.strip()]
        extra = {k: v for k, v in meta.items() if k not in
                 ("config_hash", "bank_hash", "blob_sha256", "clip_ids", "clip_labels", "spectrograms")}
        return cls(root, records, meta["config_hash"], meta["bank_hash"], meta["blob_sha256"],
                   meta["clip_ids"], meta["clip_labels"], extra)

    def with_records(self, records) -> "DatasetManifest":
        return DatasetManifest(self.root, list(records), self.config_hash, self.bank_hash,
                               self.blob_sha256, self.clip_ids, self.clip_labels, dict(self.meta),
                               self._spec_cache, self._blob_cache)

    def subset(self, split: str) -> "DatasetManifest":
        return self.with_records(r for r in self.records if r.split == split)

    # validation -------------------------------------------------------
    def validate(self) -> None:
        """Check blob digests and every tensor CRC; raises ChecksumMismatch."""
        for rel, digest in sorted(self.blob_sha256.items()):
            path = self.root / rel
            if not path.exists():
                raise IoFailure(f"missing blob {path}")
            if hashlib.sha256(path.read_bytes()).hexdigest() != digest:
                raise ChecksumMismatch(f"{path}: sha256 does not match manifest")
            read_all(path)
        for r in self.records:
            if r.blob not in self.blob_sha256:
                raise IoFailure(f"record {r.record_id} references unknown blob {r.blob}")

    # access -----------------------------------------------------------
    @property
    def spectrograms(self) -> np.ndarray:
        if self._spec_cache is None:
            self._spec_cache = read_tensor(self.root / SPECTROGRAMS_NAME)
        return self._spec_cache

    def spectrogram(self, clip_id: str) -> np.ndarray:
        if self._clip_rows is None:
            self._clip_rows = {c: i for i, c in enumerate(self.clip_ids)}
        return self.spectrograms[self._clip_rows[clip_id]][None]

    def _blob(self, rel: str) -> dict:
        tensors = self._blob_cache.get(rel)
        if tensors is None:
            data = (self.root / rel).read_bytes()
            tensors, pos = {}, 0
            while pos < len(data):
                arr, nxt = decode_tensor(data, pos)
                tensors[pos] = arr
                pos = nxt
            self._blob_cache[rel] = tensors
        return tensors

    def load_record(self, entry: RecordEntry) -> ObservationRecord:
        t = self._blob(entry.blob)
        get = {name: t[entry.offsets[name]] for name in FIELDS}
        return ObservationRecord(
            entry.record_id, entry.clip_id, get["depth_crop"], get["ref_depth_crop"],
            get["flow_crop"], get["proprio"], get["gt_mask"], entry.label, entry.episode_id,
            entry.frame_idx, tuple(int(v) for v in get["crop_origin"]),
            ContactLabel.parse(self.clip_labels[entry.clip_id]))

    def iter_records(self):
        for entry in self.records:
            yield self.load_record(entry)

    def episodes(self) -> list:
        return sorted({r.episode_id for r in self.records})


def episode_seed(seed: int, episode_id: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(episode_id)]).generate_state(1)[0])


def config_digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def compute_spectrograms(bank: AudioBank, side: int, mel: MelConfig = MelConfig()) -> np.ndarray:
    out = np.empty((len(bank), side, side), dtype=np.float32)
    for i, clip in enumerate(bank.clips):
        out[i] = spectrogram_to_image(log_mel_spectrogram(bank.load(clip.clip_id), mel), side, side)[0]
    return out


def make_record(frames, t: int, cam, ref_crop, cfg: sc.SceneConfig, crop_side: int,
                clip_id: str, clip_label, episode_id: int) -> ObservationRecord:
    frame = frames[t]
    patch = sc.frame_label(frame, cfg)
    u, v, _ = cam.project(frame.ee_pose[None, :3])
    center = (float(u[0]), float(v[0]))
    if t + 1 < len(frames):
        flow = sc.analytic_flow(frame, frames[t + 1], cam)
    else:
        flow = sc.analytic_flow(frames[t - 1], frame, cam)
    return ObservationRecord(
        record_id=f"e{episode_id:05d}-f{t:03d}",
        clip_id=clip_id,
        depth_crop=sc.crop_with_coords(sc.render_depth(frame, cam), center, crop_side),
        ref_depth_crop=ref_crop,
        flow_crop=sc.crop_with_coords(flow, center, crop_side),
        proprio=frame.ee_pose.astype(np.float32),
        gt_mask=sc.rasterize_mask(patch, cam),
        gt_label=patch.label,
        episode_id=episode_id,
        frame_idx=t,
        crop_origin=sc.crop_origin(center, crop_side),
        clip_label=clip_label,
    )


def _build_episode(args):
    root, episode_id, frames, cfg, bank, seed, crop_side = args
    cam = cfg.make_camera()
    ref_center = cam.project(sc.reference_ee(frames[0])[None])
    ref_crop = sc.crop_with_coords(sc.render_reference(frames[0], cam),
                                   (float(ref_center[0][0]), float(ref_center[1][0])), crop_side)
    rng = np.random.default_rng([int(seed), int(episode_id), 1])
    rel = f"episodes/ep_{episode_id:05d}.sntt"
    entries = []
    with open(Path(root) / rel, "wb") as fh:
        for t in range(len(frames)):
            label = sc.frame_label(frames[t], cfg).label
            clip_id = sample_clip(bank, label, rng)
            rec = make_record(frames, t, cam, ref_crop, cfg, crop_side, clip_id,
                              bank.label_of(clip_id), episode_id)
            offsets = {
                name: write_tensor(fh, np.asarray(
                    rec.crop_origin if name == "crop_origin" else getattr(rec, name), np.float32))
                for name in FIELDS
            }
            entries.append(RecordEntry(rec.record_id, rel, offsets, rec.gt_label, clip_id,
                                       episode_id, t))
    digest = hashlib.sha256((Path(root) / rel).read_bytes()).hexdigest()
    return rel, digest, entries


def _pool_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def simulate_episodes(cfg: sc.SceneConfig, n_episodes: int, seed: int) -> list:
    return [sc.sample_episode(episode_seed(seed, e), cfg) for e in range(n_episodes)]


def build_dataset(
    scene_cfg: sc.SceneConfig,
    bank: AudioBank,
    n_episodes: int,
    seed: int,
    out_dir,
    crop_side: int = 32,
    spec_side: int = 32,
    mel: MelConfig = MelConfig(),
    episodes: list | None = None,
    jobs: int = 1,
) -> DatasetManifest:
    """Simulate ``n_episodes`` (or use ``episodes``) and hallucinate audio for every frame."""
    bank.require_all_labels()
    root = Path(out_dir)
    try:
        (root / "episodes").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {root}: {exc}") from exc
    if episodes is None:
        episodes = simulate_episodes(scene_cfg, n_episodes, seed)
    if len(episodes) != n_episodes:
        raise ValueError(f"expected {n_episodes} episodes, got {len(episodes)}")

    specs = compute_spectrograms(bank, spec_side, mel)
    with open(root / SPECTROGRAMS_NAME, "wb") as fh:
        write_tensor(fh, specs)

    work = [(str(root), e, frames, scene_cfg, bank, seed, crop_side) for e, frames in enumerate(episodes)]
    results = _pool_map(_build_episode, work, jobs)
    records, blobs = [], {}
    for rel, digest, entries in results:
        blobs[rel] = digest
        records.extend(entries)
    cfg_hash = config_digest({"scene": dataclasses.asdict(scene_cfg), "n_episodes": n_episodes,
                              "seed": seed, "crop_side": crop_side, "spec_side": spec_side,
                              "mel": dataclasses.asdict(mel)})
    manifest = DatasetManifest(
        root, records, cfg_hash, bank.content_hash(), blobs,
        [c.clip_id for c in bank.clips], {c.clip_id: c.label.value for c in bank.clips},
        {"crop_side": crop_side, "spec_side": spec_side,
         "image_shape": list(scene_cfg.make_camera().shape)},
    )
    manifest.save()
    log.info("built dataset: %d records over %d episodes", len(records), n_episodes)
    return manifest


def _episode_stratum(entries) -> str:
    counts = {lab: 0 for lab in LABELS if lab is not ContactLabel.FREE}
    for e in entries:
        if e.label in counts:
            counts[e.label] += 1
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0].index))
    return best[0].value if best[1] else ContactLabel.FREE.value


def split(manifest: DatasetManifest, test_frac: float, seed: int) -> tuple:
    """Episode-level split, stratified by each episode's dominant contact mode."""
    if not 0 < test_frac < 1:
        raise DegenerateSplit(f"test fraction must lie in (0, 1), got {test_frac}")
    by_episode: dict = {}
    for r in manifest.records:
        by_episode.setdefault(r.episode_id, []).append(r)
    episode_ids = sorted(by_episode)
    if len(episode_ids) < 2:
        raise DegenerateSplit("need at least two episodes to split")
    n_test = int(round(test_frac * len(episode_ids)))
    n_test = min(max(n_test, 1), len(episode_ids) - 1)

    strata: dict = {}
    for e in episode_ids:
        strata.setdefault(_episode_stratum(by_episode[e]), []).append(e)
    names = sorted(strata)
    raw = np.array([len(strata[n]) * n_test / len(episode_ids) for n in names])
    alloc = np.floor(raw).astype(int)
    rng = np.random.default_rng(seed)
    extra = n_test - int(alloc.sum())
    if extra:
        # leftover seats go to strata drawn in proportion to their fractional remainders
        rem = raw - alloc
        alloc[rng.choice(len(names), size=extra, replace=False, p=rem / rem.sum())] += 1

    test_eps = set()
    for name, k in zip(names, alloc):
        members = np.array(strata[name])
        test_eps.update(int(e) for e in rng.permutation(members)[:k])

    tagged = [dataclasses.replace(r, split="test" if r.episode_id in test_eps else "train")
              for r in manifest.records]
    full = manifest.with_records(tagged)
    train, test = full.subset("train"), full.subset("test")
    if not len(train) or not len(test):
        raise DegenerateSplit("split produced an empty side")
    return train, test


def assign_split(manifest: DatasetManifest, test_frac: float, seed: int) -> DatasetManifest:
    """The full manifest with split tags filled in."""
    train, test = split(manifest, test_frac, seed)
    tags = {r.record_id: r.split for r in (*train.records, *test.records)}
    return manifest.with_records(dataclasses.replace(r, split=tags[r.record_id])
                                 for r in manifest.records)


def hallucination_violations(manifest: DatasetManifest) -> list:
    """Record ids whose audio clip label differs from the frame label."""
    return [r.record_id for r in manifest.records
            if ContactLabel.parse(manifest.clip_labels[r.clip_id]) is not r.label]
