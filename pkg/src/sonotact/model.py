"""Three-stream encoder-decoder for per-pixel contact logits, trained with
BCE-with-logits and Adam; plus a mel-energy contact-mode classifier.

Stream A encodes the reference depth crop, stream B the current depth + flow crop,
stream C the log-mel spectrogram image. The bottlenecks are concatenated, the
projected end-effector pose is broadcast-added, and a decoder with skips from A and
B produces crop logits that are pasted into a full-image map with a constant
background logit.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .audio import MelConfig, Waveform, mel_power
from .audiobank import LABELS, AudioBank, ContactLabel
from .errors import EmptyDataset, InvalidArch, MissingLabel, NonFiniteFeatures, ShapeMismatch
from .tensorio import decode_tensor, encode_tensor

log = logging.getLogger(__name__)

STREAMS = ("a", "b", "c")


@dataclass(frozen=True)
class Arch:
    levels: int = 3
    base: int = 8
    crop_side: int = 32
    spec_side: int = 32
    in_a: int = 4
    in_b: int = 6
    in_c: int = 1
    proprio_dim: int = 7
    image_h: int = 64
    image_w: int = 64
    background_logit: float = -10.0
    use_audio: bool = True
    # fixed input normalisation
    depth_offset: float = 0.8
    depth_scale: float = 10.0
    flow_scale: float = 5.0
    position_scale: float = 10.0

    def validate(self) -> None:
        if self.levels < 1 or self.base < 1:
            raise InvalidArch("levels and base channels must be >= 1")
        div = 2 ** (self.levels - 1)
        if self.crop_side % div or self.spec_side % div:
            raise InvalidArch(f"crop/spectrogram side must be divisible by {div}")
        if self.crop_side != self.spec_side:
            raise InvalidArch("spectrogram side must equal crop side so bottlenecks align")
        if min(self.in_a, self.in_b, self.in_c, self.proprio_dim) < 1:
            raise InvalidArch("input channel counts must be positive")

    def channels(self, level: int) -> int:
        return self.base * 2**level

    @property
    def fused_channels(self) -> int:
        return 3 * self.channels(self.levels - 1)


def param_shapes(arch: Arch) -> dict:
    arch.validate()
    shapes = {}
    for s, cin in zip(STREAMS, (arch.in_a, arch.in_b, arch.in_c)):
        for lvl in range(arch.levels):
            cout = arch.channels(lvl)
            shapes[f"enc_{s}{lvl}.w"] = (cout, cin, 3, 3)
            shapes[f"enc_{s}{lvl}.b"] = (cout,)
            cin = cout
    cf = arch.fused_channels
    top = arch.channels(arch.levels - 1)
    shapes["proprio.w"] = (cf, arch.proprio_dim)
    shapes["proprio.b"] = (cf,)
    shapes["dec_bott.w"] = (top, cf, 3, 3)
    shapes["dec_bott.b"] = (top,)
    for lvl in range(arch.levels - 2, -1, -1):
        c = arch.channels(lvl)
        shapes[f"dec{lvl}.w"] = (c, arch.channels(lvl + 1) + 2 * c, 3, 3)
        shapes[f"dec{lvl}.b"] = (c,)
    shapes["head.w"] = (1, arch.base, 1, 1)
    shapes["head.b"] = (1,)
    # per-pixel standardisation of the audio image, fitted on training data, never trained
    shapes["spec_norm.mean"] = (arch.spec_side, arch.spec_side, arch.in_c)
    shapes["spec_norm.std"] = (arch.spec_side, arch.spec_side, arch.in_c)
    return shapes


FROZEN = ("spec_norm.mean", "spec_norm.std")


@dataclass
class ModelParams:
    arch: Arch
    tensors: dict

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, {k: v.copy() for k, v in self.tensors.items()})

    def __getitem__(self, key):
        return self.tensors[key]

    @property
    def dtype(self):
        return next(iter(self.tensors.values())).dtype

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(self.arch, {k: v.astype(dtype) for k, v in self.tensors.items()})

    def check(self) -> None:
        expected = param_shapes(self.arch)
        if set(expected) != set(self.tensors):
            raise ShapeMismatch("parameter names do not match the architecture")
        for k, shp in expected.items():
            if self.tensors[k].shape != shp:
                raise ShapeMismatch(f"{k}: shape {self.tensors[k].shape} != {shp}")
            if not np.all(np.isfinite(self.tensors[k])):
                raise ValueError(f"{k} has non-finite values")


def init_params(seed: int, arch: Arch = Arch(), dtype=np.float32) -> ModelParams:
    """He-uniform weights (variance 2 / fan_in), zero biases, identity audio normalisation."""
    shapes = param_shapes(arch)
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shp in shapes.items():
        if name == "spec_norm.std":
            tensors[name] = np.ones(shp, dtype=dtype)
        elif name.endswith(".b") or name == "spec_norm.mean":
            tensors[name] = np.zeros(shp, dtype=dtype)
        else:
            fan_in = int(np.prod(shp[1:]))
            limit = np.sqrt(6.0 / fan_in)
            tensors[name] = rng.uniform(-limit, limit, size=shp).astype(dtype)
    return ModelParams(arch, tensors)


def fit_spec_norm(params: ModelParams, spectrograms: np.ndarray) -> ModelParams:
    """Copy of ``params`` whose audio-image standardisation matches ``spectrograms`` (N, s, s, c)."""
    out = params.copy()
    dt = params.dtype
    out.tensors["spec_norm.mean"] = spectrograms.mean(axis=0).astype(dt)
    out.tensors["spec_norm.std"] = (spectrograms.std(axis=0) + 1e-3).astype(dt)
    return out


# ------------------------------------------------------------------ inputs


@dataclass
class Batch:
    a: np.ndarray  # (N, s, s, in_a)
    b: np.ndarray  # (N, s, s, in_b)
    c: np.ndarray  # (N, s, s, in_c)
    proprio: np.ndarray  # (N, proprio_dim)
    origin: np.ndarray  # (N, 2) crop top-left (row, col)
    mask: np.ndarray | None = None  # (N, H, W)

    def __len__(self):
        return len(self.a)

    def take(self, idx) -> "Batch":
        return Batch(self.a[idx], self.b[idx], self.c[idx], self.proprio[idx], self.origin[idx],
                     None if self.mask is None else self.mask[idx])

    def astype(self, dtype) -> "Batch":
        return Batch(*(None if v is None else (v.astype(dtype) if k != "origin" else v)
                       for k, v in dataclasses.asdict(self).items()))


def record_inputs(record, spectrogram: np.ndarray, arch: Arch) -> tuple:
    """Model-ready (a, b, c, proprio) arrays in HWC layout for one record."""
    ref = np.array(record.ref_depth_crop, dtype=np.float32)
    cur = np.array(record.depth_crop, dtype=np.float32)
    flow = np.array(record.flow_crop, dtype=np.float32)
    ref[0] = (ref[0] - arch.depth_offset) * arch.depth_scale
    cur[0] = (cur[0] - arch.depth_offset) * arch.depth_scale
    b = np.concatenate([cur[:1], flow[:2] * arch.flow_scale, cur[1:]])
    prop = np.array(record.proprio, dtype=np.float32)
    prop[:3] *= arch.position_scale
    spec = np.asarray(spectrogram, dtype=np.float32).reshape(arch.in_c, arch.spec_side, arch.spec_side)
    a, b_, c = (np.moveaxis(t, 0, -1) for t in (ref, b, spec))
    if a.shape != (arch.crop_side, arch.crop_side, arch.in_a) or \
            b_.shape != (arch.crop_side, arch.crop_side, arch.in_b):
        raise ShapeMismatch(f"record {record.record_id} does not match arch input sizes")
    return a, b_, c, prop


def make_batch(records, spectrograms, arch: Arch, with_mask: bool = True) -> Batch:
    cols = [record_inputs(r, s, arch) for r, s in zip(records, spectrograms)]
    a, b, c, p = (np.stack(t) for t in zip(*cols))
    origin = np.array([r.crop_origin for r in records], dtype=np.int64)
    mask = np.stack([r.gt_mask for r in records]).astype(np.float32) if with_mask else None
    if mask is not None and mask.shape[1:] != (arch.image_h, arch.image_w):
        raise ShapeMismatch(f"mask shape {mask.shape[1:]} != image {(arch.image_h, arch.image_w)}")
    return Batch(a, b, c, p, origin, mask)


def manifest_batch(manifest, arch: Arch) -> Batch:
    """Load every record of a dataset manifest into one Batch."""
    row = {cid: i for i, cid in enumerate(manifest.clip_ids)}
    specs = manifest.spectrograms
    recs = list(manifest.iter_records())
    if not recs:
        raise EmptyDataset("manifest has no records")
    return make_batch(recs, [specs[row[r.clip_id]] for r in recs], arch)


# ------------------------------------------------------------------ forward / backward


def _crop_window(origin, arch: Arch):
    """Slices mapping the crop onto the image, clipped to the image bounds."""
    r0, c0 = int(origin[0]), int(origin[1])
    s = arch.crop_side
    rs, re = max(r0, 0), min(r0 + s, arch.image_h)
    cs, ce = max(c0, 0), min(c0 + s, arch.image_w)
    return (slice(rs, re), slice(cs, ce)), (slice(rs - r0, re - r0), slice(cs - c0, ce - c0))


def _encode(params, x, stream, arch, caches):
    skips = []
    for lvl in range(arch.levels):
        y, cc = nn.conv2d(x, params[f"enc_{stream}{lvl}.w"], params[f"enc_{stream}{lvl}.b"])
        y, rm = nn.relu(y)
        caches.append(("conv", f"enc_{stream}{lvl}", cc, lvl > 0))
        caches.append(("relu", rm))
        skips.append(y)
        if lvl < arch.levels - 1:
            x, pc = nn.maxpool2(y)
            caches.append(("pool", pc))
    return skips


def forward_batch(params: ModelParams, batch: Batch, keep_cache: bool = False):
    """Full-image logits (N, H, W); with ``keep_cache`` also the backward cache."""
    arch = params.arch
    dt = params.dtype
    caches = {s: [] for s in STREAMS}
    skips = {}
    spec = (batch.c.astype(dt, copy=False) - params["spec_norm.mean"]) / params["spec_norm.std"]
    for s, x in zip(STREAMS, (batch.a, batch.b, spec)):
        skips[s] = _encode(params, x.astype(dt, copy=False), s, arch, caches[s])
    bott = [skips["a"][-1], skips["b"][-1], skips["c"][-1]]
    if not arch.use_audio:
        bott[2] = np.zeros_like(bott[2])
    prop = batch.proprio.astype(dt, copy=False) @ params["proprio.w"].T + params["proprio.b"]
    fused = np.concatenate(bott, axis=-1) + prop[:, None, None, :]

    dec = []
    y, cc = nn.conv2d(fused, params["dec_bott.w"], params["dec_bott.b"])
    y, rm = nn.relu(y)
    dec.append(("dec_bott", cc, rm))
    for lvl in range(arch.levels - 2, -1, -1):
        up = nn.upsample2(y)
        cat = np.concatenate([up, skips["a"][lvl], skips["b"][lvl]], axis=-1)
        y, cc = nn.conv2d(cat, params[f"dec{lvl}.w"], params[f"dec{lvl}.b"])
        y, rm = nn.relu(y)
        dec.append((f"dec{lvl}", cc, rm))
    crop, hc = nn.conv2d(y, params["head.w"], params["head.b"])
    crop = crop[..., 0]

    n = len(batch)
    full = np.full((n, arch.image_h, arch.image_w), arch.background_logit, dtype=dt)
    for i in range(n):
        dst, src = _crop_window(batch.origin[i], arch)
        full[i][dst] = crop[i][src]
    if not keep_cache:
        return full
    return full, (caches, skips, dec, hc, fused.shape)


def forward(params: ModelParams, record, spectrogram) -> np.ndarray:
    """LogitMap (H, W) for a single observation record."""
    return forward_batch(params, make_batch([record], [spectrogram], params.arch, False))[0]


def bce_with_logits(logits, mask) -> float:
    """Mean pixel-wise BCE-with-logits."""
    z = np.asarray(logits)
    y = np.asarray(mask)
    if z.shape != y.shape:
        raise ShapeMismatch(f"logits {z.shape} vs mask {y.shape}")
    return float(np.mean(nn.softplus_bce(z.astype(np.float64), y.astype(np.float64))))


def batch_loss(logits, mask, reduction: str = "mean") -> float:
    per = nn.softplus_bce(logits.astype(np.float64), mask.astype(np.float64)).mean(axis=(1, 2))
    return float(per.sum() if reduction == "sum" else per.mean())


def _backward_stream(params, dskips, stream, caches, grads):
    """Walk one encoder backwards given gradients w.r.t. its per-level outputs."""
    arch = params.arch
    d = None
    # caches: per level [conv, relu, (pool)]
    entries = list(caches)
    for lvl in range(arch.levels - 1, -1, -1):
        base = 3 * lvl
        conv_c = entries[base]
        relu_c = entries[base + 1]
        g = dskips[lvl] if d is None else d + dskips[lvl]
        g = nn.relu_backward(g, relu_c[1])
        _, name, cc, need_dx = conv_c
        dx, dw, db = nn.conv2d_backward(g, cc, need_dx=need_dx)
        grads[f"{name}.w"] += dw
        grads[f"{name}.b"] += db
        if lvl > 0:
            pool_c = entries[base - 1]
            d = nn.maxpool2_backward(dx, pool_c[1])


def loss_and_grads(params: ModelParams, batch: Batch, reduction: str = "mean") -> tuple:
    """BCE loss of the batch and exact gradients for every parameter."""
    if batch.mask is None:
        raise ShapeMismatch("batch has no ground-truth masks")
    arch = params.arch
    logits, (caches, skips, dec, hc, fshape) = forward_batch(params, batch, keep_cache=True)
    mask = batch.mask.astype(params.dtype, copy=False)
    if logits.shape != mask.shape:
        raise ShapeMismatch(f"logits {logits.shape} vs mask {mask.shape}")
    n = len(batch)
    loss = batch_loss(logits, mask, reduction)
    scale = 1.0 / (arch.image_h * arch.image_w) / (n if reduction == "mean" else 1)
    dfull = (nn.sigmoid(logits) - mask) * params.dtype.type(scale)

    dcrop = np.zeros((n, arch.crop_side, arch.crop_side), dtype=params.dtype)
    for i in range(n):
        dst, src = _crop_window(batch.origin[i], arch)
        dcrop[i][src] = dfull[i][dst]

    grads = {k: np.zeros_like(v) for k, v in params.tensors.items()}
    dy, dw, db = nn.conv2d_backward(dcrop[..., None], hc)
    grads["head.w"] += dw
    grads["head.b"] += db

    dskips = {s: [np.zeros_like(x) for x in skips[s]] for s in STREAMS}
    for name, cc, rm in reversed(dec):
        dy = nn.relu_backward(dy, rm)
        dx, dw, db = nn.conv2d_backward(dy, cc)
        grads[f"{name}.w"] += dw
        grads[f"{name}.b"] += db
        if name == "dec_bott":
            dfused = dx
        else:
            lvl = int(name[3:])
            cu = arch.channels(lvl + 1)
            c = arch.channels(lvl)
            dskips["a"][lvl] += dx[..., cu:cu + c]
            dskips["b"][lvl] += dx[..., cu + c:]
            dy = nn.upsample2_backward(dx[..., :cu])

    dprop = dfused.sum(axis=(1, 2))
    grads["proprio.w"] += dprop.T @ batch.proprio.astype(params.dtype, copy=False)
    grads["proprio.b"] += dprop.sum(axis=0)
    top = arch.channels(arch.levels - 1)
    for k, s in enumerate(STREAMS):
        part = dfused[..., k * top:(k + 1) * top]
        if s == "c" and not arch.use_audio:
            part = np.zeros_like(part)
        dskips[s][-1] += part
        _backward_stream(params, dskips[s], s, caches[s], grads)
    return loss, grads


def backward(params: ModelParams, record, spectrogram, mask=None) -> dict:
    """Gradients of ``bce_with_logits(forward(...), mask)`` for one record."""
    batch = make_batch([record], [spectrogram], params.arch, with_mask=mask is None)
    if mask is not None:
        batch.mask = np.asarray(mask, dtype=np.float32)[None]
    return loss_and_grads(params, batch)[1]


# ------------------------------------------------------------------ optimisation


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls({k: np.zeros_like(v) for k, v in params.tensors.items()},
                   {k: np.zeros_like(v) for k, v in params.tensors.items()})


def adam_step(params: ModelParams, grads: dict, state: AdamState, lr: float = 5e-4,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> tuple:
    """Bias-corrected Adam; returns new (params, state) and leaves inputs untouched."""
    t = state.t + 1
    new_p, new_m, new_v = {}, {}, {}
    for k, p in params.tensors.items():
        if k in FROZEN:
            new_p[k], new_m[k], new_v[k] = p, state.m[k], state.v[k]
            continue
        g = grads[k]
        if g.shape != p.shape or state.m[k].shape != p.shape:
            raise ShapeMismatch(f"{k}: gradient/state shape does not match parameter")
        m = beta1 * state.m[k] + (1 - beta1) * g
        v = beta2 * state.v[k] + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        new_p[k] = (p - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype)
        new_m[k], new_v[k] = m.astype(p.dtype), v.astype(p.dtype)
    return ModelParams(params.arch, new_p), AdamState(new_m, new_v, t)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    lr: float = 5e-4
    seed: int = 0
    max_steps: int | None = None


def train(batch: Batch, arch: Arch = Arch(), cfg: TrainConfig = TrainConfig(),
          params: ModelParams | None = None, on_epoch=None) -> tuple:
    """Mini-batch Adam over ``batch``; returns (params, per-epoch mean loss list).

    ``on_epoch(epoch, params, loss)`` runs after every epoch (checkpointing hook).
    """
    if len(batch) == 0:
        raise EmptyDataset("no training records")
    if params is None:
        params = fit_spec_norm(init_params(cfg.seed, arch), batch.c)
    state = AdamState.zeros_like(params)
    curve = []
    steps = 0
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(batch))
        losses, weights = [], []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grads(params, batch.take(idx))
            params, state = adam_step(params, grads, state, cfg.lr)
            losses.append(loss)
            weights.append(len(idx))
            steps += 1
            if cfg.max_steps is not None and steps >= cfg.max_steps:
                break
        curve.append(float(np.average(losses, weights=weights)))
        log.info("epoch %d/%d loss %.5f", epoch + 1, cfg.epochs, curve[-1])
        if on_epoch is not None:
            on_epoch(epoch, params, curve[-1])
        if cfg.max_steps is not None and steps >= cfg.max_steps:
            break
    return params, curve


def predict_logits(params: ModelParams, batch: Batch, chunk: int = 64) -> np.ndarray:
    out = [forward_batch(params, batch.take(slice(i, i + chunk))) for i in range(0, len(batch), chunk)]
    return np.concatenate(out)


def predict(params: ModelParams, record, spectrogram, threshold: float = 0.5) -> tuple:
    """(probability map, binary mask, in_contact) for one record."""
    return threshold_logits(forward(params, record, spectrogram), threshold)


def threshold_logits(logits, threshold: float) -> tuple:
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    prob = nn.sigmoid(np.asarray(logits, dtype=np.float64))
    mask = prob >= threshold
    return prob, mask, bool(mask.any())


# ------------------------------------------------------------------ checkpoints


def save_checkpoint(path_prefix, params: ModelParams, train_config: dict | None = None) -> None:
    """``<prefix>.sntt`` with tensors in layer order and ``<prefix>.json`` header."""
    prefix = Path(path_prefix)
    names = list(param_shapes(params.arch))
    with open(prefix.with_suffix(".sntt"), "wb") as fh:
        offsets = {}
        for name in names:
            offsets[name] = fh.tell()
            fh.write(encode_tensor(params[name]))
    header = {
        "layers": [{"name": n, "shape": list(params[n].shape), "offset": offsets[n]} for n in names],
        "arch": dataclasses.asdict(params.arch),
        "train_config": train_config or {},
        "train_config_hash": _digest(train_config or {}),
    }
    prefix.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")


def load_checkpoint(path_prefix) -> ModelParams:
    prefix = Path(path_prefix)
    header = json.loads(prefix.with_suffix(".json").read_text(encoding="utf-8"))
    arch = Arch(**header["arch"])
    data = prefix.with_suffix(".sntt").read_bytes()
    tensors = {}
    for layer in header["layers"]:
        arr, _ = decode_tensor(data, layer["offset"])
        tensors[layer["name"]] = arr.reshape(layer["shape"])
    params = ModelParams(arch, tensors)
    params.check()
    return params


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


# ------------------------------------------------------------------ audio mode classifier


@dataclass
class ClassifierParams:
    weights: np.ndarray  # (4, n_features + 1), last column is the bias
    feature_mean: np.ndarray
    feature_std: np.ndarray
    mel: MelConfig = field(default_factory=MelConfig)


def mel_band_features(w: Waveform, mel: MelConfig = MelConfig()) -> np.ndarray:
    """Mean log10 energy per mel band; silent input gives non-finite features."""
    with np.errstate(divide="ignore"):
        feats = np.log10(mel_power(w, mel).mean(axis=1))
    if not np.all(np.isfinite(feats)):
        raise NonFiniteFeatures("mel-band energies are not finite (silent clip?)")
    return feats


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def fit_mode_classifier(bank: AudioBank, seed: int = 0, clip_ids=None, iterations: int = 2000,
                        lr: float = 0.5, l2: float = 1e-4, mel: MelConfig = MelConfig()) -> ClassifierParams:
    """Multinomial logistic regression on mel-band energies by full-batch gradient descent."""
    ids = list(bank.clips[i].clip_id for i in range(len(bank))) if clip_ids is None else list(clip_ids)
    labels = np.array([bank.label_of(c).index for c in ids])
    missing = [lab.value for lab in LABELS if lab.index not in set(labels.tolist())]
    if missing:
        raise MissingLabel(f"training clips lack label(s): {', '.join(missing)}")
    x = np.stack([mel_band_features(bank.load(c), mel) for c in ids])
    return fit_softmax(x, labels, seed, iterations, lr, l2, mel)


def fit_softmax(x, labels, seed=0, iterations=2000, lr=0.5, l2=1e-4, mel=MelConfig()) -> ClassifierParams:
    mu = x.mean(axis=0)
    sd = x.std(axis=0) + 1e-8
    xs = np.column_stack([(x - mu) / sd, np.ones(len(x))])
    y = np.eye(len(LABELS))[labels]
    w = np.random.default_rng(seed).normal(0, 0.01, size=(len(LABELS), xs.shape[1]))
    for _ in range(iterations):
        p = softmax(xs @ w.T)
        g = (p - y).T @ xs / len(xs)
        g[:, :-1] += l2 * w[:, :-1]
        w -= lr * g
    return ClassifierParams(w, mu, sd, mel)


def classifier_probs(params: ClassifierParams, features: np.ndarray) -> np.ndarray:
    x = (np.atleast_2d(features) - params.feature_mean) / params.feature_std
    return softmax(np.column_stack([x, np.ones(len(x))]) @ params.weights.T)


def classify_mode_audio(params: ClassifierParams, w: Waveform) -> tuple:
    probs = classifier_probs(params, mel_band_features(w, params.mel))[0]
    return LABELS[int(np.argmax(probs))], probs
