"""Command-line pipeline: bank -> simulate -> build -> train -> evaluate / predict / psd-report."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import scene as sc
from .audio import welch_psd
from .audiobank import LABELS, AudioBank, ContactLabel, build_bank
from .config import RunConfig, flat_keys, resolve, write_provenance
from .dataset import DatasetManifest, assign_split, build_dataset, hallucination_violations
from .errors import ConfigError, MissingArtifact, SonotactError
from .metrics import evaluate
from .model import (
    classifier_probs,
    fit_mode_classifier,
    load_checkpoint,
    manifest_batch,
    mel_band_features,
    predict,
    save_checkpoint,
    train,
)

log = logging.getLogger("sonotact")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_INVALID = 0, 2, 3, 4
CHECKPOINT = "checkpoint"


class JsonFormatter(logging.Formatter):
    def format(self, record):
        entry = {"ts": round(record.created, 3), "level": record.levelname.lower(),
                 "logger": record.name, "msg": record.getMessage()}
        entry.update(getattr(record, "fields", {}))
        if record.exc_info:
            entry["exc"] = self.formatException(record.exc_info)
        return json.dumps(entry, sort_keys=True, default=str)


def setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def event(msg: str, **fields) -> None:
    log.info(msg, extra={"fields": fields})


def sha256_path(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------- artifact paths


def paths(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    return {k: out / k for k in ("bank", "episodes", "dataset", "model", "eval", "predict", "psd")}


def open_bank(cfg: RunConfig) -> AudioBank:
    root = paths(cfg)["bank"]
    try:
        return AudioBank.open(root)
    except FileNotFoundError:
        raise MissingArtifact(f"no audio bank at {root}; run `sonotact bank` first") from None


def open_dataset(cfg: RunConfig) -> DatasetManifest:
    root = paths(cfg)["dataset"]
    if not (root / "manifest.jsonl").exists():
        raise MissingArtifact(f"no dataset at {root}; run `sonotact build` first")
    return DatasetManifest.load(root)


def open_model(cfg: RunConfig):
    prefix = paths(cfg)["model"] / CHECKPOINT
    if not prefix.with_suffix(".json").exists():
        raise MissingArtifact(f"no checkpoint at {prefix}; run `sonotact train` first")
    return load_checkpoint(prefix), sha256_path(prefix.with_suffix(".sntt"))


# ---------------------------------------------------------------- subcommands


def cmd_bank(cfg: RunConfig) -> None:
    out = paths(cfg)["bank"]
    source = ({lab.value: cfg.bank.per_label for lab in LABELS} if cfg.bank.synthetic
              else cfg.bank.source)
    if not cfg.bank.synthetic and not Path(cfg.bank.source).is_dir():
        raise MissingArtifact(f"recorded clip directory {cfg.bank.source} not found")
    bank = build_bank(source, out, cfg.seed, cfg.bank.profile)
    write_provenance(out, cfg, {"bank_hash": bank.content_hash(), "source": str(cfg.bank.source)})
    event("bank built", clips=len(bank), counts=bank.counts, path=str(out))


def _episodes_digest(cfg: RunConfig) -> str:
    return cfg.digest("seed", "scene", "data")


def cmd_simulate(cfg: RunConfig) -> list:
    out = paths(cfg)["episodes"]
    out.mkdir(parents=True, exist_ok=True)
    from .dataset import simulate_episodes

    episodes = simulate_episodes(cfg.scene, cfg.data.n_episodes, cfg.seed)
    counts = {lab.value: 0 for lab in LABELS}
    with open(out / "episodes.jsonl", "w", encoding="utf-8") as fh:
        for e, frames in enumerate(episodes):
            for t, f in enumerate(frames):
                label = sc.frame_label(f, cfg.scene).label
                counts[label.value] += 1
                fh.write(json.dumps({"episode_id": e, "frame_idx": t, "label": label.value,
                                     **f.to_json()}, sort_keys=True) + "\n")
    write_provenance(out, cfg, {"episodes_digest": _episodes_digest(cfg)})
    event("episodes simulated", episodes=len(episodes), frames=sum(counts.values()), labels=counts)
    return episodes


def _load_episodes(cfg: RunConfig):
    """Frames from a previous `simulate` with the same scene config, else None."""
    out = paths(cfg)["episodes"]
    try:
        inputs = json.loads((out / "inputs.json").read_text(encoding="utf-8"))
    except OSError:
        return None
    if inputs.get("episodes_digest") != _episodes_digest(cfg):
        return None
    episodes: list = [[] for _ in range(cfg.data.n_episodes)]
    with open(out / "episodes.jsonl", encoding="utf-8") as fh:
        for line in fh:
            d = json.loads(line)
            episodes[d["episode_id"]].append(sc.SceneFrame.from_json(d))
    return episodes


def cmd_build(cfg: RunConfig) -> None:
    bank = open_bank(cfg)
    out = paths(cfg)["dataset"]
    episodes = _load_episodes(cfg)
    event("building dataset", episodes=cfg.data.n_episodes, reuse_simulation=episodes is not None,
          jobs=cfg.jobs)
    manifest = build_dataset(cfg.scene, bank, cfg.data.n_episodes, cfg.seed, out,
                             cfg.arch.crop_side, cfg.arch.spec_side, episodes=episodes, jobs=cfg.jobs)
    manifest = assign_split(manifest, cfg.data.test_frac, cfg.seed)
    manifest.save()
    manifest.validate()
    bad = hallucination_violations(manifest)
    if bad:
        raise SonotactError(f"{len(bad)} records pair audio with the wrong contact label")
    write_provenance(out, cfg, {"bank_hash": bank.content_hash(),
                                "manifest_hash": manifest.manifest_hash()})
    n_test = sum(r.split == "test" for r in manifest.records)
    event("dataset built", records=len(manifest), test_records=n_test,
          manifest_hash=manifest.manifest_hash())


def cmd_train(cfg: RunConfig) -> None:
    manifest = open_dataset(cfg)
    train_set = manifest.subset("train")
    if not len(train_set):
        raise SonotactError("dataset has no training records")
    out = paths(cfg)["model"]
    out.mkdir(parents=True, exist_ok=True)
    batch = manifest_batch(train_set, cfg.arch)
    tcfg = flat_keys(cfg.train)
    event("training", records=len(batch), **tcfg)
    start = time.monotonic()

    def on_epoch(epoch, params, loss):
        save_checkpoint(out / CHECKPOINT, params, tcfg)
        event("epoch done", epoch=epoch + 1, loss=loss, elapsed_s=round(time.monotonic() - start, 1))

    params, curve = train(batch, cfg.arch, cfg.train, on_epoch=on_epoch)
    save_checkpoint(out / CHECKPOINT, params, tcfg)
    with open(out / "loss_curve.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("epoch", "bce"))
        w.writerows((i + 1, repr(v)) for i, v in enumerate(curve))
    write_provenance(out, cfg, {"manifest_hash": manifest.manifest_hash(),
                                "checkpoint_sha256": sha256_path((out / CHECKPOINT).with_suffix(".sntt"))})
    event("training done", final_loss=curve[-1] if curve else None)


def cmd_evaluate(cfg: RunConfig) -> None:
    manifest = open_dataset(cfg)
    params, ck_hash = open_model(cfg)
    test = manifest.subset("test")
    out = paths(cfg)["eval"]
    out.mkdir(parents=True, exist_ok=True)
    report = evaluate(params, test, cfg.eval.threshold, cfg.eval.chunk, jobs=cfg.jobs)
    report.to_json(out / "report.json")
    report.to_csv(out / "report.csv", "sonotact")
    write_provenance(out, cfg, {"manifest_hash": manifest.manifest_hash(), "checkpoint_sha256": ck_hash})
    event("evaluation", threshold=report.threshold, f1=report.f1, precision=report.precision,
          recall=report.recall, mean_cd_px=report.mean_cd_px, mean_iou=report.mean_iou)


def write_pgm(path, prob: np.ndarray) -> None:
    img = np.clip(np.rint(prob * 255), 0, 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def cmd_predict(cfg: RunConfig, record_id: str | None) -> None:
    manifest = open_dataset(cfg)
    params, ck_hash = open_model(cfg)
    entries = {r.record_id: r for r in manifest.records}
    if record_id is None:
        test = [r for r in manifest.records if r.split == "test"]
        entry = (test or manifest.records)[0]
    elif record_id in entries:
        entry = entries[record_id]
    else:
        raise MissingArtifact(f"record {record_id!r} is not in the dataset")
    rec = manifest.load_record(entry)
    prob, mask, in_contact = predict(params, rec, manifest.spectrogram(rec.clip_id), cfg.eval.threshold)
    out = paths(cfg)["predict"]
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(out / f"{entry.record_id}_prob.pgm", prob)
    np.savetxt(out / f"{entry.record_id}_prob.csv", prob, delimiter=",", fmt="%.6g")
    decision = {"record_id": entry.record_id, "threshold": cfg.eval.threshold,
                "in_contact": in_contact, "mask_pixels": int(mask.sum()),
                "max_prob": float(prob.max()), "gt_label": entry.label.value,
                "gt_in_contact": entry.label is not ContactLabel.FREE}
    (out / f"{entry.record_id}_decision.json").write_text(
        json.dumps(decision, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_provenance(out, cfg, {"manifest_hash": manifest.manifest_hash(), "checkpoint_sha256": ck_hash})
    event("prediction", **decision)


def _stratified_holdout(bank: AudioBank, frac: float, seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    train_ids, test_ids = [], []
    for lab in LABELS:
        ids = list(bank.ids_for(lab))
        perm = rng.permutation(len(ids))
        k = max(1, int(round(frac * len(ids)))) if len(ids) > 1 else 0
        test_ids += [ids[i] for i in perm[:k]]
        train_ids += [ids[i] for i in perm[k:]]
    return train_ids, test_ids


def cmd_psd_report(cfg: RunConfig, max_clips: int | None) -> None:
    bank = open_bank(cfg)
    bank.require_all_labels()
    out = paths(cfg)["psd"]
    out.mkdir(parents=True, exist_ok=True)
    summary = {"modes": {}}
    for lab in LABELS:
        ids = bank.ids_for(lab)[:max_clips]
        curves = [welch_psd(bank.load(c)) for c in ids]
        mean = type(curves[0])(curves[0].freqs_hz, np.mean([c.power for c in curves], axis=0))
        mean.to_csv(out / f"psd_{lab.value}.csv")
        summary["modes"][lab.value] = {"clips": len(ids), "peak_hz": mean.peak_hz(),
                                       "band_mean_1k_10k": mean.band_mean(1000, 10000),
                                       "band_mean_100_300": mean.band_mean(100, 300)}
    modes = summary["modes"]
    summary["orderings"] = {
        "point_peak_in_100_300_hz": 100 <= modes["point"]["peak_hz"] <= 300,
        "line_above_patch_1k_10k": modes["line"]["band_mean_1k_10k"] > modes["patch"]["band_mean_1k_10k"],
    }

    train_ids, test_ids = _stratified_holdout(bank, cfg.data.test_frac, cfg.seed)
    if test_ids:
        clf = fit_mode_classifier(bank, cfg.seed, train_ids)
        feats = np.stack([mel_band_features(bank.load(c), clf.mel) for c in test_ids])
        pred = classifier_probs(clf, feats).argmax(axis=1)
        truth = np.array([bank.label_of(c).index for c in test_ids])
        summary["classifier"] = {"train_clips": len(train_ids), "test_clips": len(test_ids),
                                 "heldout_accuracy": float(np.mean(pred == truth))}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    write_provenance(out, cfg, {"bank_hash": bank.content_hash()})
    event("psd report", **summary["orderings"], **summary.get("classifier", {}))


# ---------------------------------------------------------------- argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", metavar="FILE", help="YAML file of dotted keys (e.g. train.epochs: 20)")
    g.add_argument("--seed", type=int, help="global seed (overrides SONOTACT_SEED and the file)")
    g.add_argument("--out", metavar="DIR", help="run directory holding every artifact")
    g.add_argument("--jobs", type=int, help="worker processes for simulate/build/evaluate")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any dotted config key; repeatable")
    g.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="sonotact", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("bank", parents=[common], help="build or synthesize the audio bank")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--synthetic", action="store_true", help="synthesize clips (default)")
    src.add_argument("--source", metavar="DIR", help="directory of recorded WAVs listed in bank.jsonl")
    p.add_argument("--per-label", type=int, help="synthetic clips per contact label")

    p = sub.add_parser("simulate", parents=[common], help="simulate episodes and write frame poses")
    p.add_argument("--episodes", type=int, help="number of episodes")

    p = sub.add_parser("build", parents=[common], help="hallucinate audio onto frames and write the dataset")
    p.add_argument("--episodes", type=int, help="number of episodes")
    p.add_argument("--test-frac", type=float, help="fraction of episodes held out")

    p = sub.add_parser("train", parents=[common], help="train the contact model")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--max-steps", type=int, help="stop after this many optimizer steps")

    p = sub.add_parser("evaluate", parents=[common], help="score the model on the test split")
    p.add_argument("--threshold", type=float, help="probability threshold (0.5 sim, 0.05 real)")

    p = sub.add_parser("predict", parents=[common], help="probability map and decision for one record")
    p.add_argument("--threshold", type=float, help="probability threshold")
    p.add_argument("--record", metavar="ID", help="record id (default: first test record)")

    p = sub.add_parser("psd-report", parents=[common], help="per-mode PSD CSVs and mode separability")
    p.add_argument("--max-clips", type=int, help="clips averaged per mode (default: all)")
    return parser


FLAG_KEYS = {
    "seed": "seed", "out": "out", "jobs": "jobs", "per_label": "bank.per_label",
    "episodes": "data.n_episodes", "test_frac": "data.test_frac", "epochs": "train.epochs",
    "batch_size": "train.batch_size", "lr": "train.lr", "max_steps": "train.max_steps",
    "threshold": "eval.threshold",
}


def overrides_from(args) -> dict:
    ov = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        ov[key.strip()] = value
    for attr, key in FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            ov[key] = value
    if getattr(args, "synthetic", False):
        ov["bank.synthetic"] = True
    if getattr(args, "source", None):
        ov["bank.synthetic"] = False
        ov["bank.source"] = args.source
    return ov


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        cfg = resolve(args.config, overrides_from(args))
        event("config resolved", command=args.command, config_hash=cfg.digest(), out=cfg.out)
        if args.command == "bank":
            cmd_bank(cfg)
        elif args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "build":
            cmd_build(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg)
        elif args.command == "predict":
            cmd_predict(cfg, args.record)
        else:
            cmd_psd_report(cfg, args.max_clips)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except MissingArtifact as exc:
        log.error("missing artifact: %s", exc)
        return EXIT_MISSING
    except SonotactError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
