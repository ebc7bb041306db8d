"""Full desk-scale pipeline: synthetic bank, 100 episodes, 20 epochs, evaluation at 0.5.

Usage: python scripts/desk_run.py [--out runs/desk] [--jobs 1] [extra --set KEY=VALUE ...]
Prints the evaluation report and the wall time of every stage as JSON on stdout.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from sonotact.cli import run

F1_TARGET = 0.90
CD_TARGET_PX = 4.0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--set", action="append", default=[])
    args = ap.parse_args(argv)

    common = ["--out", args.out, "--seed", str(args.seed), "--jobs", str(args.jobs)]
    for kv in args.set:
        common += ["--set", kv]
    stages = [
        ["bank", "--synthetic", "--per-label", "250"],
        ["build"],
        ["train"],
        ["evaluate", "--threshold", "0.5"],
    ]
    timings = {}
    start = time.monotonic()
    for stage in stages:
        t0 = time.monotonic()
        code = run(stage + common)
        timings[stage[0]] = round(time.monotonic() - t0, 1)
        if code:
            print(json.dumps({"failed_stage": stage[0], "exit": code}))
            return code
    report = json.loads((Path(args.out) / "eval" / "report.json").read_text())
    summary = {
        "f1": report["f1"], "precision": report["precision"], "recall": report["recall"],
        "mean_cd_px": report["mean_cd_px"], "mean_iou": report["mean_iou"],
        "timings_s": timings, "total_s": round(time.monotonic() - start, 1),
        "f1_ok": report["f1"] >= F1_TARGET,
        "cd_ok": report["mean_cd_px"] is not None and report["mean_cd_px"] <= CD_TARGET_PX,
    }
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
