"""Synthesize the 1000-clip bank and print per-mode PSD structure and classifier accuracy.

Usage: python scripts/psd_report.py [--out runs/psd] [--seed 1]
"""

import argparse
import json
import sys
from pathlib import Path

from sonotact.cli import run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/psd")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    common = ["--out", args.out, "--seed", str(args.seed)]
    if not (Path(args.out) / "bank" / "bank.jsonl").exists():
        code = run(["bank", "--synthetic", "--per-label", "250", *common])
        if code:
            return code
    code = run(["psd-report", *common])
    if code:
        return code
    summary = json.loads((Path(args.out) / "psd" / "summary.json").read_text())
    print(f"{'mode':<6} {'peak Hz':>8} {'100-300 Hz':>11} {'1-10 kHz':>10}")
    for mode, row in summary["modes"].items():
        print(f"{mode:<6} {row['peak_hz']:8.0f} {row['band_mean_100_300']:11.3e} {row['band_mean_1k_10k']:10.3e}")
    print(json.dumps({**summary["orderings"], **summary.get("classifier", {})}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
