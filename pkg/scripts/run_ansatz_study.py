"""Circuit x encoder x layer grid with expressibility/entangling-capacity
correlations. Re-running the same config resumes where it stopped.

    python3 scripts/run_ansatz_study.py configs/ansatz_study_reduced.yaml
"""

import argparse
import dataclasses
from pathlib import Path

from qphish.config import load_study
from qphish.experiments import run_ansatz_study

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?", default=HERE / "configs" / "ansatz_study.yaml")
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()

    cfg = load_study(args.config)
    if args.workers:
        cfg = dataclasses.replace(cfg, workers=args.workers)
    result = run_ansatz_study(cfg)
    print(f"{result['completed']}/{result['n_cells']} cells ({result['skipped']} reused) in {result['study_dir']}")
    for c in result["correlations"]:
        if c["score"] == "f1":
            r = "undefined" if c["r"] is None else f"{c['r']:+.3f}"
            print(f"layers={c['layers']} {c['encoder']:9s} {c['metric']:15s} r(F1) = {r}")
    for cell in result["failures"]:
        print("failed:", cell)


if __name__ == "__main__":
    main()
