"""Run every model/ensemble config in a directory and tabulate mean scores.

    python3 scripts/run_table2.py                       # all of configs/table2
    python3 scripts/run_table2.py --repeats 1 --only vqc stack-vqc-gbt
"""

import argparse
import csv
import dataclasses
from pathlib import Path

from qphish.config import load_experiment
from qphish.experiments import run_experiment

HERE = Path(__file__).resolve().parent
COLUMNS = ("macro_precision", "macro_recall", "macro_f1", "phishing_f1", "false_positives")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", default=HERE / "configs" / "table2", type=Path)
    ap.add_argument("--only", nargs="*", help="config names to run")
    ap.add_argument("--repeats", type=int, help="override repeats in every config")
    ap.add_argument("--workers", type=int, help="override worker count")
    ap.add_argument("--out", default="runs/table2/table.csv")
    args = ap.parse_args()

    rows = []
    for path in sorted(args.configs.glob("*.yaml")):
        cfg = load_experiment(path)
        if args.only and cfg.name not in args.only:
            continue
        if args.repeats:
            cfg = dataclasses.replace(cfg, repeats=args.repeats)
        if args.workers:
            cfg = dataclasses.replace(cfg, workers=args.workers)
        summary = run_experiment(cfg)
        if summary["failed"]:
            print(f"{cfg.name}: {len(summary['failed'])} repeat(s) failed, see {summary['run_dir']}")
        if not summary["mean"]:
            continue
        rows.append([cfg.name] + [summary["mean"][c] for c in COLUMNS])
        print(f"{cfg.name:20s} " + " ".join(f"{summary['mean'][c]:9.4f}" for c in COLUMNS), flush=True)

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("model",) + COLUMNS)
        w.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
