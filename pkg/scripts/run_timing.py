"""Training time against training-set size for the quantum models.

Kernel construction is quadratic in the training size; the kernel_entries
column makes that visible next to the raw timings.
"""

import argparse

from qphish.experiments import run_timing_benchmark

PARAMS = {
    "qsvm-kernel": {"encoder": "zz", "log_features": True},
    "vqc": {"encoder": "z", "reps": 2, "ansatz_id": 1, "log_features": True},
    "qsvm-anneal": {"sigma": 150.0},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="+", type=int, default=[40, 80, 160, 320])
    ap.add_argument("--kinds", nargs="+", default=["qsvm-kernel", "vqc"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/timing.csv")
    args = ap.parse_args()

    rows = run_timing_benchmark(args.sizes, args.kinds, args.seed, params=PARAMS, output=args.out)
    for r in rows:
        entries = "" if r["kernel_entries"] is None else f"  kernel entries {r['kernel_entries']}"
        print(f"{r['kind']:12s} n={r['size']:5d}  {r['seconds']:8.2f}s{entries}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
