"""Command line entry point: ``qphish <subcommand> ...``.

Failures print one JSON line ``{"error": <category>, "message": ...}`` on
stderr and exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import models  # noqa: F401
from .base import Classifier, build_model
from .config import load_experiment, load_study
from .data import FEATURES, NodeFeatureTable, SplitSpec, extract_features, ingest_edges, sample_split, synth_dataset
from .errors import QphishError
from .experiments import feature_matrix, run_ansatz_study, run_experiment, run_timing_benchmark, score_predictions


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=str))


def _parse_value(text):
    return yaml.safe_load(text)


def _params(pairs) -> dict:
    out = {}
    for p in pairs or ():
        if "=" not in p:
            raise QphishError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k] = _parse_value(v)
    return out


def cmd_ingest(args):
    graph, labels = ingest_edges(args.edges, args.labels)
    _emit({"nodes": graph.n_nodes, "edges": graph.n_edges,
           "phishing": sum(v == 1 for v in labels.values())})


def cmd_features(args):
    if args.synthetic:
        table = synth_dataset(args.synthetic[0], args.synthetic[1], args.seed)
    else:
        if not args.edges:
            raise QphishError("give --edges or --synthetic")
        graph, labels = ingest_edges(args.edges, args.labels)
        table = extract_features(graph, labels)
    table.to_csv(args.out)
    _emit({"rows": len(table), "phishing": table.n_phishing, "out": args.out})


def cmd_split(args):
    table = NodeFeatureTable.from_csv(args.features)
    spec = SplitSpec(args.train[0], args.train[1], args.test[0], args.test[1], args.seed)
    train, test = sample_split(table, spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train.to_csv(out / "train.csv")
    test.to_csv(out / "test.csv")
    _emit({"train": len(train), "train_phishing": train.n_phishing, "test": len(test),
           "test_phishing": test.n_phishing, "out_dir": str(out)})


def cmd_train(args):
    if args.config:
        summary = run_experiment(load_experiment(args.config))
        _emit(summary)
        return 0 if not summary["failed"] else 3
    if not (args.kind and args.train and args.model_out):
        raise QphishError("train needs --config, or --kind with --train and --model-out")
    table = NodeFeatureTable.from_csv(args.train)
    model = build_model({"kind": args.kind, "params": _params(args.param)})
    model.fit(feature_matrix(table, args.features), table.labels)
    Path(args.model_out).write_text(json.dumps({"features": list(args.features), "model": model.to_dict()}),
                                    encoding="utf-8")
    _emit({"kind": args.kind, "n_train": len(table), "model_out": args.model_out})
    return 0


def cmd_evaluate(args):
    doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
    model = Classifier.from_dict(doc["model"])
    table = NodeFeatureTable.from_csv(args.test)
    pred = model.predict(feature_matrix(table, doc["features"]))
    scores = score_predictions(table.labels, pred)
    if args.out:
        Path(args.out).write_text(json.dumps(scores, indent=2, sort_keys=True), encoding="utf-8")
    _emit(scores)


def cmd_ansatz_study(args):
    result = run_ansatz_study(load_study(args.config))
    _emit({k: v for k, v in result.items() if k not in ("rows", "correlations")})


def cmd_bench(args):
    rows = run_timing_benchmark(args.sizes, args.kinds, args.seed, output=args.out)
    print("size,kind,seconds,kernel_entries")
    for r in rows:
        print(f"{r['size']},{r['kind']},{r['seconds']:.6f},{'' if r['kernel_entries'] is None else r['kernel_entries']}")


def cmd_report(args):
    run = Path(args.run)
    summary = json.loads((run / "summary.json").read_text(encoding="utf-8"))
    if "per_seed" in summary:
        keys = ("macro_precision", "macro_recall", "macro_f1", "phishing_f1", "false_positives")
        print("repeat," + ",".join(keys))
        for row in summary["per_seed"]:
            print(f"{row['repeat']}," + ",".join(f"{row[k]:.4f}" for k in keys))
        if summary["mean"]:
            print("mean," + ",".join(f"{summary['mean'][k]:.4f}" for k in keys))
    else:
        print((run / "correlations.csv").read_text(encoding="utf-8"), end="")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qphish", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="validate an edge list and labels")
    s.add_argument("--edges", required=True)
    s.add_argument("--labels")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("features", help="write the node feature table")
    s.add_argument("--edges")
    s.add_argument("--labels")
    s.add_argument("--synthetic", nargs=2, type=int, metavar=("N_PHISHING", "N_NONPHISHING"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("split", help="sample train/test tables")
    s.add_argument("--features", required=True)
    s.add_argument("--train", nargs=2, type=int, default=(160, 160), metavar=("P", "NP"))
    s.add_argument("--test", nargs=2, type=int, default=(1000, 10000), metavar=("P", "NP"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("train", help="run a configured experiment or fit one model")
    s.add_argument("--config")
    s.add_argument("--kind")
    s.add_argument("--train")
    s.add_argument("--param", action="append", metavar="KEY=VALUE")
    s.add_argument("--features", nargs="+", default=list(FEATURES))
    s.add_argument("--model-out")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="score a saved model on a feature table")
    s.add_argument("--model", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("ansatz-study", help="circuit x encoder x layer grid")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_ansatz_study)

    s = sub.add_parser("bench", help="training time against training-set size")
    s.add_argument("--sizes", nargs="+", type=int, default=[40, 80, 160])
    s.add_argument("--kinds", nargs="+", default=["qsvm-kernel"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("report", help="print the tables of a finished run")
    s.add_argument("--run", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except QphishError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
