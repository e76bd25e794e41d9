"""Config-driven pipelines: repeated train/evaluate runs, the ansatz study
grid and the training-time benchmark. Every artifact is plain text."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import inspect
import json
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from itertools import product
from pathlib import Path

import numpy as np

from .ansatz import build_ansatz
from .base import _REGISTRY, build_model
from .config import DataConfig, ExperimentConfig, StudyConfig, dump_yaml
from .data import FEATURES, NodeFeatureTable, extract_features, ingest_edges, split_indices, synth_dataset
from .encoders import EncoderKind
from .errors import QphishError, ValidationError
from .evaluation import classification_report, correlation_report, false_positive_count
from .metrics import entangling_capacity, expressibility

REPORT_KEYS = ("macro_precision", "macro_recall", "macro_f1", "phishing_f1", "false_positives")


def load_table(cfg: DataConfig, seed: int = 0) -> NodeFeatureTable:
    if cfg.source == "synthetic":
        return synth_dataset(cfg.n_phishing, cfg.n_nonphishing, seed)
    if cfg.source == "features":
        return NodeFeatureTable.from_csv(cfg.path)
    graph, labels = ingest_edges(cfg.path, cfg.labels_path)
    return extract_features(graph, labels)


def feature_matrix(table: NodeFeatureTable, features) -> np.ndarray:
    return table.features[:, [FEATURES.index(f) for f in features]]


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True), encoding="utf-8")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def score_predictions(y_true, y_pred) -> dict:
    rep = classification_report(y_true, y_pred)
    return {
        "macro_precision": rep.macro_precision,
        "macro_recall": rep.macro_recall,
        "macro_f1": rep.macro_f1,
        "phishing_f1": rep.phishing_f1,
        "false_positives": false_positive_count(y_true, y_pred),
        "report": rep.to_dict(),
    }


def _accepts_seed(kind: str) -> bool:
    return "seed" in inspect.signature(_REGISTRY[kind].__init__).parameters


def model_for_repeat(spec: dict, seed: int):
    """Model seeds derive from the experiment seed and repeat index."""
    params = dict(spec.get("params", {}))
    if _accepts_seed(spec["kind"]):
        params["seed"] = seed
    return build_model({"kind": spec["kind"], "params": params})


def bagging_pool(table: NodeFeatureTable, train, test, n_models: int, seed: int) -> np.ndarray:
    """Training rows for bagging: the train split plus unused negatives, so
    members can draw distinct negative subsets."""
    used = np.zeros(len(table), dtype=bool)
    used[train] = used[test] = True
    n_neg = int(np.sum(table.labels[train] == -1))
    spare = np.flatnonzero(~used & (table.labels == -1))
    extra = np.random.default_rng(seed).permutation(spare)[: max(0, (n_models - 1) * n_neg)]
    return np.sort(np.concatenate([train, extra]))


def _run_repeat(args):
    cfg, table, repeat, run_dir = args
    seed = cfg.seed + repeat
    rdir = Path(run_dir) / f"repeat_{repeat}"
    rdir.mkdir(parents=True, exist_ok=True)
    try:
        split = dataclasses.replace(cfg.split, seed=cfg.split.seed + repeat)
        train, test = split_indices(table, split)
        spec = cfg.model.spec()
        if spec["kind"] == "bag":
            train = bagging_pool(table, train, test, spec["params"].get("n_models", 5), seed)
        X = feature_matrix(table, cfg.data.features)
        model = model_for_repeat(spec, seed)
        t0 = time.perf_counter()
        model.fit(X[train], table.labels[train])
        fit_seconds = time.perf_counter() - t0
        t0 = time.perf_counter()
        pred = model.predict(X[test])
        predict_seconds = time.perf_counter() - t0
        scores = score_predictions(table.labels[test], pred)
        result = {"repeat": repeat, "seed": seed, "n_train": len(train), "n_test": len(test),
                  **{k: scores[k] for k in REPORT_KEYS}, "report": scores["report"]}
        _write_json(rdir / "report.json", result)
        _write_json(rdir / "model.json", model.to_dict())
        _write_csv(rdir / "predictions.csv", ("address", "label", "prediction"),
                   [(table.addresses[i], int(table.labels[i]), int(p)) for i, p in zip(test, pred)])
        return {"ok": True, "result": result, "timing": (repeat, fit_seconds, predict_seconds)}
    except Exception as exc:  # keep the partial run and mark the failure
        category = exc.category if isinstance(exc, QphishError) else "internal"
        (rdir / "FAILED").write_text(f"{category}: {exc}\n{traceback.format_exc()}", encoding="utf-8")
        return {"ok": False, "repeat": repeat, "category": category, "message": str(exc)}


def run_experiment(cfg: ExperimentConfig, timestamp: str | None = None) -> dict:
    """Train and evaluate ``cfg.repeats`` times; write a bundle under
    ``output_dir/<config hash>-<timestamp>``. Returns the summary."""
    cfg.validate()
    if "seed" in cfg.model.params:
        raise ValidationError("model seeds derive from the top-level seed; drop model.params.seed")
    table = load_table(cfg.data, cfg.seed)
    stamp = timestamp or time.strftime("%Y%m%dT%H%M%S")
    run_dir = Path(cfg.output_dir) / f"{cfg.digest()}-{stamp}"
    run_dir.mkdir(parents=True, exist_ok=True)
    dump_yaml(cfg.to_dict(), run_dir / "config.yaml")
    outcomes = _map(_run_repeat, [(cfg, table, r, str(run_dir)) for r in range(cfg.repeats)], cfg.workers)
    done = [o["result"] for o in outcomes if o["ok"]]
    failed = [{k: o[k] for k in ("repeat", "category", "message")} for o in outcomes if not o["ok"]]
    mean = {k: float(np.mean([d[k] for d in done])) for k in REPORT_KEYS} if done else {}
    summary = {
        "name": cfg.name,
        "run_id": run_dir.name,
        "model": cfg.model.kind,
        "per_seed": [{k: d[k] for k in ("repeat", "seed") + REPORT_KEYS} for d in done],
        "mean": mean,
        "failed": failed,
    }
    _write_json(run_dir / "summary.json", summary)
    _write_csv(run_dir / "metrics.csv", ("repeat", "seed") + REPORT_KEYS,
               [[d[k] for k in ("repeat", "seed") + REPORT_KEYS] for d in done])
    _write_csv(run_dir / "timing.csv", ("repeat", "fit_seconds", "predict_seconds"),
               [o["timing"] for o in outcomes if o["ok"]])
    summary["run_dir"] = str(run_dir)
    return summary


# ansatz study

def _cell_key(cell: dict, shared: dict) -> str:
    blob = json.dumps({"cell": cell, "shared": shared}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@lru_cache(maxsize=None)
def _circuit_metrics(circuit: int, n_qubits: int, layers: int, n_pairs: int, n_samples: int, seed: int):
    ansatz = build_ansatz(circuit, n_qubits, layers)
    expr = expressibility(ansatz, n_pairs=n_pairs, seed=seed).kl_divergence
    cap = entangling_capacity(ansatz, n_param_samples=n_samples, seed=seed)
    return expr, cap.meyer_wallach, cap.von_neumann_bits


def _study_cell(args):
    cell, cfg, X_train, y_train, X_test, y_test = args
    n_qubits = EncoderKind(cell["encoder"], cfg.reps).n_qubits(X_train.shape[1])
    expr, mw, vn = _circuit_metrics(cell["circuit"], n_qubits, cell["layers"], cfg.n_pairs, cfg.n_param_samples,
                                    cfg.seed)
    model = build_model({"kind": "vqc", "params": {
        "encoder": cell["encoder"], "reps": cfg.reps, "ansatz_id": cell["circuit"], "layers": cell["layers"],
        "max_evaluations": cfg.max_evaluations, "seed": cfg.seed, "log_features": cfg.log_features}})
    model.fit(X_train, y_train)
    scores = score_predictions(y_test, model.predict(X_test))
    return {**cell, "n_qubits": n_qubits, "expressibility": expr, "meyer_wallach": mw, "von_neumann": vn,
            "precision": scores["macro_precision"], "recall": scores["macro_recall"], "f1": scores["macro_f1"],
            "phishing_f1": scores["phishing_f1"], "false_positives": scores["false_positives"],
            "final_cost": model.model.cost_trace[-1]}


STUDY_COLUMNS = ("circuit", "encoder", "layers", "n_qubits", "expressibility", "meyer_wallach", "von_neumann",
                 "precision", "recall", "f1", "phishing_f1", "false_positives", "final_cost")


def study_cells(cfg: StudyConfig) -> list[dict]:
    return [{"circuit": c, "encoder": e, "layers": l} for c, e, l in product(cfg.circuits, cfg.encoders, cfg.layers)]


def run_ansatz_study(cfg: StudyConfig) -> dict:
    """Grid of VQC trainings plus circuit metrics. Completed cells are kept
    under ``cells/`` and skipped when the study is re-invoked."""
    cfg.validate()
    shared = {k: v for k, v in cfg.to_dict().items() if k not in ("circuits", "encoders", "layers", "output_dir",
                                                                  "workers", "name")}
    digest = hashlib.sha256(json.dumps(shared, sort_keys=True).encode()).hexdigest()[:12]
    out = Path(cfg.output_dir) / f"{cfg.name}-{digest}"
    (out / "cells").mkdir(parents=True, exist_ok=True)
    dump_yaml(cfg.to_dict(), out / "config.yaml")

    table = load_table(cfg.data, cfg.seed)
    train, test = split_indices(table, cfg.split)
    X = feature_matrix(table, cfg.data.features)
    y = table.labels

    cells = study_cells(cfg)
    todo, rows, skipped = [], {}, 0
    for cell in cells:
        key = _cell_key(cell, shared)
        path = out / "cells" / f"{key}.json"
        if path.exists():
            rows[key] = json.loads(path.read_text(encoding="utf-8"))
            skipped += 1
        else:
            todo.append((key, cell))

    runner = _StudyRunner(cfg, X, y, train, test)
    failures = []
    for key, cell, row, err in _map(runner, todo, cfg.workers):
        if row is None:
            failures.append({"cell": cell, "error": err})
            continue
        _write_json(out / "cells" / f"{key}.json", row)
        rows[key] = row

    ordered = [rows[_cell_key(c, shared)] for c in cells if _cell_key(c, shared) in rows]
    _write_csv(out / "table.csv", STUDY_COLUMNS, [[r[c] for c in STUDY_COLUMNS] for r in ordered])

    correlations = []
    for layers in cfg.layers:
        subset = [r for r in ordered if r["layers"] == layers]
        usable = [r for r in subset if sum(s["encoder"] == r["encoder"] for s in subset) >= 3]
        if usable:
            correlations += [{"layers": layers, **c} for c in correlation_report(usable)]
    _write_csv(out / "correlations.csv", ("layers", "encoder", "metric", "score", "r", "defined", "n"),
               [[c["layers"], c["encoder"], c["metric"], c["score"], c["r"], c["defined"], c["n"]]
                for c in correlations])

    layer_rows = []
    by_pair = {}
    for r in ordered:
        by_pair.setdefault((r["circuit"], r["encoder"]), {})[r["layers"]] = r["f1"]
    for (circuit, encoder), f1s in sorted(by_pair.items()):
        layer_rows.append([circuit, encoder] + [f1s.get(l, "") for l in cfg.layers])
    _write_csv(out / "layers.csv", ["circuit", "encoder"] + [f"macro_f1_layers_{l}" for l in cfg.layers],
               layer_rows)
    _write_json(out / "failures.json", failures)

    signs = {}
    for c in correlations:
        if c["metric"] in ("meyer_wallach", "von_neumann", "expressibility") and c["score"] == "f1" and c["defined"]:
            signs[f"{c['encoder']}/L{c['layers']}/{c['metric']}"] = int(np.sign(c["r"]))
    summary = {"study_dir": str(out), "n_cells": len(cells), "completed": len(ordered), "skipped": skipped,
               "failures": failures, "f1_correlation_signs": signs}
    _write_json(out / "summary.json", summary)
    return {**summary, "rows": ordered, "correlations": correlations}


class _StudyRunner:
    # picklable cell runner for process pools
    def __init__(self, cfg, X, y, train, test):
        self.args = (cfg, X[train], y[train], X[test], y[test])

    def __call__(self, item):
        key, cell = item
        try:
            return key, cell, _study_cell((cell, *self.args)), None
        except Exception as exc:  # recorded, the grid carries on
            return key, cell, None, f"{type(exc).__name__}: {exc}"


# timing benchmark

KERNEL_KINDS = ("qsvm-kernel", "qsvm-anneal", "classical-svm")


def run_timing_benchmark(sizes, kinds=("qsvm-kernel",), seed: int = 0, params: dict | None = None,
                         features=FEATURES, output=None) -> list[dict]:
    """Wall-clock fit time per (size, model) on balanced synthetic samples."""
    sizes = [int(s) for s in sizes]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 2:
        raise ValidationError("sizes must be ascending integers >= 2")
    params = params or {}
    half = (sizes[-1] + 1) // 2
    table = synth_dataset(half, half, seed)
    X = feature_matrix(table, features)
    pos, neg = np.flatnonzero(table.labels == 1), np.flatnonzero(table.labels == -1)
    rows = []
    for kind in kinds:
        # untimed warm-up so JIT compilation and caches do not land in the first row
        idx = np.concatenate([pos[:1], neg[:1]])
        build_model({"kind": kind, "params": dict(params.get(kind, {}))}).fit(X[idx], table.labels[idx])
    for size in sizes:
        rows_idx = np.concatenate([pos[: (size + 1) // 2], neg[: size // 2]])
        for kind in kinds:
            model = build_model({"kind": kind, "params": dict(params.get(kind, {}))})
            t0 = time.perf_counter()
            model.fit(X[rows_idx], table.labels[rows_idx])
            seconds = time.perf_counter() - t0
            entries = size * (size + 1) // 2 if kind in KERNEL_KINDS else None
            rows.append({"size": size, "kind": kind, "seconds": seconds, "kernel_entries": entries})
    if output is not None:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        _write_csv(output, ("size", "kind", "seconds", "kernel_entries"),
                   [[r["size"], r["kind"], f"{r['seconds']:.6f}", "" if r["kernel_entries"] is None
                     else r["kernel_entries"]] for r in rows])
    return rows
