"""Experiment configuration: dataclasses loaded from YAML and validated in
full before any computation starts."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import models  # noqa: F401  (fills the model registry)
from .base import build_model
from .data import FEATURES, SplitSpec
from .encoders import ENCODERS
from .errors import ConfigurationError, QphishError, ValidationError

MODEL_KINDS = ("vqc", "qsvm-kernel", "qsvm-anneal", "logistic", "gbt", "classical-svm", "stack", "bag")
DATA_SOURCES = ("synthetic", "features", "edges")


@dataclass
class DataConfig:
    source: str = "synthetic"
    path: str | None = None
    labels_path: str | None = None
    n_phishing: int = 1165
    n_nonphishing: int = 20000
    features: list[str] = field(default_factory=lambda: list(FEATURES))

    def validate(self):
        if self.source not in DATA_SOURCES:
            raise ValidationError(f"data.source must be one of {DATA_SOURCES}, got {self.source!r}")
        if self.source != "synthetic":
            if not self.path:
                raise ValidationError(f"data.path is required for source {self.source!r}")
            for p in (self.path, self.labels_path):
                if p and not Path(p).is_file():
                    raise ValidationError(f"no such file: {p}")
        elif self.n_phishing < 1 or self.n_nonphishing < 1:
            raise ValidationError("synthetic class counts must be positive")
        bad = [f for f in self.features if f not in FEATURES]
        if bad or not self.features:
            raise ValidationError(f"unknown or empty feature selection {bad}; choose from {FEATURES}")


@dataclass
class ModelConfig:
    kind: str = "logistic"
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.kind not in MODEL_KINDS:
            raise ValidationError(f"model.kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        try:
            build_model({"kind": self.kind, "params": self.params})
        except TypeError as exc:
            raise ValidationError(f"bad parameters for {self.kind}: {exc}") from None
        except QphishError as exc:
            raise ValidationError(f"bad parameters for {self.kind}: {exc}") from None

    def spec(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    repeats: int = 1
    data: DataConfig = field(default_factory=DataConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    output_dir: str = "runs"
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.repeats < 1:
            raise ValidationError("repeats must be at least 1")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")
        self.data.validate()
        self.model.validate()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]


@dataclass
class StudyConfig:
    name: str = "ansatz-study"
    seed: int = 0
    circuits: list[int] = field(default_factory=lambda: list(range(1, 20)))
    encoders: list[str] = field(default_factory=lambda: ["z", "zz", "amplitude"])
    layers: list[int] = field(default_factory=lambda: [1, 2])
    reps: int = 2
    max_evaluations: int = 100
    log_features: bool = True
    n_pairs: int = 5000
    n_param_samples: int = 1000
    data: DataConfig = field(default_factory=DataConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    output_dir: str = "runs"
    workers: int = 1

    def validate(self) -> "StudyConfig":
        from .ansatz import template_ids

        known = set(template_ids())
        if not self.circuits or any(c not in known for c in self.circuits):
            raise ValidationError(f"circuits must be drawn from {sorted(known)}")
        if not self.encoders or any(e not in ENCODERS for e in self.encoders):
            raise ValidationError(f"encoders must be drawn from {ENCODERS}")
        if not self.layers or any(l < 1 for l in self.layers):
            raise ValidationError("layers must be positive integers")
        if "zz" in self.encoders and len(self.data.features) < 2:
            raise ValidationError("the ZZ map needs at least two features")
        self.data.validate()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, raw, where):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ValidationError(f"{where}: expected a mapping, got {type(raw).__name__}")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(names))
    if unknown:
        raise ValidationError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for key, value in raw.items():
        sub = _NESTED.get((cls, key))
        kwargs[key] = _build(sub, value, f"{where}.{key}") if sub else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"{where}: {exc}") from None


_NESTED = {
    (ExperimentConfig, "data"): DataConfig,
    (ExperimentConfig, "split"): SplitSpec,
    (ExperimentConfig, "model"): ModelConfig,
    (StudyConfig, "data"): DataConfig,
    (StudyConfig, "split"): SplitSpec,
}


def experiment_from_dict(raw: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, raw, "config").validate()


def study_from_dict(raw: dict) -> StudyConfig:
    return _build(StudyConfig, raw, "config").validate()


def load_yaml(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: invalid YAML: {exc}") from None
    return raw or {}


def load_experiment(path) -> ExperimentConfig:
    return experiment_from_dict(load_yaml(path))


def load_study(path) -> StudyConfig:
    return study_from_dict(load_yaml(path))


def dump_yaml(d: dict, path):
    Path(path).write_text(yaml.safe_dump(d, sort_keys=False), encoding="utf-8")

