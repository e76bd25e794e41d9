"""The shared classifier contract.

Every model (quantum, classical, ensemble) is trained with ``fit(X, y)`` and
predicts +1 (phishing) / -1 (non-phishing) labels with ``predict(X)``.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError, UsageError

_REGISTRY: dict[str, type] = {}


def register(cls):
    _REGISTRY[cls.kind] = cls
    return cls


def check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or y.size == 0:
        raise InputError("labels must be a nonempty 1-D vector")
    if not np.all(np.isin(y, (-1, 1))):
        raise InputError("labels must be +1 or -1")
    return y.astype(int)


def check_dataset(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"features must be a nonempty 2-D array, got shape {X.shape}")
    y = check_labels(y)
    if len(y) != len(X):
        raise InputError(f"{len(X)} feature rows but {len(y)} labels")
    return X, y


def sign_labels(scores) -> np.ndarray:
    """+1 where score >= 0 (ties go to phishing), else -1."""
    return np.where(np.asarray(scores) >= 0, 1, -1)


def build_model(spec) -> "Classifier":
    """Instantiate from ``{"kind": ..., "params": {...}}``, a full ``to_dict``
    document, or pass an existing classifier through."""
    if isinstance(spec, Classifier):
        return spec
    if "fitted" in spec:
        return Classifier.from_dict(spec)
    klass = _REGISTRY.get(spec.get("kind"))
    if klass is None:
        raise InputError(f"unknown model kind {spec.get('kind')!r}; known: {sorted(_REGISTRY)}")
    return klass(**spec.get("params", {}))


def model_kinds() -> list[str]:
    return sorted(_REGISTRY)


class Classifier:
    kind = "classifier"

    def __init__(self, name: str | None = None):
        self.name = name or self.kind
        self.fitted = False
        self.n_features: int | None = None

    def fit(self, X, y) -> "Classifier":
        X, y = check_dataset(X, y)
        self.n_features = X.shape[1]
        self._fit(X, y)
        self.fitted = True
        return self

    def predict(self, X) -> np.ndarray:
        X = self._check_predict(X)
        return self._predict(X)

    def predict_one(self, x) -> int:
        return int(self.predict(np.asarray(x, dtype=float)[None, :])[0])

    def positive_probability(self, X) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} does not expose probabilities")

    @property
    def has_probabilities(self) -> bool:
        return type(self).positive_probability is not Classifier.positive_probability

    def _check_predict(self, X) -> np.ndarray:
        if not self.fitted:
            raise UsageError(f"{self.name} must be fitted before predicting")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise InputError(f"{self.name} was fitted on {self.n_features} features, got {X.shape[1]}")
        return X

    def _fit(self, X, y):
        raise NotImplementedError

    def _predict(self, X):
        raise NotImplementedError

    # serialisation

    def get_params(self) -> dict:
        return {}

    def get_state(self) -> dict:
        return {}

    def set_state(self, state: dict):
        pass

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "params": self.get_params(),
            "fitted": self.fitted,
            "n_features": self.n_features,
            "state": self.get_state() if self.fitted else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Classifier":
        klass = _REGISTRY.get(d["kind"])
        if klass is None:
            raise InputError(f"unknown model kind {d['kind']!r}")
        model = klass(**d.get("params", {}))
        model.name = d.get("name", model.kind)
        if d.get("fitted"):
            model.n_features = d["n_features"]
            model.set_state(d["state"])
            model.fitted = True
        return model
