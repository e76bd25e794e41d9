"""Stacking and bagging over any mix of classifiers.

Stacking appends each lower-level model's predictions on the data as extra
feature columns. Base predictions on the training set are in-sample, so the
meta learner sees columns produced by models that were fit on the same rows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .base import Classifier, build_model, check_dataset, register, sign_labels
from .errors import ContractError, InputError, ParameterError, UsageError

COMBINERS = ("max_vote", "weighted_average")


def prediction_columns(models, X, probabilities: bool = False) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cols = []
    for m in models:
        if not m.fitted:
            raise UsageError(f"base model {m.name} is not fitted")
        if probabilities and m.has_probabilities:
            cols.append(m.positive_probability(X))
        else:
            cols.append(m.predict(X).astype(float))
    return np.column_stack(cols) if cols else np.empty((len(X), 0))


def augment_features(models, X, probabilities: bool = False) -> np.ndarray:
    """``X`` with one appended column per model, in the given order."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, prediction_columns(models, X, probabilities)])


@dataclass
class StackingPlan:
    level0: list
    meta: object
    level1: list = field(default_factory=list)
    probabilities: bool = False

    def models(self) -> tuple[list[Classifier], list[Classifier], Classifier]:
        return [build_model(m) for m in self.level0], [build_model(m) for m in self.level1], build_model(self.meta)


@register
class StackedClassifier(Classifier):
    """Two-level (``level1`` empty) or three-level stack."""

    kind = "stack"

    def __init__(self, level0=(), meta=None, level1=(), probabilities: bool = False, name=None):
        super().__init__(name)
        if meta is None:
            raise InputError("a stack needs a meta classifier")
        self.plan = StackingPlan(list(level0), meta, list(level1), probabilities)
        self.level0, self.level1, self.meta = self.plan.models()
        self.signature: list = []

    def _levels(self):
        return [lvl for lvl in (self.level0, self.level1) if lvl]

    def _augment(self, X, record=False):
        Z = X
        signature = []
        for level in self._levels():
            if record:
                for m in level:
                    m.fit(Z, self._y)
            Z = augment_features(level, Z, self.plan.probabilities)
            signature.append([Z.shape[1], [m.name for m in level]])
        if record:
            self.signature = signature
        elif signature != self.signature:
            raise ContractError(f"augmentation drift: trained with {self.signature}, predicting with {signature}")
        return Z

    def _fit(self, X, y):
        self._y = y
        try:
            Z = self._augment(X, record=True)
        finally:
            del self._y
        self.meta.fit(Z, y)

    def meta_features(self, X) -> np.ndarray:
        return self._augment(self._check_predict(X))

    def _predict(self, X):
        return self.meta.predict(self._augment(X))

    def positive_probability(self, X):
        return self.meta.positive_probability(self._augment(self._check_predict(X)))

    @property
    def has_probabilities(self):
        return self.meta.has_probabilities

    def get_params(self):
        def spec(m):
            return {"kind": m.kind, "params": m.get_params()}
        return {"level0": [spec(m) for m in self.level0], "meta": spec(self.meta),
                "level1": [spec(m) for m in self.level1], "probabilities": self.plan.probabilities}

    def get_state(self):
        return {"level0": [m.to_dict() for m in self.level0], "level1": [m.to_dict() for m in self.level1],
                "meta": self.meta.to_dict(), "signature": self.signature}

    def set_state(self, s):
        self.level0 = [Classifier.from_dict(d) for d in s["level0"]]
        self.level1 = [Classifier.from_dict(d) for d in s["level1"]]
        self.meta = Classifier.from_dict(s["meta"])
        self.signature = s["signature"]


def train_stack(plan: StackingPlan, X, y) -> StackedClassifier:
    return StackedClassifier(plan.level0, plan.meta, plan.level1, plan.probabilities).fit(X, y)


def combine_predictions(preds, combine: str = "max_vote", weights=None) -> np.ndarray:
    """Combine an (M, N) matrix of member labels. Ties go to +1 in both modes."""
    preds = np.atleast_2d(np.asarray(preds, dtype=float))
    if preds.shape[0] < 1:
        raise InputError("need at least one member")
    if combine == "max_vote":
        return sign_labels(preds.sum(axis=0))
    if combine == "weighted_average":
        if weights is None:
            raise ParameterError("weighted_average needs member weights")
        w = np.asarray(weights, dtype=float)
        if w.shape != (preds.shape[0],):
            raise ParameterError(f"expected {preds.shape[0]} weights, got shape {w.shape}")
        if np.any(w < 0) or not np.any(w > 0):
            raise ParameterError("weights must be nonnegative and not all zero")
        return sign_labels(w @ preds)
    raise ParameterError(f"unknown combiner {combine!r}; expected one of {COMBINERS}")


def bag_predict(members, X, combine: str = "max_vote", weights=None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    preds = np.vstack([m.predict(X) for m in members]) if members else np.empty((0, len(X)))
    return combine_predictions(preds, combine, weights)


def phishing_f1(y_true, y_pred) -> float:
    tp = np.sum((y_true == 1) & (y_pred == 1))
    fp = np.sum((y_true == -1) & (y_pred == 1))
    fn = np.sum((y_true == 1) & (y_pred == -1))
    return float(2 * tp / (2 * tp + fp + fn)) if tp else 0.0


@dataclass
class BaggingPlan:
    base: dict
    n_models: int = 5
    combine: str = "max_vote"
    holdout: float = 0.2
    seed: int = 0


@register
class BaggedClassifier(Classifier):
    """Members share every positive in the (non-held-out) pool and each draws
    its own, equally many negatives without replacement. Weighted mode scores
    members by phishing F1 on a stratified held-out slice of the pool."""

    kind = "bag"

    def __init__(self, base=None, n_models: int = 5, combine: str = "max_vote", holdout: float = 0.2,
                 seed: int = 0, name=None):
        super().__init__(name)
        if base is None:
            raise InputError("bagging needs a base model spec")
        if combine not in COMBINERS:
            raise ParameterError(f"unknown combiner {combine!r}; expected one of {COMBINERS}")
        if n_models < 1:
            raise ParameterError("n_models must be at least 1")
        self.plan = BaggingPlan(dict(base), n_models, combine, holdout, seed)
        self.members: list[Classifier] = []
        self.weights: np.ndarray | None = None

    def _fit(self, X, y):
        p = self.plan
        rng = np.random.default_rng(p.seed)
        pos, neg = np.flatnonzero(y == 1), np.flatnonzero(y == -1)
        if len(pos) == 0 or len(neg) == 0:
            raise InputError("bagging needs both classes in the training pool")
        val = np.array([], dtype=int)
        if p.combine == "weighted_average":
            pos, pos_val = _split(rng.permutation(pos), p.holdout)
            neg, neg_val = _split(rng.permutation(neg), p.holdout)
            val = np.concatenate([pos_val, neg_val])
        k = min(len(pos), len(neg))
        self.members = []
        for _ in range(p.n_models):
            rows = np.concatenate([pos, rng.choice(neg, size=k, replace=False)])
            member = build_model(p.base)
            self.members.append(member.fit(X[rows], y[rows]))
        if p.combine == "weighted_average":
            w = np.array([phishing_f1(y[val], m.predict(X[val])) for m in self.members])
            if not np.any(w > 0):
                warnings.warn("every member scored zero phishing F1 on the held-out slice; using equal weights")
                w = np.ones(p.n_models)
            self.weights = w

    def _predict(self, X):
        return bag_predict(self.members, X, self.plan.combine, self.weights)

    def get_params(self):
        p = self.plan
        return {"base": p.base, "n_models": p.n_models, "combine": p.combine, "holdout": p.holdout, "seed": p.seed}

    def get_state(self):
        return {"members": [m.to_dict() for m in self.members],
                "weights": None if self.weights is None else self.weights.tolist()}

    def set_state(self, s):
        self.members = [Classifier.from_dict(d) for d in s["members"]]
        self.weights = None if s["weights"] is None else np.asarray(s["weights"], dtype=float)


def _split(idx, frac):
    n_val = int(round(frac * len(idx)))
    if len(idx) > 1:
        n_val = min(max(n_val, 1), len(idx) - 1)
    else:
        n_val = 0
    return idx[n_val:], idx[:n_val]


def train_bag(plan: BaggingPlan, X, y) -> BaggedClassifier:
    X, y = check_dataset(X, y)
    return BaggedClassifier(plan.base, plan.n_models, plan.combine, plan.holdout, plan.seed).fit(X, y)
