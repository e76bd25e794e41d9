"""Variational quantum classifier.

A feature map loads the (min-max scaled) input, a layered ansatz is applied,
and the computational-basis outcome distribution is decoded by parity: even
bitstrings vote +1, odd ones -1. Training minimises the mean binary
cross-entropy of the parity probability with a derivative-free optimiser.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import build_ansatz
from .base import Classifier, check_dataset, register
from .encoders import EncoderKind, FeatureScaler, encode_scaled
from .errors import ConfigurationError
from .optimize import DEFAULT_BUDGET, minimize
from .qsim import CircuitSpec, simulate

PROB_CLAMP = 1e-9


def even_parity_mask(n_qubits: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    bits = np.zeros_like(idx)
    for q in range(n_qubits):
        bits += (idx >> q) & 1
    return bits % 2 == 0


def parity_label_probability(probs) -> np.ndarray | float:
    """Probability of label +1: total mass on even-popcount basis states.
    Accepts a single distribution or a (B, 2^n) batch."""
    probs = np.asarray(probs, dtype=float)
    n = int(np.log2(probs.shape[-1]))
    out = probs[..., even_parity_mask(n)].sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def cross_entropy(p_plus, labels) -> float:
    p = np.clip(np.asarray(p_plus, dtype=float), PROB_CLAMP, 1 - PROB_CLAMP)
    t = (np.asarray(labels, dtype=float) + 1) / 2
    return float(np.mean(-(t * np.log(p) + (1 - t) * np.log(1 - p))))


def vqc_cost(params, states: np.ndarray, labels, ansatz: CircuitSpec) -> float:
    """Mean cross-entropy over the batch; ``states`` are the encoded inputs."""
    out = simulate(states, ansatz, params)
    return cross_entropy(parity_label_probability(np.abs(out) ** 2), labels)


@dataclass
class VqcConfig:
    encoder: str = "z"
    reps: int = 2
    ansatz_id: int = 1
    layers: int = 1
    max_evaluations: int = DEFAULT_BUDGET
    optimizer: str = "cobyla"
    seed: int = 0
    shots: int | None = None
    log_features: bool = False


@dataclass
class VqcModel:
    encoder: EncoderKind
    ansatz_id: int
    layers: int
    trained_params: np.ndarray
    scaler: FeatureScaler
    seed: int = 0
    cost_trace: list[float] = field(default_factory=list)
    n_evaluations: int = 0

    def ansatz(self) -> CircuitSpec:
        return build_ansatz(self.ansatz_id, self.encoder.n_qubits(len(self.scaler.low)), self.layers)

    def label_probabilities(self, X) -> np.ndarray:
        states = encode_scaled(self.scaler.transform(np.atleast_2d(X)), self.encoder)
        out = simulate(states, self.ansatz(), self.trained_params)
        return parity_label_probability(np.abs(out) ** 2)

    def to_dict(self) -> dict:
        return {
            "encoder": self.encoder.name,
            "reps": self.encoder.reps,
            "ansatz_id": self.ansatz_id,
            "layers": self.layers,
            "params": self.trained_params.tolist(),
            "feature_ranges": self.scaler.to_dict(),
            "seed": self.seed,
            "cost_trace": list(self.cost_trace),
            "n_evaluations": self.n_evaluations,
        }

    @classmethod
    def from_dict(cls, d) -> "VqcModel":
        return cls(
            EncoderKind(d["encoder"], d["reps"]),
            int(d["ansatz_id"]),
            int(d["layers"]),
            np.asarray(d["params"], dtype=float),
            FeatureScaler.from_dict(d["feature_ranges"]),
            int(d.get("seed", 0)),
            list(d.get("cost_trace", [])),
            int(d.get("n_evaluations", 0)),
        )


def _model_ansatz(encoder: EncoderKind, n_features: int, ansatz_id: int, layers: int, n_qubits=None) -> CircuitSpec:
    width = encoder.n_qubits(n_features)
    if n_qubits is not None and n_qubits != width:
        raise ConfigurationError(f"ansatz width {n_qubits} does not match {encoder.name} encoder width {width}")
    return build_ansatz(ansatz_id, width, layers)


def train_vqc(X, y, config: VqcConfig | None = None, n_qubits: int | None = None) -> VqcModel:
    """Fit a VQC. ``n_qubits``, if given, must equal the encoder's width."""
    config = config or VqcConfig()
    X, y = check_dataset(X, y)
    encoder = EncoderKind(config.encoder, config.reps)
    ansatz = _model_ansatz(encoder, X.shape[1], config.ansatz_id, config.layers, n_qubits)
    scaler = FeatureScaler.fit(X, config.log_features)
    states = encode_scaled(scaler.transform(X), encoder)
    rng = np.random.default_rng(config.seed)
    x0 = rng.uniform(0.0, 2 * np.pi, ansatz.n_params)
    if ansatz.n_params == 0:
        params, trace, n_eval = x0, [vqc_cost(x0, states, y, ansatz)], 1
    else:
        res = minimize(lambda p: vqc_cost(p, states, y, ansatz), x0, config.max_evaluations,
                       seed=config.seed, method=config.optimizer)
        params, trace, n_eval = res.best_params, res.trace, res.n_evaluations
    return VqcModel(encoder, config.ansatz_id, config.layers, params, scaler, config.seed, trace, n_eval)


def predict_from_probability(p_plus) -> np.ndarray:
    return np.where(np.asarray(p_plus) >= 0.5, 1, -1)


def predict_vqc(model: VqcModel, X, shots: int | None = None, rng=None) -> np.ndarray:
    """Labels by most probable parity (ties go to +1). With ``shots`` the
    parity probability is estimated from sampled measurement counts."""
    p = np.atleast_1d(model.label_probabilities(X))
    if shots is not None:
        rng = np.random.default_rng(rng)
        p = rng.binomial(shots, np.clip(p, 0.0, 1.0)) / shots
    return predict_from_probability(p)


@register
class VqcClassifier(Classifier):
    kind = "vqc"

    def __init__(self, encoder: str = "z", reps: int = 2, ansatz_id: int = 1, layers: int = 1,
                 max_evaluations: int = DEFAULT_BUDGET, optimizer: str = "cobyla", seed: int = 0,
                 shots: int | None = None, log_features: bool = False, name=None):
        super().__init__(name)
        self.config = VqcConfig(encoder, reps, ansatz_id, layers, max_evaluations, optimizer, seed, shots,
                                log_features)
        EncoderKind(encoder, reps)
        self.model: VqcModel | None = None

    def _fit(self, X, y):
        self.model = train_vqc(X, y, self.config)

    def positive_probability(self, X):
        return np.atleast_1d(self.model.label_probabilities(self._check_predict(X)))

    def _predict(self, X):
        # shot noise is seeded from the model seed so repeated calls agree
        return predict_vqc(self.model, X, self.config.shots, self.config.seed)

    def get_params(self):
        c = self.config
        return {"encoder": c.encoder, "reps": c.reps, "ansatz_id": c.ansatz_id, "layers": c.layers,
                "max_evaluations": c.max_evaluations, "optimizer": c.optimizer, "seed": c.seed,
                "shots": c.shots, "log_features": c.log_features}

    def get_state(self):
        return {"model": self.model.to_dict()}

    def set_state(self, state):
        self.model = VqcModel.from_dict(state["model"])


def realizable_dataset(n: int, n_features: int = 2, config: VqcConfig | None = None, seed: int = 0,
                       gap: float = 0.1, max_teachers: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Points uniform on ``[0, pi]^m`` labelled by a randomly drawn teacher
    circuit of the same architecture, keeping only points whose teacher
    parity probability is at least ``gap`` away from 1/2.

    The set is separable by construction for the model family, which a plain
    linear split is not: with a product feature map every feature sweeps a
    full period of its rotation, so no parameter choice can make a qubit
    ignore its input.
    """
    config = config or VqcConfig()
    encoder = EncoderKind(config.encoder, config.reps)
    ansatz = _model_ansatz(encoder, n_features, config.ansatz_id, config.layers)
    rng = np.random.default_rng(seed)
    for _ in range(max_teachers):
        theta = rng.uniform(0.0, 2 * np.pi, ansatz.n_params)
        X = rng.uniform(0.0, np.pi, (50 * n, n_features))
        p = parity_label_probability(np.abs(simulate(encode_scaled(X, encoder), ansatz, theta)) ** 2)
        keep = np.flatnonzero(np.abs(p - 0.5) >= gap)
        if len(keep) >= n:
            keep = keep[:n]
            return X[keep], predict_from_probability(p[keep])
    raise ConfigurationError("no teacher circuit produced enough confidently labelled points")
