"""Feature maps that load a classical feature vector into a quantum state.

Three encoders are supported:

* amplitude encoding: the zero-padded, L2-normalised vector *is* the state,
  on ``ceil(log2 m)`` qubits;
* Z feature map: ``H`` on every qubit followed by ``exp(j x_k Z_k)``;
* ZZ feature map: as Z, plus ``exp(j (pi - x_p)(pi - x_q) Z_p Z_q)`` for every
  pair ``p < q``.

``exp(j a Z) = RZ(-2a)`` and ``exp(j a Z Z) = RZZ(-2a)`` in the simulator's
conventions, so the maps are built from those gates. Every function accepts a
single vector of shape ``(m,)`` or a batch ``(B, m)``; a batch produces one
circuit whose angles are arrays of shape ``(B,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigurationError, NormalizationError
from .qsim import CircuitSpec, Gate, StateVector, simulate, zero_state

ENCODERS = ("amplitude", "z", "zz")
DEFAULT_REPS = 2


@dataclass(frozen=True)
class EncoderKind:
    name: str = "z"
    reps: int = DEFAULT_REPS

    def __post_init__(self):
        name = self.name.lower()
        if name not in ENCODERS:
            raise ConfigurationError(f"unknown encoder {self.name!r}; expected one of {ENCODERS}")
        object.__setattr__(self, "name", name)
        if self.reps < 1:
            raise ConfigurationError("encoder repetitions must be positive")

    def n_qubits(self, n_features: int) -> int:
        return amplitude_qubits(n_features) if self.name == "amplitude" else n_features


def amplitude_qubits(n_features: int) -> int:
    return max(1, math.ceil(math.log2(n_features)))


def amplitude_encode(x) -> StateVector:
    amps = amplitude_amplitudes(x)
    return StateVector(int(np.log2(amps.shape[-1])), amps)


def amplitude_amplitudes(x) -> np.ndarray:
    """Padded, normalised amplitude vectors for one sample or a batch."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    dim = 2 ** amplitude_qubits(m)
    padded = np.zeros(x.shape[:-1] + (dim,))
    padded[..., :m] = x
    norms = np.linalg.norm(padded, axis=-1, keepdims=True)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise NormalizationError("amplitude encoding needs a finite vector with a nonzero entry")
    return (padded / norms).astype(np.complex128)


def _angles(x):
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2):
        raise ConfigurationError(f"features must be 1-D or 2-D, got shape {x.shape}")
    return x.shape[-1], [x[..., k] if x.ndim == 2 else float(x[k]) for k in range(x.shape[-1])]


def z_feature_map(x, reps: int = DEFAULT_REPS) -> CircuitSpec:
    m, cols = _angles(x)
    gates = []
    for _ in range(reps):
        gates += [Gate("H", (k,)) for k in range(m)]
        gates += [Gate("RZ", (k,), angle=-2.0 * cols[k]) for k in range(m)]
    return CircuitSpec(m, gates)


def zz_pair_angle(xp, xq):
    return (np.pi - xp) * (np.pi - xq)


def zz_feature_map(x, reps: int = DEFAULT_REPS) -> CircuitSpec:
    m, cols = _angles(x)
    if m < 2:
        raise ConfigurationError("ZZ feature map needs at least two features")
    gates = []
    for _ in range(reps):
        gates += [Gate("H", (k,)) for k in range(m)]
        gates += [Gate("RZ", (k,), angle=-2.0 * cols[k]) for k in range(m)]
        gates += [
            Gate("RZZ", (p, q), angle=-2.0 * zz_pair_angle(cols[p], cols[q])) for p, q in combinations(range(m), 2)
        ]
    return CircuitSpec(m, gates)


def feature_map_circuit(x, encoder: EncoderKind) -> CircuitSpec:
    if encoder.name == "z":
        return z_feature_map(x, encoder.reps)
    if encoder.name == "zz":
        return zz_feature_map(x, encoder.reps)
    raise ConfigurationError("amplitude encoding is a state preparation, not a gate circuit")


def encode_states(X, encoder: EncoderKind) -> np.ndarray:
    """Encoded statevectors for a batch of samples, shape ``(B, 2**n)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if encoder.name == "amplitude":
        return amplitude_amplitudes(X)
    circuit = feature_map_circuit(X, encoder)
    out = simulate(zero_state(circuit.n_qubits).amplitudes, circuit)
    return out.reshape(X.shape[0], -1)


def fill_zero_rows(X, encoder: EncoderKind) -> np.ndarray:
    """Under amplitude encoding an all-zero scaled row (every feature at its
    training minimum) has no direction; it is sent to ``|0...0>``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if encoder.name != "amplitude":
        return X
    zero_rows = ~np.any(X != 0, axis=1)
    if np.any(zero_rows):
        X = X.copy()
        X[zero_rows, 0] = 1.0
    return X


def encode_scaled(X, encoder: EncoderKind) -> np.ndarray:
    """Encoded states for rows already scaled into ``[0, pi]``."""
    return encode_states(fill_zero_rows(X, encoder), encoder)


def encode(x, encoder: EncoderKind) -> StateVector:
    amps = encode_states(np.asarray(x, dtype=float)[None, :], encoder)[0]
    return StateVector(int(np.log2(amps.size)), amps)


@dataclass
class FeatureScaler:
    """Per-feature min-max map into ``[0, pi]`` fitted on training data only.

    With ``log=True`` features pass through ``log1p`` first, which tames the
    heavy tails of transaction statistics (inputs must be >= 0).
    """

    low: np.ndarray
    high: np.ndarray
    log: bool = False

    @classmethod
    def fit(cls, X, log: bool = False) -> "FeatureScaler":
        X = _pre(np.asarray(X, dtype=float), log)
        return cls(X.min(axis=0), X.max(axis=0), log)

    def transform(self, X) -> np.ndarray:
        return scale_features(_pre(np.asarray(X, dtype=float), self.log), self.low, self.high)

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist(), "log": self.log}

    @classmethod
    def from_dict(cls, d) -> "FeatureScaler":
        return cls(np.asarray(d["low"], dtype=float), np.asarray(d["high"], dtype=float), bool(d.get("log", False)))


def _pre(X, log):
    return np.log1p(np.clip(X, 0.0, None)) if log else X


def scale_features(raw, low, high) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    span = high - low
    const = span == 0
    safe = np.where(const, 1.0, span)
    scaled = np.clip((raw - low) / safe, 0.0, 1.0) * np.pi
    return np.where(const, np.pi / 2, scaled)
