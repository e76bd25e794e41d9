"""Support vector machines over quantum and RBF kernels.

Two ways to obtain the Lagrange multipliers of the hard-margin dual

    min_lam  1/2 lam^T (K * y y^T) lam - 1^T lam,   lam >= 0

are provided:

* kernel path: projected coordinate descent on the box ``[0, C]``;
* annealer path: each multiplier is written as ``p . bits`` with precision
  vector ``p = (1, 2)``, the dual becomes a QUBO over ``2N`` binary
  variables, and simulated annealing (or exhaustive search for small N)
  minimises it.

Both produce an :class:`SvmModel` and predict with
``sign(sum_i lam_i y_i K(x, x_i) + b)``.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .base import Classifier, check_dataset, check_labels, register, sign_labels
from .encoders import EncoderKind, FeatureScaler, encode_states, feature_map_circuit, fill_zero_rows
from .errors import ConfigurationError, InputError, ParameterError
from .qsim import simulate

DEFAULT_SIGMA = 150.0
DEFAULT_C = 1000.0
PRECISION = (1.0, 2.0)


# kernels

@dataclass
class KernelMatrix:
    entries: np.ndarray
    kind: str

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _check_sigma(sigma):
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")


def rbf_cross(A, B, sigma: float) -> np.ndarray:
    _check_sigma(sigma)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    sq = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-np.clip(sq, 0.0, None) / (2.0 * sigma**2))


def rbf_kernel(xs, sigma: float = DEFAULT_SIGMA) -> KernelMatrix:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    # pairwise differences keep the diagonal at exactly 1
    diff = xs[:, None, :] - xs[None, :, :]
    _check_sigma(sigma)
    K = np.exp(-np.sum(diff**2, axis=-1) / (2.0 * sigma**2))
    return KernelMatrix(K, f"rbf(sigma={sigma:g})")


def _inverse_overlaps(states: np.ndarray, X: np.ndarray, j: int, encoder: EncoderKind, rows: slice) -> np.ndarray:
    """Probability of |0...0> after undoing the map of sample ``j`` on ``states[rows]``."""
    block = states[rows]
    if encoder.name == "amplitude":
        # Householder reflection U_j with U_j|0> = psi_j; it is its own inverse
        psi = states[j]
        v = -psi.copy()
        v[0] += 1.0
        vv = np.vdot(v, v).real
        if vv < 1e-30:
            out = block
        else:
            out = block - np.outer(block @ v.conj(), v) * (2.0 / vv)
    else:
        inverse = feature_map_circuit(X[j], encoder).inverse()
        out = np.atleast_2d(simulate(block, inverse))
    return np.abs(out[:, 0]) ** 2


def quantum_kernel(xs, encoder: EncoderKind, method: str = "circuit") -> KernelMatrix:
    """Fidelity kernel ``K_ij = |<psi(x_j)|psi(x_i)>|^2``.

    ``method="circuit"`` prepares ``phi(x_i)|0>`` and applies the inverse map of
    ``x_j`` before reading the all-zeros probability; ``"overlap"`` takes inner
    products of the encoded states directly.
    """
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    _check_encoder_width(X, encoder)
    states = encode_states(X, encoder)
    n = len(X)
    if method == "overlap":
        K = np.abs(states.conj() @ states.T) ** 2
        K = 0.5 * (K + K.T)
    elif method == "circuit":
        K = np.zeros((n, n))
        for j in range(n):
            col = _inverse_overlaps(states, X, j, encoder, slice(0, j + 1))
            K[: j + 1, j] = col
            K[j, : j + 1] = col
    else:
        raise ConfigurationError(f"unknown kernel method {method!r}")
    return KernelMatrix(np.clip(K, 0.0, 1.0), f"quantum({encoder.name},reps={encoder.reps})")


def quantum_cross_kernel(A, B, encoder: EncoderKind, method: str = "overlap") -> np.ndarray:
    """Kernel block between rows of ``A`` (new points) and ``B`` (training points)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    _check_encoder_width(A, encoder)
    _check_encoder_width(B, encoder)
    sa = encode_states(A, encoder)
    if method == "overlap":
        sb = encode_states(B, encoder)
        return np.clip(np.abs(sa @ sb.conj().T) ** 2, 0.0, 1.0)
    if method == "circuit":
        out = np.zeros((len(A), len(B)))
        for j in range(len(B)):
            stacked = np.vstack([sa, encode_states(B[j : j + 1], encoder)])
            both = np.vstack([A, B[j : j + 1]])
            out[:, j] = _inverse_overlaps(stacked, both, len(A), encoder, slice(0, len(A)))
        return np.clip(out, 0.0, 1.0)
    raise ConfigurationError(f"unknown kernel method {method!r}")


def _check_encoder_width(X, encoder):
    if encoder.name == "zz" and X.shape[1] < 2:
        raise ConfigurationError("ZZ feature map needs at least two features")
    n_qubits = encoder.n_qubits(X.shape[1])
    if n_qubits > 20:
        raise ConfigurationError(f"{X.shape[1]} features need {n_qubits} qubits under {encoder.name}")


class KernelCache:
    """On-disk cache of quantum Gram matrices keyed by data hash and encoder."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def key(self, xs, encoder: EncoderKind, method: str) -> str:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(xs, dtype=float)))
        h = hashlib.sha256(X.tobytes())
        h.update(repr(X.shape).encode())
        return f"{h.hexdigest()[:24]}_{encoder.name}_r{encoder.reps}_{method}"

    def get(self, xs, encoder: EncoderKind, method: str = "circuit") -> KernelMatrix:
        path = self.directory / f"{self.key(xs, encoder, method)}.npy"
        kind = f"quantum({encoder.name},reps={encoder.reps})"
        if path.exists():
            return KernelMatrix(np.load(path), kind)
        km = quantum_kernel(xs, encoder, method)
        self.directory.mkdir(parents=True, exist_ok=True)
        np.save(path, km.entries)
        return km


# kernel functions carried by fitted models

@dataclass
class RbfKernel:
    sigma: float = DEFAULT_SIGMA

    def gram(self, X) -> np.ndarray:
        return rbf_kernel(X, self.sigma).entries

    def cross(self, A, B) -> np.ndarray:
        return rbf_cross(A, B, self.sigma)

    def to_dict(self):
        return {"type": "rbf", "sigma": self.sigma}


@dataclass
class QuantumKernel:
    encoder: EncoderKind = field(default_factory=EncoderKind)
    method: str = "circuit"
    cross_method: str = "overlap"

    def gram(self, X) -> np.ndarray:
        return quantum_kernel(X, self.encoder, self.method).entries

    def cross(self, A, B) -> np.ndarray:
        return quantum_cross_kernel(A, B, self.encoder, self.cross_method)

    def to_dict(self):
        return {
            "type": "quantum",
            "encoder": self.encoder.name,
            "reps": self.encoder.reps,
            "method": self.method,
            "cross_method": self.cross_method,
        }


def kernel_from_dict(d):
    if d["type"] == "rbf":
        return RbfKernel(d["sigma"])
    return QuantumKernel(EncoderKind(d["encoder"], d["reps"]), d["method"], d["cross_method"])


# dual solve

@dataclass
class SvmModel:
    lambdas: np.ndarray
    train_x: np.ndarray
    train_y: np.ndarray
    bias: float
    kernel: object

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        active = self.lambdas > 0
        if not np.any(active):
            return np.full(len(X), self.bias)
        Kx = self.kernel.cross(X, self.train_x[active])
        return Kx @ (self.lambdas[active] * self.train_y[active]) + self.bias

    def to_dict(self):
        return {
            "lambdas": self.lambdas.tolist(),
            "train_x": self.train_x.tolist(),
            "train_y": self.train_y.tolist(),
            "bias": self.bias,
            "kernel": self.kernel.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["lambdas"], dtype=float),
            np.asarray(d["train_x"], dtype=float),
            np.asarray(d["train_y"], dtype=int),
            float(d["bias"]),
            kernel_from_dict(d["kernel"]),
        )


def dual_objective(lambdas, K, y) -> float:
    lam = np.asarray(lambdas, dtype=float)
    yl = lam * np.asarray(y, dtype=float)
    return float(0.5 * yl @ np.asarray(K) @ yl - lam.sum())


@numba.njit(cache=True)
def _coordinate_descent(H, C, tol, max_sweeps):
    n = H.shape[0]
    lam = np.zeros(n)
    grad = -np.ones(n)
    for sweep in range(max_sweeps):
        worst = 0.0
        for i in range(n):
            g = grad[i]
            if lam[i] <= 0.0:
                pg = min(g, 0.0)
            elif lam[i] >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > worst:
                worst = abs(pg)
            if pg == 0.0:
                continue
            hii = H[i, i]
            if hii > 0.0:
                new = min(max(lam[i] - g / hii, 0.0), C)
            else:
                new = C if g < 0.0 else 0.0
            delta = new - lam[i]
            if delta != 0.0:
                lam[i] = new
                for k in range(n):
                    grad[k] += delta * H[k, i]
        if worst < tol:
            return lam, sweep + 1, True
    return lam, max_sweeps, False


def _check_kernel(K):
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError(f"kernel must be square, got shape {K.shape}")
    if not np.allclose(K, K.T, atol=1e-9, rtol=0):
        raise InputError("kernel matrix is not symmetric")
    K = 0.5 * (K + K.T)
    evals, evecs = np.linalg.eigh(K)
    if evals.min() < -1e-8:
        K = (evecs * np.clip(evals, 0.0, None)) @ evecs.T
    return K


def compute_bias(lambdas, K, y, over: str = "support") -> float:
    """Mean of ``y_i - sum_j lam_j y_j K_ji``; over support vectors when any
    multiplier is positive (``over="support"``) or over all points (``"all"``)."""
    lam = np.asarray(lambdas, dtype=float)
    y = np.asarray(y, dtype=float)
    margins = y - np.asarray(K) @ (lam * y)
    if over == "support" and np.any(lam > 0):
        return float(margins[lam > 0].mean())
    if over not in ("support", "all"):
        raise ConfigurationError(f"unknown bias rule {over!r}")
    return float(margins.mean())


@dataclass
class DualSolution:
    lambdas: np.ndarray
    bias: float
    sweeps: int
    converged: bool


def solve_dual_svm(K, y, C: float = DEFAULT_C, tol: float = 1e-6, max_sweeps: int = 100_000, bias_over="support"):
    y = check_labels(y)
    K = _check_kernel(K)
    if len(y) != K.shape[0]:
        raise InputError("labels and kernel sizes differ")
    if not C > 0:
        raise ParameterError("box bound C must be positive")
    if np.all(y == y[0]):
        return DualSolution(np.zeros(len(y)), float(y[0]), 0, True)
    H = K * np.outer(y, y)
    lam, sweeps, ok = _coordinate_descent(np.ascontiguousarray(H), float(C), float(tol), int(max_sweeps))
    return DualSolution(lam, compute_bias(lam, K, y, bias_over), int(sweeps), bool(ok))


def svm_predict(model: SvmModel, X) -> np.ndarray:
    return sign_labels(model.decision(X))


# QUBO / annealer path

@dataclass
class QuboProblem:
    Q: np.ndarray
    precision: np.ndarray
    n_points: int

    @property
    def expansion(self) -> np.ndarray:
        """``P = I_N kron p``: maps binaries to multipliers."""
        return np.kron(np.eye(self.n_points), self.precision[None, :])

    def objective(self, bits) -> float:
        b = np.asarray(bits, dtype=float)
        return float(b @ self.Q @ b)

    def lambdas(self, bits) -> np.ndarray:
        b = np.asarray(bits, dtype=float).reshape(self.n_points, len(self.precision))
        return b @ self.precision


def build_qubo(K, y, precision=PRECISION) -> QuboProblem:
    K = np.asarray(K, dtype=float)
    y = check_labels(y)
    if not np.allclose(K, K.T, atol=1e-9, rtol=0):
        raise InputError("kernel matrix is not symmetric")
    p = np.asarray(precision, dtype=float)
    n = len(y)
    P = np.kron(np.eye(n), p[None, :])
    H = K * np.outer(y, y)
    Q = 0.5 * P.T @ H @ P
    Q = 0.5 * (Q + Q.T)
    # binaries satisfy b_k^2 = b_k, so the linear term sits on the diagonal
    Q[np.diag_indices_from(Q)] -= P.T @ np.ones(n)
    return QuboProblem(Q, p, n)


@dataclass
class AnnealSchedule:
    t_start: float = 10.0
    alpha: float = 0.995
    sweeps_per_temperature: int = 20
    restarts: int = 5
    t_stop: float = 1e-3


@numba.njit(cache=True)
def _anneal_run(Q, temps, sweeps, seed):
    np.random.seed(seed)
    n = Q.shape[0]
    x = np.zeros(n)
    for k in range(n):
        x[k] = 1.0 if np.random.random() < 0.5 else 0.0
    field = Q @ x
    energy = x @ field
    best = x.copy()
    best_e = energy
    for t in temps:
        for _ in range(sweeps):
            for k in range(n):
                d = 1.0 - 2.0 * x[k]
                delta = 2.0 * d * (field[k] - Q[k, k] * x[k]) + Q[k, k] * d
                if delta <= 0.0 or np.random.random() < np.exp(-delta / t):
                    x[k] += d
                    for m in range(n):
                        field[m] += Q[m, k] * d
                    energy += delta
                    if energy < best_e - 1e-12:
                        best_e = energy
                        best[:] = x
    # greedy descent from the best state seen
    x = best.copy()
    field = Q @ x
    improved = True
    while improved:
        improved = False
        for k in range(n):
            d = 1.0 - 2.0 * x[k]
            delta = 2.0 * d * (field[k] - Q[k, k] * x[k]) + Q[k, k] * d
            if delta < -1e-12:
                x[k] += d
                for m in range(n):
                    field[m] += Q[m, k] * d
                improved = True
    return x


def anneal(qubo: QuboProblem, schedule: AnnealSchedule | None = None, seed=0) -> np.ndarray:
    """Simulated annealing with a geometric schedule; best of several restarts."""
    schedule = schedule or AnnealSchedule()
    n_temps = max(1, int(np.ceil(np.log(schedule.t_stop / schedule.t_start) / np.log(schedule.alpha))))
    temps = schedule.t_start * schedule.alpha ** np.arange(n_temps)
    Q = np.ascontiguousarray(qubo.Q, dtype=float)
    seeds = np.random.SeedSequence(seed).generate_state(schedule.restarts)
    best = np.zeros(Q.shape[0])
    best_e = 0.0
    for s in seeds:
        x = _anneal_run(Q, temps, schedule.sweeps_per_temperature, int(s) & 0x7FFFFFFF)
        e = float(x @ Q @ x)
        if e < best_e - 1e-12:
            best, best_e = x, e
    return best.astype(int)


def solve_qubo_exhaustive(qubo: QuboProblem) -> np.ndarray:
    """Brute-force minimiser (first in lexicographic order among ties)."""
    n = qubo.Q.shape[0]
    if n > 24:
        raise ParameterError(f"exhaustive search over 2^{n} states is too large")
    states = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    energies = np.einsum("si,ij,sj->s", states, qubo.Q, states)
    return states[int(np.argmin(energies))].astype(int)


# classifiers

class _SvmClassifier(Classifier):
    def __init__(self, C: float = DEFAULT_C, bias_over: str = "support", name=None):
        super().__init__(name)
        self.C = C
        self.bias_over = bias_over
        self.model: SvmModel | None = None

    def _kernel(self):
        raise NotImplementedError

    def _transform(self, X):
        return X

    def _fit(self, X, y):
        Xt = self._transform(X)
        kernel = self._kernel()
        sol = solve_dual_svm(kernel.gram(Xt), y, self.C, bias_over=self.bias_over)
        self.model = SvmModel(sol.lambdas, Xt, y, sol.bias, kernel)

    def _predict(self, X):
        return svm_predict(self.model, self._transform(X))

    def decision_function(self, X):
        return self.model.decision(self._transform(self._check_predict(X)))

    def get_state(self):
        return {"model": self.model.to_dict()}

    def set_state(self, state):
        self.model = SvmModel.from_dict(state["model"])


@register
class QuantumKernelSvm(_SvmClassifier):
    """Fidelity-kernel SVM; features are min-max scaled into ``[0, pi]`` on
    the training split before encoding (after ``log1p`` when ``log_features``)."""

    kind = "qsvm-kernel"

    def __init__(self, encoder: str = "zz", reps: int = 2, C: float = DEFAULT_C, method: str = "circuit",
                 cross_method: str = "overlap", bias_over: str = "support", log_features: bool = False,
                 name=None):
        super().__init__(C, bias_over, name)
        self.encoder = EncoderKind(encoder, reps)
        self.log_features = log_features
        self.method = method
        self.cross_method = cross_method
        self.scaler: FeatureScaler | None = None

    def _kernel(self):
        return QuantumKernel(self.encoder, self.method, self.cross_method)

    def _fit(self, X, y):
        self.scaler = FeatureScaler.fit(X, self.log_features)
        super()._fit(X, y)

    def _transform(self, X):
        return fill_zero_rows(self.scaler.transform(X), self.encoder)

    def get_params(self):
        return {"encoder": self.encoder.name, "reps": self.encoder.reps, "C": self.C, "method": self.method,
                "cross_method": self.cross_method, "bias_over": self.bias_over, "log_features": self.log_features}

    def get_state(self):
        return {**super().get_state(), "scaler": self.scaler.to_dict()}

    def set_state(self, state):
        super().set_state(state)
        self.scaler = FeatureScaler.from_dict(state["scaler"])


@register
class QuboSvm(Classifier):
    """Annealer-path SVM: RBF kernel on raw features, 2-bit multipliers."""

    kind = "qsvm-anneal"

    def __init__(self, sigma: float = DEFAULT_SIGMA, precision=PRECISION, solver: str = "anneal",
                 schedule: dict | None = None, seed: int = 0, bias_over: str = "support", name=None):
        super().__init__(name)
        _check_sigma(sigma)
        if solver not in ("anneal", "exhaustive"):
            raise ConfigurationError(f"unknown QUBO solver {solver!r}")
        self.sigma = sigma
        self.precision = tuple(float(v) for v in precision)
        self.solver = solver
        self.schedule = dict(schedule or {})
        self.seed = seed
        self.bias_over = bias_over
        self.model: SvmModel | None = None
        self.bits: np.ndarray | None = None

    def _fit(self, X, y):
        kernel = RbfKernel(self.sigma)
        K = kernel.gram(X)
        qubo = build_qubo(K, y, self.precision)
        if self.solver == "exhaustive":
            bits = solve_qubo_exhaustive(qubo)
        else:
            bits = anneal(qubo, AnnealSchedule(**self.schedule), self.seed)
        lam = qubo.lambdas(bits)
        self.bits = bits
        self.model = SvmModel(lam, X.copy(), y, compute_bias(lam, K, y, self.bias_over), kernel)

    def _predict(self, X):
        return svm_predict(self.model, X)

    def get_params(self):
        return {"sigma": self.sigma, "precision": list(self.precision), "solver": self.solver,
                "schedule": self.schedule, "seed": self.seed, "bias_over": self.bias_over}

    def get_state(self):
        return {"model": self.model.to_dict(), "bits": self.bits.tolist()}

    def set_state(self, state):
        self.model = SvmModel.from_dict(state["model"])
        self.bits = np.asarray(state["bits"], dtype=int)


def fit_svm(X, y, kernel, C: float = DEFAULT_C, bias_over: str = "support") -> SvmModel:
    X, y = check_dataset(X, y)
    sol = solve_dual_svm(kernel.gram(X), y, C, bias_over=bias_over)
    return SvmModel(sol.lambdas, X, y, sol.bias, kernel)
