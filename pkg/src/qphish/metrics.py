"""Sampled ansatz quality metrics: expressibility (KL divergence of the
fidelity distribution from the Haar one) and entangling capacity (Meyer-Wallach
and mean single-qubit von Neumann entropy), plus Pearson correlation."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateError, InputError
from .qsim import CircuitSpec, reduced_density_matrices, simulate, zero_state

DEFAULT_BINS = 75
DEFAULT_PAIRS = 5000
DEFAULT_PARAM_SAMPLES = 1000
KL_EPS = 1e-12
CHUNK = 2048


@dataclass(frozen=True)
class ExpressibilityEstimate:
    kl_divergence: float
    n_fidelity_samples: int
    n_bins: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EntanglingCapacityEstimate:
    meyer_wallach: float
    von_neumann_bits: float
    n_param_samples: int

    def to_dict(self):
        return asdict(self)


def _states(circuit: CircuitSpec, thetas: np.ndarray) -> np.ndarray:
    zero = zero_state(circuit.n_qubits).amplitudes
    if circuit.n_params == 0:
        return np.repeat(simulate(zero, circuit)[None, :], len(thetas), axis=0)
    chunks = [simulate(zero, circuit, thetas[i : i + CHUNK]) for i in range(0, len(thetas), CHUNK)]
    return np.concatenate(chunks).reshape(len(thetas), -1)


def haar_bin_masses(n_qubits: int, n_bins: int) -> np.ndarray:
    """Haar fidelity mass per bin: ``(1-a)**(N-1) - (1-b)**(N-1)`` with ``N = 2**n``."""
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    cdf_tail = (1.0 - edges) ** (2**n_qubits - 1)
    return cdf_tail[:-1] - cdf_tail[1:]


def fidelity_samples(circuit: CircuitSpec, n_pairs: int = DEFAULT_PAIRS, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    first = rng.uniform(0.0, 2 * np.pi, size=(n_pairs, circuit.n_params))
    second = rng.uniform(0.0, 2 * np.pi, size=(n_pairs, circuit.n_params))
    a = _states(circuit, first)
    b = _states(circuit, second)
    overlap = np.einsum("bi,bi->b", a.conj(), b)
    return np.clip(np.abs(overlap) ** 2, 0.0, 1.0)


def kl_from_fidelities(fidelities: np.ndarray, n_qubits: int, n_bins: int = DEFAULT_BINS) -> float:
    counts, _ = np.histogram(fidelities, bins=n_bins, range=(0.0, 1.0))
    p = counts / counts.sum()
    q = haar_bin_masses(n_qubits, n_bins)
    p = np.where(p > 0, p, KL_EPS)
    q = np.where(q > 0, q, KL_EPS)
    return float(max(np.sum(p * np.log(p / q)), 0.0))


def expressibility(
    ansatz: CircuitSpec, n_pairs: int = DEFAULT_PAIRS, n_bins: int = DEFAULT_BINS, seed=None
) -> ExpressibilityEstimate:
    if ansatz.n_params < 1:
        raise DegenerateError("ansatz has no parameters; every fidelity is 1")
    fids = fidelity_samples(ansatz, n_pairs, seed)
    return ExpressibilityEstimate(kl_from_fidelities(fids, ansatz.n_qubits, n_bins), n_pairs, n_bins)


def single_qubit_entropies(rhos: np.ndarray) -> np.ndarray:
    """Von Neumann entropy in bits of each 2x2 density matrix."""
    evals = np.clip(np.linalg.eigvalsh(rhos), 0.0, 1.0)
    safe = np.where(evals > 0, evals, 1.0)
    return -np.sum(np.where(evals > 0, evals * np.log2(safe), 0.0), axis=-1)


def entanglement_of_states(amplitudes: np.ndarray, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-state Meyer-Wallach Q and mean single-qubit entropy (bits)."""
    rhos = reduced_density_matrices(amplitudes, n_qubits)
    purity = np.sum(np.abs(rhos) ** 2, axis=(-2, -1))
    mw = 2.0 * (1.0 - purity.mean(axis=1))
    vn = single_qubit_entropies(rhos).mean(axis=1)
    return np.clip(mw, 0.0, 1.0), vn


def entangling_capacity(
    ansatz: CircuitSpec, n_param_samples: int = DEFAULT_PARAM_SAMPLES, seed=None
) -> EntanglingCapacityEstimate:
    if ansatz.n_qubits < 2:
        raise ConfigurationError("entangling capacity needs at least two qubits")
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, 2 * np.pi, size=(n_param_samples, ansatz.n_params))
    states = _states(ansatz, thetas)
    mw, vn = entanglement_of_states(states, ansatz.n_qubits)
    return EntanglingCapacityEstimate(float(mw.mean()), float(vn.mean()), n_param_samples)


def correlate_metrics(metric_values, scores) -> float:
    """Pearson product-moment correlation coefficient."""
    x = np.asarray(metric_values, dtype=float)
    y = np.asarray(scores, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("correlation needs two 1-D vectors of equal length")
    if x.size < 2:
        raise InputError("correlation needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise DegenerateError("correlation is undefined for a constant vector")
    return float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))
