"""Exact statevector simulator.

Qubit 0 is the least-significant bit of the basis index, so the basis state
``|q_{n-1} ... q_1 q_0>`` has index ``sum(q_k << k)``.

All heavy lifting happens in :func:`simulate`, which works on a batch of
states of shape ``(B, 2**n)``. Gate angles may be scalars or arrays of shape
``(B,)``, which lets one circuit description carry per-sample data angles
(encoders) or per-sample parameter vectors (metric sampling).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BindingError, CapacityError, GateError

MAX_QUBITS = 20
DEFAULT_SHOTS = 1024

ONE_QUBIT = frozenset({"H", "X", "Z", "RX", "RY", "RZ", "P"})
TWO_QUBIT = frozenset({"CZ", "CNOT", "CRX", "CRZ", "RZZ"})
PARAMETRIC = frozenset({"RX", "RY", "RZ", "P", "CRX", "CRZ", "RZZ"})
GATE_KINDS = ONE_QUBIT | TWO_QUBIT


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate. Parametric gates take their angle either from a fixed
    ``angle`` or from slot ``param`` of the bound parameter vector, times
    ``coeff``. For controlled gates ``qubits`` is ``(control, target)``."""

    kind: str
    qubits: tuple[int, ...]
    param: int | None = None
    angle: float | np.ndarray | None = None
    coeff: float = 1.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise GateError(f"unsupported gate kind {self.kind!r}")
        arity = 1 if self.kind in ONE_QUBIT else 2
        if len(self.qubits) != arity:
            raise GateError(f"{self.kind} acts on {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != arity:
            raise GateError(f"{self.kind} needs distinct qubits, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise GateError(f"negative qubit index in {self.qubits}")
        if self.kind in PARAMETRIC:
            if (self.param is None) == (self.angle is None):
                raise GateError(f"{self.kind} needs exactly one of param slot or fixed angle")
        elif self.param is not None or self.angle is not None:
            raise GateError(f"{self.kind} takes no angle")

    @property
    def entangling(self) -> bool:
        return self.kind in TWO_QUBIT

    def inverse(self) -> "Gate":
        if self.kind not in PARAMETRIC:
            return self
        if self.angle is not None:
            return Gate(self.kind, self.qubits, angle=-self.angle)
        return Gate(self.kind, self.qubits, param=self.param, coeff=-self.coeff)

    def key(self) -> tuple:
        """Hashable, comparable description (angles as raw bytes)."""
        angle = self.angle
        if angle is not None:
            angle = np.asarray(angle, dtype=float).tobytes()
        return (self.kind, self.qubits, self.param, angle, self.coeff)


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    n_params: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits:
                raise GateError(f"{g.kind} on {g.qubits} exceeds {self.n_qubits} qubits")
            if g.param is not None and not 0 <= g.param < self.n_params:
                raise GateError(f"parameter slot {g.param} outside [0, {self.n_params})")

    def __add__(self, other: "CircuitSpec") -> "CircuitSpec":
        """Sequential composition; the right operand's parameter slots are
        shifted past the left operand's."""
        if other.n_qubits != self.n_qubits:
            raise GateError("cannot compose circuits of different widths")
        shifted = [
            Gate(g.kind, g.qubits, param=g.param + self.n_params, coeff=g.coeff) if g.param is not None else g
            for g in other.gates
        ]
        return CircuitSpec(self.n_qubits, self.gates + tuple(shifted), self.n_params + other.n_params)

    def inverse(self) -> "CircuitSpec":
        return CircuitSpec(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)), self.n_params)

    def key(self) -> tuple:
        return (self.n_qubits, self.n_params, tuple(g.key() for g in self.gates))

    def bind(self, params=None) -> list[tuple[str, tuple[int, ...], object]]:
        """Concrete (kind, qubits, angle) list for a parameter vector."""
        params = _check_params(self, params)
        out = []
        for g in self.gates:
            if g.param is not None:
                angle = g.coeff * params[..., g.param]
            else:
                angle = g.angle
            out.append((g.kind, g.qubits, angle))
        return out


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got shape {self.amplitudes.shape}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def zero_state(n_qubits: int) -> StateVector:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def _check_params(circuit: CircuitSpec, params):
    if params is None:
        params = np.zeros(0)
    params = np.asarray(params, dtype=float)
    if params.shape[-1:] != (circuit.n_params,) and not (circuit.n_params == 0 and params.size == 0):
        raise BindingError(f"circuit has {circuit.n_params} parameters, got shape {params.shape}")
    return params


# gate matrices; `theta` may be a scalar or a (B,) array, giving (2,2) or (B,2,2)

def _rx(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return _mat2(c, -1j * s, -1j * s, c)


def _ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return _mat2(c, -s, s, c)


def _rz(t):
    return _mat2(np.exp(-0.5j * t), 0.0 * t, 0.0 * t, np.exp(0.5j * t))


def _phase(t):
    return _mat2(1.0 + 0.0 * t, 0.0 * t, 0.0 * t, np.exp(1j * t))


def _mat2(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(*(np.asarray(v, dtype=np.complex128) for v in (a, b, c, d)))
    return np.stack([np.stack([a, b], axis=-1), np.stack([c, d], axis=-1)], axis=-2)


_FIXED_1Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_ROT_1Q = {"RX": _rx, "RY": _ry, "RZ": _rz, "P": _phase}


def _controlled(u):
    """4x4 (or Bx4x4) matrix for control on the first (high) index bit."""
    shape = u.shape[:-2] + (4, 4)
    m = np.zeros(shape, dtype=np.complex128)
    m[..., 0, 0] = 1.0
    m[..., 1, 1] = 1.0
    m[..., 2:, 2:] = u
    return m


def gate_matrix(kind: str, angle=None) -> np.ndarray:
    """Unitary of a gate. Two-qubit matrices use basis index ``2*a + b`` where
    ``a`` is the gate's first qubit (control) and ``b`` the second."""
    if kind in _FIXED_1Q:
        return _FIXED_1Q[kind]
    if kind in _ROT_1Q:
        return _ROT_1Q[kind](np.asarray(angle, dtype=float))
    if kind == "CNOT":
        return _controlled(_FIXED_1Q["X"])
    if kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(np.complex128)
    if kind == "CRX":
        return _controlled(_rx(np.asarray(angle, dtype=float)))
    if kind == "CRZ":
        return _controlled(_rz(np.asarray(angle, dtype=float)))
    if kind == "RZZ":
        t = np.asarray(angle, dtype=float)
        e_m, e_p = np.exp(-0.5j * t), np.exp(0.5j * t)
        diag = np.stack(np.broadcast_arrays(e_m, e_p, e_p, e_m), axis=-1)
        m = np.zeros(diag.shape[:-1] + (4, 4), dtype=np.complex128)
        idx = np.arange(4)
        m[..., idx, idx] = diag
        return m
    raise GateError(f"unsupported gate kind {kind!r}")


def _apply(tensor: np.ndarray, n: int, kind: str, qubits, angle) -> np.ndarray:
    # tensor has shape (B, 2, ..., 2); qubit q lives on axis n - q
    mat = gate_matrix(kind, angle)
    batched = mat.ndim == 3
    axes = [n - q for q in qubits]
    k = len(qubits)
    moved = np.moveaxis(tensor, axes, range(-k, 0))
    shape = moved.shape
    flat = moved.reshape(shape[0], -1, 2**k)
    if batched:
        flat = np.einsum("bij,bmj->bmi", mat, flat)
    else:
        flat = flat @ mat.T
    return np.moveaxis(flat.reshape(shape), range(-k, 0), axes)


def simulate(amplitudes: np.ndarray, circuit: CircuitSpec, params=None) -> np.ndarray:
    """Apply ``circuit`` to a state array of shape ``(2**n,)`` or ``(B, 2**n)``.

    ``params`` has shape ``(n_params,)`` or ``(B, n_params)``.
    """
    n = circuit.n_qubits
    amps = np.asarray(amplitudes, dtype=np.complex128)
    single = amps.ndim == 1
    if single:
        amps = amps[None, :]
    if amps.shape[1] != 2**n:
        raise BindingError(f"state has {amps.shape[1]} amplitudes, circuit needs {2**n}")
    bound = circuit.bind(params)
    batch = max([amps.shape[0]] + [np.shape(a)[0] for _, _, a in bound if np.ndim(a) == 1])
    if amps.shape[0] != batch:
        if amps.shape[0] != 1:
            raise BindingError(f"state batch {amps.shape[0]} does not match angle batch {batch}")
        amps = np.repeat(amps, batch, axis=0)
        single = False
    tensor = amps.reshape((amps.shape[0],) + (2,) * n)
    for kind, qubits, angle in bound:
        tensor = _apply(tensor, n, kind, qubits, angle)
    out = np.ascontiguousarray(tensor.reshape(amps.shape[0], 2**n))
    return out[0] if single else out


def apply_circuit(state: StateVector, circuit: CircuitSpec, params=None) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise BindingError(f"circuit is {circuit.n_qubits} qubits wide, state has {state.n_qubits}")
    params = _check_params(circuit, params)
    if params.ndim > 1:
        raise BindingError("apply_circuit binds a single parameter vector; use simulate for batches")
    return StateVector(state.n_qubits, simulate(state.amplitudes, circuit, params))


def probability_of_zero(state: StateVector) -> float:
    return float(abs(state.amplitudes[0]) ** 2)


def outcome_probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def sample_probabilities(probs: np.ndarray, shots: int = DEFAULT_SHOTS, rng=None) -> np.ndarray:
    """Empirical outcome frequencies from ``shots`` draws (seeded shot mode)."""
    rng = np.random.default_rng(rng)
    probs = np.asarray(probs, dtype=float)
    p = np.clip(probs, 0.0, None)
    p = p / p.sum(axis=-1, keepdims=True)
    if p.ndim == 1:
        return rng.multinomial(shots, p) / shots
    return np.stack([rng.multinomial(shots, row) / shots for row in p])


def reduced_density_matrix(state: StateVector, keep: int) -> np.ndarray:
    """2x2 density matrix of qubit ``keep`` with all other qubits traced out."""
    n = state.n_qubits
    if not 0 <= keep < n:
        raise IndexError(f"qubit {keep} out of range for {n} qubits")
    return reduced_density_matrices(state.amplitudes[None, :], n, [keep])[0, 0]


def reduced_density_matrices(amplitudes: np.ndarray, n_qubits: int, qubits: Sequence[int] | None = None) -> np.ndarray:
    """Single-qubit marginals for a batch of states: shape ``(B, len(qubits), 2, 2)``."""
    amps = np.asarray(amplitudes, dtype=np.complex128)
    qubits = range(n_qubits) if qubits is None else qubits
    tensor = amps.reshape((amps.shape[0],) + (2,) * n_qubits)
    out = []
    for q in qubits:
        m = np.moveaxis(tensor, n_qubits - q, 1).reshape(amps.shape[0], 2, -1)
        out.append(np.einsum("bim,bjm->bij", m, m.conj()))
    return np.stack(out, axis=1)
