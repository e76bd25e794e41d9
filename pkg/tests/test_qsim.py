import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from qphish.errors import BindingError, CapacityError, GateError
from qphish.qsim import (
    GATE_KINDS,
    PARAMETRIC,
    TWO_QUBIT,
    CircuitSpec,
    Gate,
    StateVector,
    apply_circuit,
    gate_matrix,
    outcome_probabilities,
    probability_of_zero,
    reduced_density_matrix,
    reduced_density_matrices,
    sample_probabilities,
    simulate,
    zero_state,
)

S2 = 1 / np.sqrt(2)


def circ(n, *gates, n_params=0):
    return CircuitSpec(n, gates, n_params)


def test_zero_state_examples():
    assert np.array_equal(zero_state(1).amplitudes, [1, 0])
    assert np.array_equal(zero_state(2).amplitudes, [1, 0, 0, 0])
    with pytest.raises(CapacityError):
        zero_state(21)
    with pytest.raises(CapacityError):
        zero_state(0)


def test_hadamard_on_zero():
    out = apply_circuit(zero_state(1), circ(1, Gate("H", (0,))))
    assert np.allclose(out.amplitudes, [S2, S2], atol=1e-15)


def test_rz_zero_is_identity(rng):
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    out = apply_circuit(StateVector(2, psi), circ(2, Gate("RZ", (1,), angle=0.0)))
    assert np.allclose(out.amplitudes, psi, atol=1e-15)


def test_hh_cz_hh_against_matrix_oracle():
    c = circ(2, Gate("H", (0,)), Gate("H", (1,)), Gate("CZ", (0, 1)), Gate("H", (0,)), Gate("H", (1,)))
    out = apply_circuit(zero_state(2), c).amplitudes
    HH = np.kron(oracles.H, oracles.H)
    expected = HH @ np.diag([1, 1, 1, -1]) @ HH @ np.array([1, 0, 0, 0])
    assert np.allclose(out, expected, atol=1e-12)
    assert np.allclose(out, [0.5, 0.5, 0.5, -0.5], atol=1e-12)


def test_h_cz_h_on_target_is_cnot(rng):
    # (I x H) CZ (I x H) = CNOT with control 1, target 0
    c = circ(2, Gate("H", (0,)), Gate("CZ", (1, 0)), Gate("H", (0,)))
    for basis in range(4):
        psi = np.zeros(4, complex)
        psi[basis] = 1
        out = simulate(psi, c)
        ref = simulate(psi, circ(2, Gate("CNOT", (1, 0))))
        assert np.allclose(out, ref, atol=1e-12)


def test_cnot_control_convention():
    # control qubit 0 set -> flips qubit 1: |01> (index 1) -> |11> (index 3)
    psi = np.array([0, 1, 0, 0], complex)
    assert np.allclose(simulate(psi, circ(2, Gate("CNOT", (0, 1)))), [0, 0, 0, 1])


def test_probability_of_zero_examples():
    assert probability_of_zero(zero_state(3)) == 1.0
    h = apply_circuit(zero_state(1), circ(1, Gate("H", (0,))))
    assert probability_of_zero(h) == pytest.approx(0.5, abs=1e-15)
    assert probability_of_zero(StateVector(1, [0, 1])) == 0.0


def test_outcome_probability_examples():
    assert np.array_equal(outcome_probabilities(zero_state(2)), [1, 0, 0, 0])
    hh = apply_circuit(zero_state(2), circ(2, Gate("H", (0,)), Gate("H", (1,))))
    assert np.allclose(outcome_probabilities(hh), 0.25, atol=1e-15)
    bell = apply_circuit(zero_state(2), circ(2, Gate("H", (0,)), Gate("CNOT", (0, 1))))
    assert np.allclose(outcome_probabilities(bell), [0.5, 0, 0, 0.5], atol=1e-15)


def test_reduced_density_examples():
    plus1 = apply_circuit(zero_state(2), circ(2, Gate("H", (1,))))
    assert np.allclose(reduced_density_matrix(plus1, 0), np.diag([1, 0]), atol=1e-15)
    bell = apply_circuit(zero_state(2), circ(2, Gate("H", (0,)), Gate("CNOT", (0, 1))))
    for q in (0, 1):
        assert np.allclose(reduced_density_matrix(bell, q), np.eye(2) / 2, atol=1e-15)
    prod = apply_circuit(zero_state(2), circ(2, Gate("RY", (0,), angle=np.pi / 3)))
    rho = reduced_density_matrix(prod, 0)
    assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(IndexError):
        reduced_density_matrix(prod, 2)


def test_binding_errors():
    c = circ(1, Gate("RX", (0,), param=0), n_params=1)
    with pytest.raises(BindingError):
        apply_circuit(zero_state(1), c, [0.1, 0.2])
    with pytest.raises(BindingError):
        apply_circuit(zero_state(1), c, [])
    with pytest.raises(BindingError):
        apply_circuit(zero_state(2), c, [0.1])


def test_gate_validation():
    with pytest.raises(GateError):
        Gate("SWAP", (0, 1))
    with pytest.raises(GateError):
        Gate("CNOT", (0, 0))
    with pytest.raises(GateError):
        Gate("RX", (0,))
    with pytest.raises(GateError):
        Gate("H", (0,), angle=1.0)
    with pytest.raises(GateError):
        CircuitSpec(2, [Gate("H", (2,))])
    with pytest.raises(GateError):
        CircuitSpec(1, [Gate("RX", (0,), param=1)], n_params=1)


@pytest.mark.parametrize("kind", sorted(GATE_KINDS))
def test_gate_matrices_unitary_and_match_oracle(kind):
    for theta in (0.0, 0.37, -2.1, np.pi):
        angle = theta if kind in PARAMETRIC else None
        U = gate_matrix(kind, angle)
        assert np.allclose(U.conj().T @ U, np.eye(len(U)), atol=1e-10)
        qubits = (1, 0) if kind in TWO_QUBIT else (0,)
        n = len(qubits)
        ref = oracles.full_gate(kind, qubits, n, angle)
        got = simulate(np.eye(2**n, dtype=complex), CircuitSpec(n, [Gate(kind, qubits, angle=angle)]))
        # rows of `got` are images of basis states
        assert np.allclose(got.T, ref, atol=1e-12)


def _random_circuit(rng, n, depth):
    gates = []
    n_params = 0
    for _ in range(depth):
        kinds = sorted(GATE_KINDS) if n > 1 else sorted(GATE_KINDS - TWO_QUBIT)
        kind = kinds[rng.integers(len(kinds))]
        qubits = tuple(int(q) for q in rng.choice(n, size=2 if kind in TWO_QUBIT else 1, replace=False))
        if kind in PARAMETRIC:
            if rng.random() < 0.5:
                gates.append(Gate(kind, qubits, param=n_params))
                n_params += 1
            else:
                gates.append(Gate(kind, qubits, angle=float(rng.uniform(-4, 4))))
        else:
            gates.append(Gate(kind, qubits))
    return CircuitSpec(n, gates, n_params)


def _random_state(rng, n):
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)


def test_norm_preserved_on_1000_random_circuits():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        c = _random_circuit(rng, n, int(rng.integers(1, 15)))
        out = simulate(_random_state(rng, n), c, rng.uniform(0, 2 * np.pi, c.n_params))
        worst = max(worst, abs(np.linalg.norm(out) - 1))
    assert worst < 1e-9


@given(st.integers(1, 5), st.integers(0, 20), st.integers(0, 2**32 - 1))
def test_simulator_matches_dense_oracle(n, depth, seed):
    rng = np.random.default_rng(seed)
    c = _random_circuit(rng, n, depth)
    params = rng.uniform(0, 2 * np.pi, c.n_params)
    psi = _random_state(rng, n)
    U = oracles.circuit_unitary(c.bind(params), n)
    assert np.allclose(simulate(psi, c, params), U @ psi, atol=1e-10)


@given(st.integers(1, 6), st.integers(0, 25), st.integers(0, 2**32 - 1))
def test_inverse_circuit_restores_state(n, depth, seed):
    rng = np.random.default_rng(seed)
    c = _random_circuit(rng, n, depth)
    params = rng.uniform(0, 2 * np.pi, c.n_params)
    psi = _random_state(rng, n)
    back = simulate(simulate(psi, c, params), c.inverse(), params)
    assert np.allclose(back, psi, atol=1e-9)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_reduced_density_matches_partial_trace_oracle(n, seed):
    rng = np.random.default_rng(seed)
    psi = _random_state(rng, n)
    state = StateVector(n, psi)
    for q in range(n):
        rho = reduced_density_matrix(state, q)
        assert np.allclose(rho, oracles.partial_trace_keep(psi, n, q), atol=1e-10)
        assert np.allclose(rho, rho.conj().T, atol=1e-12)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
        ev = np.linalg.eigvalsh(rho)
        assert ev.min() > -1e-10 and ev.max() < 1 + 1e-10


def test_batched_angles_match_single_runs(rng):
    c = CircuitSpec(2, [Gate("H", (0,)), Gate("RY", (1,), param=0), Gate("CRX", (0, 1), param=1)], 2)
    params = rng.uniform(0, 6, (5, 2))
    batch = simulate(zero_state(2).amplitudes, c, params)
    for b in range(5):
        assert np.allclose(batch[b], simulate(zero_state(2).amplitudes, c, params[b]), atol=1e-14)
    rdm = reduced_density_matrices(batch, 2)
    assert rdm.shape == (5, 2, 2, 2)


def test_composition_shifts_parameter_slots():
    a = CircuitSpec(1, [Gate("RX", (0,), param=0)], 1)
    b = CircuitSpec(1, [Gate("RZ", (0,), param=0)], 1)
    ab = a + b
    assert ab.n_params == 2
    assert [g.param for g in ab.gates] == [0, 1]


def test_shot_sampling_seeded_and_convergent():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    a = sample_probabilities(p, 1024, rng=7)
    b = sample_probabilities(p, 1024, rng=7)
    assert np.array_equal(a, b)
    assert a.sum() == pytest.approx(1.0)
    big = sample_probabilities(p, 10**6, rng=1)
    assert np.allclose(big, p, atol=3e-3)
