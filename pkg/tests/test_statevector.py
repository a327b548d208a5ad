"""
===============================================================================
HDBellSim - Testes do Simulador de Vetor de Estado
===============================================================================
Pasta: tests/
Arquivo: tests/test_statevector.py
===============================================================================
"""

import numpy as np
import pytest

from core.circuits import ExperimentSpec, Implementation, build_bell_circuit
from core.statevector import (
    BranchLimitError,
    Circuit,
    ClassicalBitError,
    Instruction,
    NormDriftError,
    OutcomeCounts,
    QubitIndexError,
    ShotStream,
    SimulationError,
    StateBatch,
    StateVector,
    StateVectorEngine,
    apply_instruction,
    exact_distribution,
    exact_probabilities,
    final_state,
    format_bitstring,
    new_classical_bits,
    parse_bitstring,
    run_shot,
    sample_counts,
)
from utils.constants import default_shots


def bell_pair() -> Circuit:
    return Circuit(2, 0, [Instruction.h(0), Instruction.cnot(0, 1)], [(0, 0), (1, 1)])


# =============================================================================
# INSTRUÇÕES ISOLADAS
# =============================================================================

def test_hadamard_on_zero():
    state, _ = apply_instruction(StateVector.zero(1), Instruction.h(0), new_classical_bits(0))
    assert np.allclose(state.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_phase_pi_on_plus_state():
    plus = StateVector(1, [1 / np.sqrt(2), 1 / np.sqrt(2)])
    state, _ = apply_instruction(plus, Instruction.phase(0, np.pi), new_classical_bits(0))
    assert np.allclose(state.amplitudes, [1 / np.sqrt(2), -1 / np.sqrt(2)])


def test_measure_eigenstate_is_deterministic():
    rng = np.random.default_rng(7)
    for _ in range(20):
        state, bits = apply_instruction(StateVector.basis(1, 1), Instruction.measure(0, 0),
                                        new_classical_bits(1), rng)
        assert bits[0] == 1
        assert np.allclose(state.amplitudes, [0, 1])


def test_measure_collapses_superposition():
    plus = StateVector(1, [1 / np.sqrt(2), 1 / np.sqrt(2)])
    state, bits = apply_instruction(plus, Instruction.measure(0, 0), new_classical_bits(1),
                                    np.random.default_rng(3))
    assert bits[0] in (0, 1)
    assert np.isclose(abs(state.amplitudes[bits[0]]), 1.0)
    assert np.isclose(state.norm_squared(), 1.0)


def test_measure_without_rng_raises():
    with pytest.raises(ValueError):
        apply_instruction(StateVector.zero(1), Instruction.measure(0, 0), new_classical_bits(1))


def test_conditional_phase_follows_classical_bit():
    plus = StateVector(1, [1 / np.sqrt(2), 1 / np.sqrt(2)])
    off, _ = apply_instruction(plus, Instruction.cond_phase(0, np.pi, 0), np.array([0], dtype=np.int8))
    on, _ = apply_instruction(plus, Instruction.cond_phase(0, np.pi, 0), np.array([1], dtype=np.int8))
    assert np.allclose(off.amplitudes, plus.amplitudes)
    assert np.allclose(on.amplitudes, [1 / np.sqrt(2), -1 / np.sqrt(2)])


def test_conditional_phase_on_unwritten_bit_raises():
    with pytest.raises(ClassicalBitError):
        apply_instruction(StateVector.zero(1), Instruction.cond_phase(0, 1.0, 0),
                          new_classical_bits(1))


def test_cphase_and_cnot_on_basis_states():
    # |11> (índice 3) ganha a fase; CNOT(0 -> 1) leva |01> (índice 1) a |11>
    state, _ = apply_instruction(StateVector.basis(2, 3), Instruction.cphase(0, 1, 0.3),
                                 new_classical_bits(0))
    assert np.isclose(state.amplitudes[3], np.exp(0.3j))
    state, _ = apply_instruction(StateVector.basis(2, 1), Instruction.cnot(0, 1),
                                 new_classical_bits(0))
    assert np.isclose(abs(state.amplitudes[3]), 1.0)


# =============================================================================
# VALIDAÇÃO DE CIRCUITOS
# =============================================================================

def test_qubit_out_of_range_raises():
    with pytest.raises(QubitIndexError):
        Circuit(2, 0, [Instruction.h(2)], [])


def test_repeated_qubits_raise():
    with pytest.raises(QubitIndexError):
        Circuit(2, 0, [Instruction.cnot(1, 1)], [])


def test_conditioned_gate_before_measurement_raises():
    with pytest.raises(ClassicalBitError):
        Circuit(2, 1, [Instruction.cond_phase(1, 0.5, 0), Instruction.measure(0, 0)], [])


def test_final_map_positions_must_be_contiguous():
    with pytest.raises(ValueError):
        Circuit(2, 0, [], [(0, 0), (1, 2)])


def test_final_readout_reuses_mid_circuit_bit():
    circuit = Circuit(2, 1, [Instruction.h(0), Instruction.measure(0, 0), Instruction.h(1)],
                      [(0, 0), (1, 1)])
    assert circuit.final_readout_sources == ((0, 0, 0), (1, 1, None))
    assert circuit.pending_readout_qubits == [1]


def test_outcome_counts_validation():
    with pytest.raises(ValueError):
        OutcomeCounts({'0': 3, '1': 2}, 4)
    counts = OutcomeCounts.from_dict({'01': 2, '10': 5})
    assert counts.total_shots == 7
    assert counts.most_common(1) == [('10', 5)]


def test_bitstring_position_order():
    # posição 0 é o primeiro caractere
    assert format_bitstring(1, 3) == "100"
    assert parse_bitstring("001") == 4


# =============================================================================
# AMOSTRAGEM
# =============================================================================

def test_bell_pair_only_correlated_outcomes():
    counts = sample_counts(bell_pair(), 500, seed=11)
    assert set(counts.counts) <= {"00", "11"}
    assert counts.total_shots == 500


def test_empty_circuit_reads_zero():
    circuit = Circuit(1, 0, [], [(0, 0)])
    assert run_shot(circuit, ShotStream(0, 0)) == "0"


def test_deterministic_circuit_single_bitstring():
    circuit = Circuit(2, 0, [Instruction.x(1)], [(0, 0), (1, 1)])
    counts = sample_counts(circuit, 1024, seed=5)
    assert counts.counts == {"01": 1024}


def test_same_seed_same_counts():
    circuit = build_bell_circuit(ExperimentSpec(2, Implementation.DYNAMIC, (2, 1)))
    first = sample_counts(circuit, 300, seed=99)
    second = sample_counts(circuit, 300, seed=99)
    assert first.counts == second.counts


def test_different_seeds_differ():
    circuit = Circuit(3, 0, [Instruction.h(q) for q in range(3)], [(q, q) for q in range(3)])
    assert sample_counts(circuit, 400, seed=1).counts != sample_counts(circuit, 400, seed=2).counts


def test_run_shot_matches_batched_sampling():
    engine = StateVectorEngine()
    for circuit in (bell_pair(),
                    build_bell_circuit(ExperimentSpec(2, Implementation.DYNAMIC, (1, 2)))):
        bits = engine.sample_bits(circuit, 40, seed=17)
        for shot in range(40):
            expected = "".join(str(int(b)) for b in bits[shot])
            assert engine.run_shot(circuit, ShotStream(17, shot)) == expected


def test_worker_count_does_not_change_counts():
    circuit = build_bell_circuit(ExperimentSpec(2, Implementation.DYNAMIC, (1, 1)))
    engine = StateVectorEngine(amplitude_budget=256)   # 16 shots por bloco
    serial = engine.sample_counts(circuit, 200, seed=4, workers=1)
    parallel = engine.sample_counts(circuit, 200, seed=4, workers=4)
    assert serial.counts == parallel.counts


def test_default_shot_budget():
    assert default_shots(3) == 6144


def test_sampling_matches_exact_distribution():
    circuit = build_bell_circuit(ExperimentSpec(1, Implementation.UNITARY, (1, 1)))
    shots = 8192
    counts = sample_counts(circuit, shots, seed=2024)
    exact = exact_distribution(circuit)
    for bitstring, p in exact.items():
        freq = counts.counts.get(bitstring, 0) / shots
        sigma = np.sqrt(p * (1 - p) / shots)
        assert abs(freq - p) <= 4 * sigma + 1e-12


# =============================================================================
# DISTRIBUIÇÃO EXATA
# =============================================================================

def test_exact_distribution_of_final_state():
    circuit = Circuit(2, 0, [Instruction.h(0), Instruction.ry(1, 0.7)], [(0, 0), (1, 1)])
    probs = final_state(circuit).probabilities()
    dist = exact_distribution(circuit)
    for index, p in enumerate(probs):
        assert np.isclose(dist.get(format_bitstring(index, 2), 0.0), p)


def test_exact_probabilities_marginalize_unmeasured_qubits():
    circuit = Circuit(2, 0, [Instruction.ry(0, 0.4), Instruction.h(1)], [(1, 0)])
    probs = exact_probabilities(circuit)
    assert probs.shape == (2,)
    assert np.allclose(probs, [0.5, 0.5])


def test_exact_branching_sums_to_one():
    circuit = build_bell_circuit(ExperimentSpec(3, Implementation.DYNAMIC, (2, 2)))
    probs = exact_probabilities(circuit)
    assert np.isclose(probs.sum(), 1.0, atol=1e-12)
    assert np.all(probs >= 0.0)


def test_exact_with_small_budget_splits_branches():
    circuit = build_bell_circuit(ExperimentSpec(2, Implementation.DYNAMIC, (1, 2)))
    reference = exact_probabilities(circuit)
    small = StateVectorEngine(amplitude_budget=16).exact_probabilities(circuit)
    assert np.allclose(reference, small, atol=1e-14)


def test_branch_cap_raises():
    circuit = Circuit(3, 3,
                      [Instruction.h(q) for q in range(3)] + [Instruction.measure(q, q) for q in range(3)],
                      [(q, q) for q in range(3)])
    with pytest.raises(BranchLimitError):
        StateVectorEngine(branch_cap=4).exact_probabilities(circuit)


def test_final_state_rejects_mid_circuit_measurement():
    circuit = Circuit(1, 1, [Instruction.measure(0, 0)], [])
    with pytest.raises(SimulationError):
        final_state(circuit)


def test_norm_drift_detected():
    batch = StateBatch(1, np.array([[2.0, 0.0]]), new_classical_bits(0).reshape(1, 0), np.ones(1))
    with pytest.raises(NormDriftError):
        batch.check_norm()
