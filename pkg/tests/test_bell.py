"""
===============================================================================
HDBellSim - Testes do Funcional CGLMP / ZG
===============================================================================
Pasta: tests/
Arquivo: tests/test_bell.py
===============================================================================
"""

import math

import numpy as np
import pytest

from core.bell import (
    DistributionError,
    JointDistribution,
    PairwiseMarginal,
    chsh_max,
    fine_test,
    from_counts,
    from_probability_maps,
    id_compact,
    id_from_expectations,
    id_to_izg,
    ideal_distribution,
    izg,
    izg_to_id,
    max_over_lhv_strategies,
    no_signaling_deviation,
    pairwise_from_distribution,
    pairwise_marginal,
    prob_ordered,
    zg_original_form,
)
from core.circuits import ExperimentSpec, Implementation, build_bell_circuit
from core.statevector import OutcomeCounts, final_state, sample_counts
from utils.constants import SETTING_PAIRS
from tests.conftest import random_distribution, random_no_signaling_distribution


def uniform(d: int) -> JointDistribution:
    return JointDistribution(d, np.full((2, 2, d, d), 1.0 / d ** 2))


def delta(d: int) -> JointDistribution:
    tables = np.zeros((2, 2, d, d))
    tables[:, :, 0, 0] = 1.0
    return JointDistribution(d, tables)


def cglmp_bracket_sum(dist: JointDistribution) -> float:
    """Soma CGLMP com os quatro colchetes, termo a termo"""
    d = dist.d

    def p(x, y, relation):
        return sum(dist.table(x, y)[a, b] for a in range(d) for b in range(d) if relation(a, b))

    total = 0.0
    for k in range(d // 2):
        c_k = 1.0 - 2.0 * k / (d - 1)
        total += c_k * (
            p(1, 1, lambda a, b: a == (b + k) % d)
            + p(2, 1, lambda a, b: b == (a + k + 1) % d)
            + p(2, 2, lambda a, b: a == (b + k) % d)
            + p(1, 2, lambda a, b: b == (a + k) % d)
            - p(1, 1, lambda a, b: a == (b - k - 1) % d)
            - p(2, 1, lambda a, b: b == (a - k) % d)
            - p(2, 2, lambda a, b: a == (b - k - 1) % d)
            - p(1, 2, lambda a, b: b == (a - k - 1) % d)
        )
    return total


# =============================================================================
# MONTAGEM
# =============================================================================

def test_counts_all_zero_outcome():
    counts = {s: OutcomeCounts({"00": 100}, 100) for s in SETTING_PAIRS}
    dist = from_counts(counts, 1)
    assert dist.table(1, 1)[0, 0] == 1.0


def test_uniform_counts():
    counts = {s: OutcomeCounts({"00": 25, "01": 25, "10": 25, "11": 25}, 100)
              for s in SETTING_PAIRS}
    assert np.allclose(from_counts(counts, 1).tables, 0.25)


def test_bitstring_split_a_then_b():
    # n = 2: "10" + "01" -> a = 1, b = 2
    counts = {s: OutcomeCounts({"1001": 10}, 10) for s in SETTING_PAIRS}
    assert from_counts(counts, 2).table(2, 2)[1, 2] == 1.0


def test_missing_setting_raises():
    counts = {(1, 1): OutcomeCounts({"00": 1}, 1)}
    with pytest.raises(DistributionError):
        from_counts(counts, 1)


def test_malformed_bitstring_raises():
    counts = {s: OutcomeCounts({"000": 1}, 1) for s in SETTING_PAIRS}
    with pytest.raises(DistributionError):
        from_counts(counts, 1)


def test_unnormalized_tables_raise():
    with pytest.raises(DistributionError):
        JointDistribution(2, np.full((2, 2, 2, 2), 0.3))


def test_probability_maps():
    maps = {s: {"00": 0.5, "11": 0.5} for s in SETTING_PAIRS}
    dist = from_probability_maps(maps, 1)
    assert dist.table(2, 1)[1, 1] == 0.5


def test_exact_distribution_reproduces_table_value(ideal_joint):
    assert math.isclose(izg(ideal_joint(2)).izg, 2.3360, abs_tol=1e-4)


# =============================================================================
# FUNCIONAL ZG
# =============================================================================

def test_prob_ordered_simple_cases():
    assert prob_ordered(delta(3), 1, 1) == 0.0
    assert prob_ordered(delta(3), 1, 1, strict=False) == 1.0
    assert math.isclose(prob_ordered(uniform(2), 1, 1), 0.25)
    assert math.isclose(prob_ordered(uniform(2), 1, 1, strict=False), 0.75)


@pytest.mark.parametrize("d", [2, 3, 5, 8])
def test_prob_ordered_uniform_closed_form(d):
    assert math.isclose(prob_ordered(uniform(d), 2, 1), (d - 1) / (2 * d))


def test_delta_saturates_lhv_bound():
    result = izg(delta(4))
    assert result.izg == 2.0
    assert not result.violates_lhv


@pytest.mark.parametrize("d", [2, 4, 7])
def test_uniform_izg_closed_form(d):
    assert math.isclose(izg(uniform(d)).izg, 1.0 + 1.0 / d)


def test_uniform_d2_has_zero_cglmp():
    assert math.isclose(izg(uniform(2)).i_d, 0.0, abs_tol=1e-12)


def test_ideal_n4_value(ideal_joint):
    assert math.isclose(izg(ideal_joint(4)).izg, 2.4457, abs_tol=1e-4)


def test_ideal_d2_cglmp_value():
    result = izg(ideal_distribution(2))
    assert math.isclose(result.izg, 1.5 + 1 / math.sqrt(2), rel_tol=1e-12)
    assert math.isclose(result.i_d, 2 * math.sqrt(2), rel_tol=1e-12)
    assert math.isclose(id_compact(ideal_distribution(2)), 2 * math.sqrt(2), rel_tol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_analytic_ideal_matches_circuits(n, ideal_joint):
    assert np.allclose(ideal_joint(n).tables, ideal_distribution(2 ** n).tables, atol=1e-10)


def test_original_zg_form_identity():
    for d in (2, 4, 8):
        dist = ideal_distribution(d)
        assert math.isclose(zg_original_form(dist), 3.0 - izg(dist).izg, rel_tol=1e-12)


# =============================================================================
# CONVERSÕES E EQUIVALÊNCIAS
# =============================================================================

def test_conversion_fixed_point_and_values():
    assert izg_to_id(2.0, 16) == 2.0
    assert math.isclose(izg_to_id(2.2071, 2), 2.8284, abs_tol=1e-4)
    assert math.isclose(izg_to_id(2.4725, 64), 2.9600, abs_tol=1e-4)
    assert math.isclose(id_to_izg(izg_to_id(2.31, 8), 8), 2.31)


@pytest.mark.parametrize("d", [2, 4, 8])
def test_compact_form_matches_zg_on_no_signaling_boxes(d, rng):
    for _ in range(1000):
        dist = random_no_signaling_distribution(d, rng)
        expected = 2.0 + (2.0 * d / (d - 1)) * (izg(dist).izg - 2.0)
        assert abs(id_compact(dist) - expected) <= 1e-10


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_compact_form_matches_bracket_sum(d, rng):
    for _ in range(50):
        dist = random_distribution(d, rng)
        assert abs(id_compact(dist) - cglmp_bracket_sum(dist)) <= 1e-10
        assert abs(id_from_expectations(dist) - id_compact(dist)) <= 1e-10


def test_compact_form_on_delta_is_two():
    for d in (2, 3, 8):
        assert math.isclose(id_compact(delta(d)), 2.0, abs_tol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_lhv_bound_by_enumeration(d):
    best_zg, best_id = max_over_lhv_strategies(d)
    assert math.isclose(best_zg, 2.0, abs_tol=1e-12)
    assert math.isclose(best_id, 2.0, abs_tol=1e-12)


def test_izg_range(rng):
    for d in (2, 3, 5):
        for _ in range(200):
            result = izg(random_distribution(d, rng))
            assert -1.0 <= result.izg <= 3.0
            assert all(0.0 <= v <= 1.0 for v in result.terms().values())


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ideal_is_no_signaling(n, ideal_joint):
    assert no_signaling_deviation(ideal_joint(n)) <= 1e-10


# =============================================================================
# PARES (CHSH)
# =============================================================================

def corner_marginal(e: np.ndarray) -> PairwiseMarginal:
    """Marginal com correlatores dados e marginais locais uniformes"""
    tables = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            same = (1 + e[x, y]) / 4
            diff = (1 - e[x, y]) / 4
            tables[x, y] = [[same, diff], [diff, same]]
    return PairwiseMarginal((0, 0), tables)


def test_chsh_of_zero_correlators():
    assert chsh_max(corner_marginal(np.zeros((2, 2)))) == 0.0


def test_chsh_pr_box_corner():
    assert math.isclose(chsh_max(corner_marginal(np.array([[1.0, 1.0], [1.0, -1.0]]))), 4.0)


def test_single_qubit_marginal_is_full_distribution(ideal_joint):
    dist = ideal_joint(1)
    marginal = pairwise_from_distribution(dist, 0, 0)
    assert np.allclose(marginal.tables, dist.tables)


def test_ideal_n1_chsh_is_tsirelson(ideal_joint):
    assert math.isclose(chsh_max(pairwise_from_distribution(ideal_joint(1), 0, 0)),
                        2 * math.sqrt(2), abs_tol=1e-6)
    assert not fine_test(pairwise_from_distribution(ideal_joint(1), 0, 0))


def test_product_distribution_has_local_pairs(rng):
    d = 4
    tables = np.zeros((2, 2, d, d))
    for x in range(2):
        for y in range(2):
            pa = rng.random(d)
            pb = rng.random(d)
            tables[x, y] = np.outer(pa / pa.sum(), pb / pb.sum())
    dist = JointDistribution(d, tables)
    for i in range(2):
        for j in range(2):
            marginal = pairwise_from_distribution(dist, i, j)
            a_bits = marginal.tables.sum(axis=3)
            b_bits = marginal.tables.sum(axis=2)
            assert np.allclose(marginal.tables, a_bits[:, :, :, None] * b_bits[:, :, None, :])
            assert chsh_max(marginal) <= 2.0 + 1e-12


def test_counts_and_distribution_marginals_agree():
    counts = {s: sample_counts(build_bell_circuit(ExperimentSpec(2, Implementation.UNITARY, s)),
                               500, seed=31) for s in SETTING_PAIRS}
    dist = from_counts(counts, 2)
    for i in range(2):
        for j in range(2):
            assert np.allclose(pairwise_marginal(counts, i, j).tables,
                               pairwise_from_distribution(dist, i, j).tables)


def final_probability_tensors(n: int) -> dict:
    tensors = {}
    for x, y in SETTING_PAIRS:
        circuit = build_bell_circuit(ExperimentSpec(n, Implementation.UNITARY, (x, y)))
        tensors[(x, y)] = final_state(circuit).probabilities().reshape([2] * (2 * n))
    return tensors


def reduced_pair_tables(n: int, i: int, j: int, tensors=None) -> np.ndarray:
    """Traço parcial do estado final: dígito i de A está no qubit n-1-i"""
    tensors = final_probability_tensors(n) if tensors is None else tensors
    qubit_a = n - 1 - i
    qubit_b = n + (n - 1 - j)
    tables = np.zeros((2, 2, 2, 2))
    for x, y in SETTING_PAIRS:
        probs = tensors[(x, y)]
        # eixo k do tensor corresponde ao qubit 2n-1-k
        keep = [2 * n - 1 - qubit_a, 2 * n - 1 - qubit_b]
        moved = np.moveaxis(probs, keep, [0, 1])
        tables[x - 1, y - 1] = moved.reshape(2, 2, -1).sum(axis=2)
    return tables


@pytest.mark.parametrize("n", [2, 3])
def test_pairwise_matches_partial_trace_oracle(n, ideal_joint):
    for i in range(n):
        for j in range(n):
            oracle = reduced_pair_tables(n, i, j)
            assert np.allclose(pairwise_from_distribution(ideal_joint(n), i, j).tables,
                               oracle, atol=1e-12)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_pairwise_chsh_matches_oracle(n, ideal_joint):
    dist = ideal_joint(n)
    tensors = final_probability_tensors(n)
    pipeline, oracle = np.zeros((n, n)), np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            marginal = pairwise_from_distribution(dist, i, j)
            reference = reduced_pair_tables(n, i, j, tensors)
            assert np.allclose(marginal.tables, reference, atol=1e-8)
            pipeline[i, j] = chsh_max(marginal)
            oracle[i, j] = chsh_max(PairwiseMarginal((i, j), reference))
    assert np.allclose(pipeline, oracle, atol=1e-8)
    assert np.sum(pipeline > 2.0) == np.sum(oracle > 2.0)
