"""
===============================================================================
HDBellSim - Testes das Regras de Score e do Limite de Bentkus
===============================================================================
Pasta: tests/
Arquivo: tests/test_stats.py
===============================================================================
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from core.bell import id_compact, ideal_distribution, izg
from core.statevector import OutcomeCounts
from core.stats import (
    ScoreRule,
    ScoreRuleError,
    bentkus_pvalue,
    cglmp_score_rule,
    log_binomial_tail,
    pvalue_curve,
    pvalue_from_counts,
    pvalue_from_distribution,
    score_trials,
    simulate_trials,
    zg_score_rule,
)
from utils.constants import SETTING_PAIRS
from tests.conftest import (
    random_distribution,
    random_no_signaling_distribution,
    signaling_distribution,
)


def unit_rule(gamma: str) -> ScoreRule:
    """Regra com scores em [0, 1] e gamma_hat = beta_max"""
    return ScoreRule('unit', 2, np.full((2, 2, 2, 2), 0.5), 0.0, 1.0, beta_max=float(gamma))


def exact_tails(m: int, gamma: Fraction) -> list:
    """tails[t] = sum_{i>=t} C(m,i) gamma^i (1-gamma)^(m-i), em aritmética racional"""
    tails = [Fraction(0)] * (m + 2)
    for i in range(m, -1, -1):
        tails[i] = tails[i + 1] + math.comb(m, i) * gamma ** i * (1 - gamma) ** (m - i)
    return tails


# =============================================================================
# REGRAS DE SCORE
# =============================================================================

def test_cglmp_rule_d2_entries():
    rule = cglmp_score_rule(2)
    assert np.all(np.abs(rule.table) == 4.0)
    assert (rule.s_min, rule.s_max) == (-4.0, 4.0)
    # (1,1): a = b positivo; (2,1): b = a + 1 positivo
    assert rule.score(1, 1, 0, 0) == 4.0
    assert rule.score(2, 1, 0, 1) == 4.0
    assert rule.score(2, 1, 1, 1) == -4.0


def test_zg_rule_is_affine_image_of_cglmp():
    for d in (2, 4, 8):
        base = cglmp_score_rule(d).table
        zg = zg_score_rule(d)
        assert np.allclose(zg.table, 2.0 + (base - 2.0) * (d - 1) / (2 * d))
        assert zg.s_min < zg.beta_max < zg.s_max


def test_zg_rule_fixes_local_bound():
    rule = zg_score_rule(16)
    assert rule.beta_max == 2.0
    assert math.isclose(rule.s_max, 2.0 + 2.0 * 15 / 32)


@pytest.mark.parametrize("d", [2, 3, 4, 8])
def test_cglmp_rule_expectation_is_compact_form(d, rng):
    rule = cglmp_score_rule(d)
    for _ in range(100):
        dist = random_distribution(d, rng)
        assert abs(rule.expectation(dist) - id_compact(dist)) <= 1e-9


@pytest.mark.parametrize("d", [2, 4, 8])
def test_zg_rule_expectation_is_izg(d, rng):
    rule = zg_score_rule(d)
    for _ in range(100):
        dist = random_no_signaling_distribution(d, rng)
        assert abs(rule.expectation(dist) - izg(dist).izg) <= 1e-9


def test_ideal_d2_expectation_is_tsirelson():
    assert math.isclose(cglmp_score_rule(2).expectation(ideal_distribution(2)),
                        2 * math.sqrt(2), rel_tol=1e-12)


def test_invalid_rules_raise():
    with pytest.raises(ScoreRuleError):
        ScoreRule('bad', 2, np.zeros((2, 2, 2, 2)), 1.0, 1.0)
    with pytest.raises(ScoreRuleError):
        ScoreRule('bad', 2, np.zeros((2, 2, 2, 2)), 0.0, 1.0, beta_max=1.5)
    with pytest.raises(ScoreRuleError):
        ScoreRule('bad', 2, np.full((2, 2, 2, 2), 3.0), 0.0, 2.5, beta_max=2.0)
    with pytest.raises(ScoreRuleError):
        cglmp_score_rule(1)


def test_score_out_of_range_raises():
    rule = cglmp_score_rule(4)
    with pytest.raises(ScoreRuleError):
        rule.score(1, 1, 4, 0)
    with pytest.raises(ScoreRuleError):
        rule.score(3, 1, 0, 0)


# =============================================================================
# TENTATIVAS
# =============================================================================

def test_empty_trials_score_zero():
    total, trials = score_trials([], cglmp_score_rule(2))
    assert total == 0.0
    assert trials == []


def test_score_trials_sums_entries():
    rule = cglmp_score_rule(2)
    total, trials = score_trials([(1, 1, 0, 0), (2, 1, 1, 1), (1, 2, 0, 0)], rule)
    assert total == 4.0
    assert [t.score for t in trials] == [4.0, -4.0, 4.0]


def test_simulated_mean_score_matches_izg():
    rng = np.random.default_rng(8)
    dist = ideal_distribution(4)
    records = simulate_trials(dist, 40000, rng)
    _, trials = score_trials(records, zg_score_rule(4))
    scores = np.array([t.score for t in trials])
    sigma = scores.std(ddof=1) / math.sqrt(len(scores))
    assert abs(scores.mean() - izg(dist).izg) <= 4 * sigma
    assert math.isclose(izg(dist).izg, 2.3360, abs_tol=1e-4)


def test_pvalue_from_counts_at_local_bound():
    # a = b = 0 em todos os settings: scores ZG 2.5, 2.5, 0.5, 2.5
    counts = {s: OutcomeCounts({"00": 10}, 10) for s in SETTING_PAIRS}
    c, m, p = pvalue_from_counts(counts, zg_score_rule(2), 1)
    assert (c, m) == (80.0, 40)
    assert p == 1.0


def test_pvalue_from_signaling_distribution_stays_in_range():
    rule = zg_score_rule(2)
    dist = signaling_distribution()
    assert izg(dist).izg > rule.s_max
    with pytest.raises(ScoreRuleError):
        bentkus_pvalue(izg(dist).izg * 400, 400, rule)
    c, m, p = pvalue_from_distribution(dist, 400, rule)
    assert m == 400
    assert 400 * rule.s_min <= c <= 400 * rule.s_max
    assert 0.0 <= p <= 1.0


def test_pvalue_from_no_signaling_distribution_uses_izg():
    rule = zg_score_rule(4)
    dist = ideal_distribution(4)
    c, m, p = pvalue_from_distribution(dist, 4000, rule)
    assert math.isclose(c, izg(dist).izg * 4000, rel_tol=1e-9)
    assert p == bentkus_pvalue(c, m, rule)
    assert p < 1e-6
    with pytest.raises(ScoreRuleError):
        pvalue_from_distribution(dist, 0, rule)


# =============================================================================
# LIMITE DE BENTKUS
# =============================================================================

def test_bentkus_reference_example():
    rule = ScoreRule('ref', 2, np.full((2, 2, 2, 2), 2.0), 0.0, 4.0)
    assert rule.gamma_hat == 0.5
    p = bentkus_pvalue(36.0, 10, rule)
    assert math.isclose(p, math.e * 11 / 1024, rel_tol=1e-12)
    assert math.isclose(p, 0.0292, abs_tol=1e-4)


@pytest.mark.parametrize("gamma", ["0.1", "0.5", "0.9"])
@pytest.mark.parametrize("m", [1, 7, 50, 200])
def test_bentkus_matches_exact_rational_oracle(gamma, m):
    rule = unit_rule(gamma)
    g = Fraction(gamma)
    tails = exact_tails(m, g)
    for delta in range(math.floor(m * g) + 1, m + 1):
        expected = min(1.0, math.e * float(tails[delta]))
        assert math.isclose(bentkus_pvalue(float(delta), m, rule), expected, rel_tol=1e-9)


def test_bentkus_interpolates_between_integers():
    rule = unit_rule("0.5")
    tails = exact_tails(10, Fraction(1, 2))
    expected = math.e * math.sqrt(float(tails[9]) * float(tails[10]))
    assert math.isclose(bentkus_pvalue(9.5, 10, rule), expected, rel_tol=1e-9)


def test_bentkus_clamps_at_or_below_bound():
    rule = zg_score_rule(8)
    for m in (1, 100, 10000):
        assert bentkus_pvalue(2.0 * m, m, rule) == 1.0
        assert bentkus_pvalue(1.5 * m, m, rule) == 1.0


def test_bentkus_rejects_invalid_input():
    rule = cglmp_score_rule(2)
    with pytest.raises(ScoreRuleError):
        bentkus_pvalue(0.0, 0, rule)
    with pytest.raises(ScoreRuleError):
        bentkus_pvalue(5.0 * 10, 10, rule)


def test_pvalue_curve_is_non_increasing():
    rule = zg_score_rule(16)
    grid = [2 ** k for k in range(4, 18)]
    curve = pvalue_curve(2.3167, rule, grid)
    assert [m for m, _ in curve] == grid
    values = [p for _, p in curve]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-10


def test_pvalue_curve_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        pvalue_curve(2.3, zg_score_rule(4), [100, 10])


def test_log_binomial_tail_edges():
    assert log_binomial_tail(0, 10, 0.3) == 0.0
    assert log_binomial_tail(-2, 10, 0.3) == 0.0
    assert log_binomial_tail(11, 10, 0.3) == -math.inf
    assert math.isclose(log_binomial_tail(10, 10, 0.3), 10 * math.log(0.3), rel_tol=1e-12)
