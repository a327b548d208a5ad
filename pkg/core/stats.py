"""
===============================================================================
HDBellSim - Estatística do Teste de Bell
===============================================================================
Pasta: core/
Arquivo: core/stats.py
Descrição: Regras de score por tentativa (CGLMP e ZG), limite de Bentkus
           para o p-valor e curvas p-valor vs número de tentativas
===============================================================================
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from core.bell import JointDistribution, split_outcome
from core.statevector import OutcomeCounts
from utils.constants import LHV_BOUND, SCORE_NORMALIZATION, SETTING_PAIRS

logger = logging.getLogger("Stats")


class ScoreRuleError(ValueError):
    """Regra de score inválida ou degenerada"""
    pass


# =============================================================================
# TIPOS
# =============================================================================

@dataclass
class ScoreRule:
    """
    Tabela de scores s(a,b|x,y) indexada por table[x-1, y-1, a, b].
    A média sob settings uniformes é (1/4) sum s p.
    """
    name: str
    d: int
    table: np.ndarray
    s_min: float
    s_max: float
    beta_max: float = LHV_BOUND

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float)
        if self.table.shape != (2, 2, self.d, self.d):
            raise ScoreRuleError(f"Tabela de score com formato {self.table.shape}")
        if not self.s_min < self.s_max:
            raise ScoreRuleError(f"s_min ({self.s_min}) deve ser < s_max ({self.s_max})")
        if self.table.min() < self.s_min - 1e-12 or self.table.max() > self.s_max + 1e-12:
            raise ScoreRuleError("Entradas da tabela fora de [s_min, s_max]")
        if not self.s_min < self.beta_max < self.s_max:
            raise ScoreRuleError(
                f"beta_max = {self.beta_max} fora de ({self.s_min}, {self.s_max})")

    @property
    def gamma_hat(self) -> float:
        return (self.beta_max - self.s_min) / (self.s_max - self.s_min)

    def score(self, x: int, y: int, a: int, b: int) -> float:
        if not (0 <= a < self.d and 0 <= b < self.d):
            raise ScoreRuleError(f"Outcome ({a}, {b}) fora de [0, {self.d})")
        if x not in (1, 2) or y not in (1, 2):
            raise ScoreRuleError(f"Setting ({x}, {y}) inválido")
        return float(self.table[x - 1, y - 1, a, b])

    def expectation(self, dist: JointDistribution) -> float:
        if dist.d != self.d:
            raise ScoreRuleError(f"Distribuição com d={dist.d}, regra com d={self.d}")
        return float(np.sum(self.table * dist.tables)) / SCORE_NORMALIZATION


@dataclass(frozen=True)
class TrialRecord:
    """Uma tentativa: settings, outcomes e score"""
    x: int
    y: int
    a: int
    b: int
    score: float


# =============================================================================
# REGRAS
# =============================================================================

def cglmp_score_rule(d: int) -> ScoreRule:
    """
    +-4 c_k nas condições positivas/negativas da soma CGLMP, com
    c_k = 1 - 2k/(d-1) para 0 <= k < floor(d/2).
    """
    if d < 2:
        raise ScoreRuleError(f"d deve ser >= 2, recebeu {d}")
    a, b = np.meshgrid(np.arange(d), np.arange(d), indexing='ij')
    a_minus_b = (a - b) % d
    b_minus_a = (b - a) % d

    table = np.zeros((2, 2, d, d))
    for k in range(d // 2):
        weight = SCORE_NORMALIZATION * (1.0 - 2.0 * k / (d - 1))
        # (1,1) e (2,2): a = b + k positivo, b = a + k + 1 negativo
        for x in (1, 2):
            table[x - 1, x - 1] += weight * (a_minus_b == k)
            table[x - 1, x - 1] -= weight * (a_minus_b == (-k - 1) % d)
        # (2,1): b = a + k + 1 positivo, b = a - k negativo
        table[1, 0] += weight * (b_minus_a == (k + 1) % d)
        table[1, 0] -= weight * (b_minus_a == (-k) % d)
        # (1,2): b = a + k positivo, b = a - k - 1 negativo
        table[0, 1] += weight * (b_minus_a == k % d)
        table[0, 1] -= weight * (b_minus_a == (-k - 1) % d)

    return ScoreRule('cglmp', d, table, float(table.min()), float(table.max()))


def zg_score_rule(d: int) -> ScoreRule:
    """Transformação afim da regra CGLMP: s_ZG = 2 + (s - 2)(d - 1)/(2d)"""
    base = cglmp_score_rule(d)
    scale = (d - 1) / (2.0 * d)
    table = 2.0 + (base.table - 2.0) * scale
    return ScoreRule('zg', d, table,
                     2.0 + (base.s_min - 2.0) * scale,
                     2.0 + (base.s_max - 2.0) * scale)


# =============================================================================
# TENTATIVAS
# =============================================================================

def score_trials(records: Iterable[Tuple[int, int, int, int]],
                 rule: ScoreRule) -> Tuple[float, List[TrialRecord]]:
    """Score total c = sum c_i (soma exata) e a lista por tentativa"""
    trials = [TrialRecord(x, y, a, b, rule.score(x, y, a, b)) for x, y, a, b in records]
    return math.fsum(t.score for t in trials), trials


def simulate_trials(dist: JointDistribution, m: int,
                    rng: np.random.Generator) -> List[Tuple[int, int, int, int]]:
    """m tentativas com settings uniformes amostradas de `dist`"""
    xs = rng.integers(1, 3, size=m)
    ys = rng.integers(1, 3, size=m)
    a = np.zeros(m, dtype=int)
    b = np.zeros(m, dtype=int)
    d = dist.d
    for x, y in SETTING_PAIRS:
        mask = (xs == x) & (ys == y)
        count = int(mask.sum())
        if count == 0:
            continue
        probs = dist.table(x, y).ravel()
        flat = rng.choice(d * d, size=count, p=probs / probs.sum())
        a[mask], b[mask] = np.divmod(flat, d)
    return list(zip(xs.tolist(), ys.tolist(), a.tolist(), b.tolist()))


def pvalue_from_counts(counts_by_setting: Mapping[Tuple[int, int], OutcomeCounts],
                       rule: ScoreRule, n: int) -> Tuple[float, int, float]:
    """(c, m, p) tratando cada shot arquivado como uma tentativa"""
    scores = []
    m = 0
    for (x, y), counts in counts_by_setting.items():
        for bitstring, count in counts.counts.items():
            a, b = split_outcome(bitstring, n)
            scores.append(rule.score(x, y, a, b) * count)
        m += counts.total_shots
    c = math.fsum(scores)
    return c, m, bentkus_pvalue(c, m, rule)


def pvalue_from_distribution(dist: JointDistribution, trials: int,
                             rule: ScoreRule) -> Tuple[float, int, float]:
    """
    (c, m, p) para uma distribuição sem contagens (exata ou mitigada): c é o
    score médio da regra vezes `trials`, limitado a [s_min, s_max] por tentativa.
    """
    if trials < 1:
        raise ScoreRuleError(f"Número de tentativas inválido: {trials}")
    mean = min(max(rule.expectation(dist), rule.s_min), rule.s_max)
    c = mean * trials
    return c, trials, bentkus_pvalue(c, trials, rule)


# =============================================================================
# LIMITE DE BENTKUS
# =============================================================================

def log_binomial_tail(t: int, m: int, gamma: float) -> float:
    """log sum_{i=t}^{m} C(m,i) gamma^i (1-gamma)^(m-i)"""
    if t <= 0:
        return 0.0
    if t > m:
        return -math.inf
    i = np.arange(t, m + 1)
    terms = (gammaln(m + 1) - gammaln(i + 1) - gammaln(m - i + 1)
             + i * math.log(gamma) + (m - i) * math.log1p(-gamma))
    return float(logsumexp(terms))


def bentkus_pvalue(c: float, m: int, rule: ScoreRule) -> float:
    """
    Limite superior do p-valor para score total c em m tentativas.

    p = e * T(floor(delta))^(1 - f) * T(ceil(delta))^f, f = delta - floor(delta),
    com delta = (c - m s_min) / (s_max - s_min) e T a cauda binomial de
    parâmetro gamma_hat. Limitado a 1.
    """
    if m < 1:
        raise ScoreRuleError(f"m deve ser >= 1, recebeu {m}")
    gamma = rule.gamma_hat
    if not 0.0 < gamma < 1.0:
        raise ScoreRuleError(f"gamma_hat = {gamma} fora de (0, 1)")

    delta = (c - m * rule.s_min) / (rule.s_max - rule.s_min)
    if delta < -1e-9 or delta > m * (1 + 1e-12):
        raise ScoreRuleError(f"Score total {c} inatingível em {m} tentativas")
    if delta <= m * gamma:
        return 1.0

    lower = math.floor(delta)
    upper = math.ceil(delta)
    frac = delta - lower
    log_p = 1.0 + (1.0 - frac) * log_binomial_tail(lower, m, gamma)
    if frac > 0.0:
        log_p += frac * log_binomial_tail(upper, m, gamma)
    if log_p >= 0.0:
        return 1.0
    return max(math.exp(log_p), math.ulp(0.0))


def pvalue_curve(mean_score: float, rule: ScoreRule,
                 m_grid: Sequence[int]) -> List[Tuple[int, float]]:
    """p-valor de Bentkus para c = mean_score * m em cada m da grade"""
    grid = [int(m) for m in m_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("A grade de m deve ser monótona não decrescente")
    return [(m, bentkus_pvalue(mean_score * m, m, rule)) for m in grid]
