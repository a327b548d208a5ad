"""
===============================================================================
HDBellSim - Funcionais de Bell
===============================================================================
Pasta: core/
Arquivo: core/bell.py
Descrição: Distribuições conjuntas p(a,b|x,y), funcional ZG, forma compacta
           CGLMP, análise CHSH por pares de qubits e estratégias locais
===============================================================================
"""

import itertools
import logging
import math
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from core.statevector import OutcomeCounts
from utils.constants import (
    CHSH_LHV_BOUND,
    DISTRIBUTION_TOLERANCE,
    LHV_BOUND,
    QUANTUM_MAX_REFERENCE,
    SETTING_ANGLES,
    SETTING_PAIRS,
)

logger = logging.getLogger("Bell")

__all__ = [
    'DistributionError', 'JointDistribution', 'PairwiseMarginal', 'BellResult',
    'QUANTUM_MAX_REFERENCE', 'split_outcome', 'from_counts',
    'from_probability_maps', 'from_outcome_probabilities', 'prob_ordered',
    'difference_distribution', 'izg', 'id_compact', 'izg_to_id', 'id_to_izg',
    'id_from_expectations', 'zg_original_form', 'ideal_distribution',
    'pairwise_marginal', 'pairwise_from_distribution', 'correlators',
    'chsh_values', 'chsh_max', 'local_deterministic_distribution',
    'max_over_lhv_strategies', 'no_signaling_deviation',
]


class DistributionError(ValueError):
    """Distribuição inválida, setting ausente ou bitstring malformada"""
    pass


# =============================================================================
# TIPOS
# =============================================================================

@dataclass
class JointDistribution:
    """
    p(a,b|x,y) para os quatro pares de settings.
    tables[x-1, y-1, a, b]
    """
    d: int
    tables: np.ndarray

    def __post_init__(self):
        self.tables = np.asarray(self.tables, dtype=float)
        if self.d < 2:
            raise DistributionError(f"d deve ser >= 2, recebeu {self.d}")
        if self.tables.shape != (2, 2, self.d, self.d):
            raise DistributionError(
                f"Formato esperado (2, 2, {self.d}, {self.d}), recebeu {self.tables.shape}")
        if np.any(self.tables < -DISTRIBUTION_TOLERANCE):
            raise DistributionError("Probabilidades negativas na distribuição")
        sums = self.tables.sum(axis=(2, 3))
        if np.any(np.abs(sums - 1.0) > DISTRIBUTION_TOLERANCE):
            raise DistributionError(f"Tabelas não somam 1: {sums.ravel()}")

    def table(self, x: int, y: int) -> np.ndarray:
        return self.tables[x - 1, y - 1]

    def marginal_a(self, x: int, y: int) -> np.ndarray:
        return self.table(x, y).sum(axis=1)

    def marginal_b(self, x: int, y: int) -> np.ndarray:
        return self.table(x, y).sum(axis=0)

    @classmethod
    def from_tables(cls, tables: Mapping[Tuple[int, int], np.ndarray]) -> 'JointDistribution':
        missing = [s for s in SETTING_PAIRS if s not in tables]
        if missing:
            raise DistributionError(f"Settings ausentes: {missing}")
        stacked = np.array([[tables[(x, y)] for y in (1, 2)] for x in (1, 2)], dtype=float)
        return cls(stacked.shape[-1], stacked)


@dataclass
class PairwiseMarginal:
    """
    Marginal de dois qubits (dígito i de A, dígito j de B):
    tables[x-1, y-1, alpha, beta]
    """
    pair: Tuple[int, int]
    tables: np.ndarray

    def __post_init__(self):
        self.tables = np.asarray(self.tables, dtype=float)
        if self.tables.shape != (2, 2, 2, 2):
            raise DistributionError(f"Marginal de par com formato {self.tables.shape}")
        sums = self.tables.sum(axis=(2, 3))
        if np.any(np.abs(sums - 1.0) > DISTRIBUTION_TOLERANCE):
            raise DistributionError(f"Marginal do par {self.pair} não normalizada")


@dataclass(frozen=True)
class BellResult:
    """Valor do funcional ZG, I_d equivalente e os quatro termos"""
    izg: float
    i_d: float
    p_a1_lt_b1: float
    p_a2_lt_b2: float
    p_a2_lt_b1: float
    p_a1_le_b2: float

    @property
    def violates_lhv(self) -> bool:
        return self.izg > LHV_BOUND

    def terms(self) -> Dict[str, float]:
        return {
            'P(A1<B1)': self.p_a1_lt_b1,
            'P(A2<B2)': self.p_a2_lt_b2,
            'P(A2<B1)': self.p_a2_lt_b1,
            'P(A1<=B2)': self.p_a1_le_b2,
        }

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


# =============================================================================
# MONTAGEM A PARTIR DE CONTAGENS
# =============================================================================

def split_outcome(bitstring: str, n: int) -> Tuple[int, int]:
    """Bitstring de 2n posições -> (a, b), posição i com peso 2^i"""
    if len(bitstring) != 2 * n or set(bitstring) - {'0', '1'}:
        raise DistributionError(f"Bitstring malformada para n={n}: '{bitstring}'")
    a = sum(1 << i for i in range(n) if bitstring[i] == '1')
    b = sum(1 << i for i in range(n) if bitstring[n + i] == '1')
    return a, b


def _table_from_map(values: Mapping[str, float], n: int) -> np.ndarray:
    d = 2 ** n
    table = np.zeros((d, d))
    for bitstring, value in values.items():
        a, b = split_outcome(bitstring, n)
        table[a, b] += value
    return table


def from_counts(counts_by_setting: Mapping[Tuple[int, int], OutcomeCounts],
                n: int) -> JointDistribution:
    """Frequências relativas das contagens de cada par de settings"""
    tables = {}
    for setting in SETTING_PAIRS:
        if setting not in counts_by_setting:
            raise DistributionError(f"Contagens ausentes para o setting {setting}")
        counts = counts_by_setting[setting]
        if counts.total_shots < 1:
            raise DistributionError(f"Nenhum shot no setting {setting}")
        tables[setting] = _table_from_map(counts.counts, n) / counts.total_shots
    return JointDistribution.from_tables(tables)


def from_probability_maps(maps: Mapping[Tuple[int, int], Mapping[str, float]],
                          n: int) -> JointDistribution:
    """Distribuição a partir de mapas bitstring -> probabilidade por setting"""
    tables = {}
    for setting in SETTING_PAIRS:
        if setting not in maps:
            raise DistributionError(f"Probabilidades ausentes para o setting {setting}")
        tables[setting] = _table_from_map(maps[setting], n)
    return JointDistribution.from_tables(tables)


def from_outcome_probabilities(probs_by_setting: Mapping[Tuple[int, int], np.ndarray],
                               n: int) -> JointDistribution:
    """Vetores densos indexados por a + d*b (saída de exact_probabilities)"""
    d = 2 ** n
    tables = {}
    for setting in SETTING_PAIRS:
        if setting not in probs_by_setting:
            raise DistributionError(f"Probabilidades ausentes para o setting {setting}")
        probs = np.asarray(probs_by_setting[setting], dtype=float)
        if probs.size != d * d:
            raise DistributionError(f"Vetor com {probs.size} entradas, esperado {d * d}")
        tables[setting] = probs.reshape(d, d).T
    return JointDistribution.from_tables(tables)


# =============================================================================
# FUNCIONAL ZG
# =============================================================================

def prob_ordered(dist: JointDistribution, x: int, y: int, strict: bool = True) -> float:
    """P(A_x < B_y) (ou <= quando strict=False)"""
    table = dist.table(x, y)
    return float(np.triu(table, k=1 if strict else 0).sum())


def izg(dist: JointDistribution) -> BellResult:
    """I_ZG = 1 - P(A1<B1) - P(A2<B2) + P(A2<B1) + P(A1<=B2)"""
    p11 = prob_ordered(dist, 1, 1, strict=True)
    p22 = prob_ordered(dist, 2, 2, strict=True)
    p21 = prob_ordered(dist, 2, 1, strict=True)
    p12 = prob_ordered(dist, 1, 2, strict=False)
    value = 1.0 - p11 - p22 + p21 + p12
    return BellResult(
        izg=value,
        i_d=izg_to_id(value, dist.d),
        p_a1_lt_b1=p11,
        p_a2_lt_b2=p22,
        p_a2_lt_b1=p21,
        p_a1_le_b2=p12,
    )


def zg_original_form(dist: JointDistribution) -> float:
    """
    P(A2<B2) + P(B2<A1) + P(A1<B1) + P(B1<=A2); vale 3 - I_ZG e é >= 1
    para modelos locais.
    """
    return (prob_ordered(dist, 2, 2)
            + float(np.tril(dist.table(1, 2), k=-1).sum())
            + prob_ordered(dist, 1, 1)
            + float(np.tril(dist.table(2, 1), k=0).sum()))


def izg_to_id(izg_value: float, d: int) -> float:
    """I_d - 2 = (2d / (d - 1)) (I_ZG - 2)"""
    if d < 2:
        raise DistributionError(f"d deve ser >= 2, recebeu {d}")
    return 2.0 + (2.0 * d / (d - 1)) * (izg_value - 2.0)


def id_to_izg(id_value: float, d: int) -> float:
    if d < 2:
        raise DistributionError(f"d deve ser >= 2, recebeu {d}")
    return 2.0 + ((d - 1) / (2.0 * d)) * (id_value - 2.0)


# =============================================================================
# FORMA COMPACTA CGLMP
# =============================================================================

def difference_distribution(dist: JointDistribution, x: int, y: int) -> np.ndarray:
    """P(A_x - B_y = k mod d) para k = 0..d-1"""
    d = dist.d
    diff = (np.arange(d)[:, None] - np.arange(d)[None, :]) % d
    return np.bincount(diff.ravel(), weights=dist.table(x, y).ravel(), minlength=d)


@lru_cache(maxsize=None)
def compact_coefficients(d: int) -> Dict[Tuple[int, int], np.ndarray]:
    """Coeficientes eps_xy(k) da forma compacta"""
    k = np.arange(d)
    scale = 2.0 / (d - 1)
    return {
        (1, 1): -scale * k,
        (2, 2): -scale * k,
        (2, 1): scale * k,
        (1, 2): scale * ((k - 1) % d),
    }


def _compact_sum(dist: JointDistribution) -> float:
    coeffs = compact_coefficients(dist.d)
    return float(sum(
        np.dot(coeffs[setting], difference_distribution(dist, *setting))
        for setting in SETTING_PAIRS
    ))


@lru_cache(maxsize=None)
def compact_offset(d: int) -> float:
    """
    Constante aditiva fixada pela distribuição delta (A = B sempre), em que
    I_d vale 2.
    """
    delta = np.zeros((2, 2, d, d))
    delta[:, :, 0, 0] = 1.0
    return 2.0 - _compact_sum(JointDistribution(d, delta))


def id_compact(dist: JointDistribution) -> float:
    """I_d = sum_xy sum_k eps_xy(k) P(A_x - B_y = k mod d) + constante"""
    return _compact_sum(dist) + compact_offset(dist.d)


def id_from_expectations(dist: JointDistribution) -> float:
    """
    I_d = -(2/(d-1)) E([A1-B1] + [A2-B2] - [A2-B1] - [A1-B2-1]), com [.]
    o resíduo mod d.
    """
    d = dist.d
    k = np.arange(d)

    def expect(x: int, y: int, shift: int = 0) -> float:
        return float(np.dot((k - shift) % d, difference_distribution(dist, x, y)))

    total = expect(1, 1) + expect(2, 2) - expect(2, 1) - expect(1, 2, shift=1)
    return -(2.0 / (d - 1)) * total


# =============================================================================
# DISTRIBUIÇÃO IDEAL
# =============================================================================

def ideal_distribution(d: int) -> JointDistribution:
    """
    Distribuição analítica do estado maximamente emaranhado com os settings
    CGLMP: p = sin^2(pi t) / (d^3 sin^2(pi t / d)), t = a - b + alpha_x + beta_y.
    """
    if d < 2:
        raise DistributionError(f"d deve ser >= 2, recebeu {d}")
    diff = np.arange(d)[:, None] - np.arange(d)[None, :]
    tables = {}
    for x, y in SETTING_PAIRS:
        t = diff + float(SETTING_ANGLES[('A', x)] + SETTING_ANGLES[('B', y)])
        tables[(x, y)] = np.sin(np.pi * t) ** 2 / (d ** 3 * np.sin(np.pi * t / d) ** 2)
    return JointDistribution.from_tables(tables)


# =============================================================================
# ANÁLISE POR PARES (CHSH)
# =============================================================================

def pairwise_marginal(counts_by_setting: Mapping[Tuple[int, int], OutcomeCounts],
                      i: int, j: int) -> PairwiseMarginal:
    """Marginal do dígito i de A e do dígito j de B (0-based) a partir das contagens"""
    tables = np.zeros((2, 2, 2, 2))
    for x, y in SETTING_PAIRS:
        if (x, y) not in counts_by_setting:
            raise DistributionError(f"Contagens ausentes para o setting {(x, y)}")
        counts = counts_by_setting[(x, y)]
        n = counts.num_bits // 2
        if not (0 <= i < n and 0 <= j < n):
            raise DistributionError(f"Par ({i}, {j}) fora do intervalo para n={n}")
        for bitstring, count in counts.counts.items():
            tables[x - 1, y - 1, int(bitstring[i]), int(bitstring[n + j])] += count
        tables[x - 1, y - 1] /= counts.total_shots
    return PairwiseMarginal((i, j), tables)


def pairwise_from_distribution(dist: JointDistribution, i: int, j: int) -> PairwiseMarginal:
    """Marginal do par (i, j) a partir de uma distribuição conjunta"""
    n = int(round(math.log2(dist.d)))
    if 2 ** n != dist.d or not (0 <= i < n and 0 <= j < n):
        raise DistributionError(f"Par ({i}, {j}) inválido para d={dist.d}")
    outcomes = np.arange(dist.d)
    select_a = np.array([((outcomes >> i) & 1) == bit for bit in (0, 1)], dtype=float)
    select_b = np.array([((outcomes >> j) & 1) == bit for bit in (0, 1)], dtype=float)
    tables = np.einsum('pa,xyab,qb->xypq', select_a, dist.tables, select_b)
    return PairwiseMarginal((i, j), tables)


def correlators(marginal: PairwiseMarginal) -> np.ndarray:
    """E_xy = sum (-1)^(alpha+beta) p(alpha, beta | x, y)"""
    signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return np.einsum('xyab,ab->xy', marginal.tables, signs)


def chsh_values(marginal: PairwiseMarginal) -> Dict[Tuple[int, int], float]:
    """|E11 + xi E12 + xi' E21 - xi xi' E22| para xi, xi' em {+1, -1}"""
    e = correlators(marginal)
    return {
        (xi, xj): abs(e[0, 0] + xi * e[0, 1] + xj * e[1, 0] - xi * xj * e[1, 1])
        for xi in (1, -1) for xj in (1, -1)
    }


def chsh_max(marginal: PairwiseMarginal) -> float:
    return max(chsh_values(marginal).values())


def fine_test(marginal: PairwiseMarginal) -> bool:
    """True quando o par admite modelo local (todas as CHSH <= 2)"""
    return chsh_max(marginal) <= CHSH_LHV_BOUND


# =============================================================================
# MODELOS LOCAIS
# =============================================================================

def local_deterministic_distribution(d: int, a_of_x: Sequence[int],
                                     b_of_y: Sequence[int]) -> JointDistribution:
    """Estratégia determinística: A responde a_of_x[x-1], B responde b_of_y[y-1]"""
    tables = np.zeros((2, 2, d, d))
    for x, y in SETTING_PAIRS:
        tables[x - 1, y - 1, a_of_x[x - 1], b_of_y[y - 1]] = 1.0
    return JointDistribution(d, tables)


def max_over_lhv_strategies(d: int) -> Tuple[float, float]:
    """Máximo de (I_ZG, I_d) sobre todas as d^4 estratégias determinísticas"""
    best_zg = best_id = -math.inf
    for a1, a2, b1, b2 in itertools.product(range(d), repeat=4):
        dist = local_deterministic_distribution(d, (a1, a2), (b1, b2))
        best_zg = max(best_zg, izg(dist).izg)
        best_id = max(best_id, id_compact(dist))
    logger.debug(f"d={d}: max I_ZG local = {best_zg}, max I_d local = {best_id}")
    return best_zg, best_id


def no_signaling_deviation(dist: JointDistribution) -> float:
    """Maior variação das marginais de uma parte com o setting da outra"""
    deviations = []
    for x in (1, 2):
        deviations.append(np.max(np.abs(dist.marginal_a(x, 1) - dist.marginal_a(x, 2))))
    for y in (1, 2):
        deviations.append(np.max(np.abs(dist.marginal_b(1, y) - dist.marginal_b(2, y))))
    return float(max(deviations))
