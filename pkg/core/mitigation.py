"""
===============================================================================
HDBellSim - Mitigação de Erros de Leitura
===============================================================================
Pasta: core/
Arquivo: core/mitigation.py
Descrição: Operador de confusão restrito às bitstrings observadas, solução
           iterativa (GMRES sem matriz densa) e projeção no simplex
===============================================================================
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from core.statevector import OutcomeCounts
from utils.constants import GMRES_RESTART, MITIGATION_ITERATION_FACTOR, MITIGATION_TOLERANCE

logger = logging.getLogger("Mitigation")

_ROW_CHUNK = 256


class MitigationError(RuntimeError):
    """Suporte vazio ou solver sem convergência"""
    pass


# =============================================================================
# OPERADOR DE CONFUSÃO
# =============================================================================

class ConfusionOperator:
    """
    A[s', s] = prod_pos M_pos[s'_pos, s_pos] restrito ao suporte observado.

    As matrizes por posição são coluna-estocásticas (M[observado, verdadeiro]).
    Com max_distance, entradas entre bitstrings a mais de max_distance flips
    de distância são descartadas.
    """

    def __init__(self, per_qubit: Sequence[np.ndarray], support: Sequence[str],
                 max_distance: Optional[int] = None):
        self.per_qubit = [np.asarray(m, dtype=float) for m in per_qubit]
        self.support = list(support)
        self.max_distance = max_distance
        self._bits = np.array([[int(ch) for ch in s] for s in self.support], dtype=np.int8)
        self._index = {s: i for i, s in enumerate(self.support)}

    @property
    def size(self) -> int:
        return len(self.support)

    def index_of(self, bitstring: str) -> int:
        return self._index[bitstring]

    def _block(self, rows: np.ndarray) -> np.ndarray:
        """Linhas `rows` de A como matriz densa (len(rows), K)"""
        out_bits = self._bits[rows]
        block = np.ones((len(rows), self.size))
        for pos, matrix in enumerate(self.per_qubit):
            block *= matrix[out_bits[:, pos][:, None], self._bits[:, pos][None, :]]
        if self.max_distance is not None:
            distance = (out_bits[:, None, :] != self._bits[None, :, :]).sum(axis=2)
            block[distance > self.max_distance] = 0.0
        return block

    def matvec(self, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector, dtype=float).reshape(-1)
        result = np.empty(self.size)
        for start in range(0, self.size, _ROW_CHUNK):
            rows = np.arange(start, min(self.size, start + _ROW_CHUNK))
            result[rows] = self._block(rows) @ vector
        return result

    def rmatvec(self, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector, dtype=float).reshape(-1)
        result = np.zeros(self.size)
        for start in range(0, self.size, _ROW_CHUNK):
            rows = np.arange(start, min(self.size, start + _ROW_CHUNK))
            result += vector[rows] @ self._block(rows)
        return result

    def to_dense(self) -> np.ndarray:
        return self._block(np.arange(self.size))

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator((self.size, self.size), matvec=self.matvec,
                              rmatvec=self.rmatvec, dtype=float)


def build_confusion(observed: Iterable[str], per_qubit: Sequence[np.ndarray],
                    max_distance: Optional[int] = None) -> ConfusionOperator:
    """
    Operador de confusão sobre as bitstrings observadas.

    Args:
        observed: Bitstrings observadas (suporte)
        per_qubit: Uma matriz 2x2 coluna-estocástica por posição da bitstring
        max_distance: Truncamento opcional por distância de Hamming
    """
    support = sorted(set(observed))
    if not support:
        raise MitigationError("Suporte vazio: nenhuma bitstring observada")
    width = len(per_qubit)
    for s in support:
        if len(s) != width or set(s) - {'0', '1'}:
            raise MitigationError(f"Bitstring '{s}' incompatível com {width} posições")
    for pos, matrix in enumerate(per_qubit):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (2, 2) or np.any(matrix < 0):
            raise MitigationError(f"Matriz de confusão inválida na posição {pos}")
        if np.any(np.abs(matrix.sum(axis=0) - 1.0) > 1e-12):
            raise MitigationError(f"Colunas da matriz na posição {pos} não somam 1")
    if max_distance is not None and max_distance < 0:
        raise MitigationError(f"max_distance negativo: {max_distance}")
    return ConfusionOperator(per_qubit, support, max_distance)


# =============================================================================
# SOLVER
# =============================================================================

@dataclass
class MitigationResult:
    """Quase-probabilidades mitigadas e diagnósticos do solver"""
    support: List[str]
    quasi: np.ndarray
    residual_norm: float
    iterations: int
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, float]:
        return {s: float(q) for s, q in zip(self.support, self.quasi)}

    @property
    def negativity(self) -> float:
        return float(-self.quasi[self.quasi < 0].sum())


def mitigate_probabilities(probabilities: Mapping[str, float], confusion: ConfusionOperator,
                           tol: float = MITIGATION_TOLERANCE,
                           max_iterations: Optional[int] = None) -> MitigationResult:
    """Resolve A q = p sobre o suporte do operador"""
    missing = set(probabilities) - set(confusion.support)
    if missing:
        raise MitigationError(f"{len(missing)} bitstrings fora do suporte do operador")
    p_hat = np.zeros(confusion.size)
    for s, value in probabilities.items():
        p_hat[confusion.index_of(s)] = value

    k = confusion.size
    cap = max_iterations if max_iterations is not None else MITIGATION_ITERATION_FACTOR * k
    restart = min(k, GMRES_RESTART)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    solution, info = gmres(confusion.as_linear_operator(), p_hat, x0=p_hat.copy(),
                           rtol=tol, atol=0.0, restart=restart,
                           maxiter=max(1, -(-cap // restart)),
                           callback=count, callback_type='pr_norm')
    residual = float(np.linalg.norm(confusion.matvec(solution) - p_hat))
    if info != 0:
        raise MitigationError(
            f"GMRES não convergiu (info={info}, resíduo {residual:.3e}); "
            f"matriz de confusão mal condicionada?")

    logger.debug(f"GMRES: {iterations} iterações, resíduo {residual:.3e} em {k} bitstrings")
    return MitigationResult(confusion.support, solution, residual, iterations)


def mitigate(counts: OutcomeCounts, confusion: ConfusionOperator,
             tol: float = MITIGATION_TOLERANCE,
             max_iterations: Optional[int] = None) -> MitigationResult:
    """Quase-probabilidades a partir das frequências observadas"""
    if counts.total_shots < 1:
        raise MitigationError("Contagens vazias")
    return mitigate_probabilities(counts.probabilities(), confusion, tol, max_iterations)


# =============================================================================
# PROJEÇÃO
# =============================================================================

def simplex_project(quasi: np.ndarray) -> np.ndarray:
    """Projeção euclidiana no simplex de probabilidades (algoritmo por ordenação)"""
    v = np.asarray(quasi, dtype=float).reshape(-1)
    if v.size == 0:
        return v.copy()
    if not np.all(np.isfinite(v)):
        raise ValueError("Vetor com entradas não finitas")
    if np.all(v >= 0.0) and abs(v.sum() - 1.0) <= 1e-15:
        return v.copy()

    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    cond = u - cssv / ind > 0
    rho = ind[cond][-1]
    theta = cssv[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


def mitigate_counts(counts: OutcomeCounts, confusion: ConfusionOperator,
                    tol: float = MITIGATION_TOLERANCE) -> Dict:
    """
    Pipeline completo: mitigação, projeção no simplex e diagnósticos.
    Retorna {'probabilities': mapa bitstring -> prob, 'diagnostics': {...}}.
    """
    result = mitigate(counts, confusion, tol)
    projected = simplex_project(result.quasi)
    diagnostics = {
        'support_size': confusion.size,
        'residual_norm': result.residual_norm,
        'iterations': result.iterations,
        'negativity_mass': result.negativity,
        'projection_distance': float(np.linalg.norm(projected - result.quasi)),
    }
    return {
        'probabilities': {s: float(p) for s, p in zip(result.support, projected) if p > 0.0},
        'diagnostics': diagnostics,
    }
