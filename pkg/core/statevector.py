"""
===============================================================================
HDBellSim - Simulador de Vetor de Estado
===============================================================================
Pasta: core/
Arquivo: core/statevector.py
Descrição: Simulação exata e amostrada de circuitos com medição no meio do
           circuito (colapso) e fases condicionadas a bits clássicos
===============================================================================
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from utils.constants import (
    BATCH_AMPLITUDE_BUDGET,
    BRANCH_PRUNE_THRESHOLD,
    DEFAULT_BRANCH_CAP,
    MAX_EXACT_MEASUREMENTS,
    MAX_QUBITS_PERMITTED,
    NORM_DRIFT_ERROR,
    NORM_DRIFT_WARNING,
    NORM_TOLERANCE,
)

logger = logging.getLogger("StateVector")


# =============================================================================
# EXCEÇÕES
# =============================================================================

class SimulationError(Exception):
    """Erro base do simulador"""
    pass


class QubitIndexError(SimulationError, IndexError):
    """Índice de qubit fora do intervalo ou repetido"""
    pass


class ClassicalBitError(SimulationError):
    """Bit clássico inválido ou lido antes de ser escrito"""
    pass


class NormDriftError(SimulationError):
    """Deriva de norma após operação unitária (bug de kernel)"""
    pass


class BranchLimitError(SimulationError):
    """Enumeração de ramos excedeu o limite configurado"""
    pass


# =============================================================================
# INSTRUÇÕES E CIRCUITOS
# =============================================================================

class GateKind(Enum):
    """Tipos de instrução suportados"""
    H = "H"
    X = "X"
    RY = "RY"
    PHASE = "P"
    CPHASE = "CP"
    CNOT = "CX"
    MEASURE = "MEASURE"
    COND_PHASE = "CP_IF"


ONE_QUBIT_GATES = frozenset({GateKind.H, GateKind.X, GateKind.RY, GateKind.PHASE})
TWO_QUBIT_GATES = frozenset({GateKind.CPHASE, GateKind.CNOT})

_ARITY = {
    GateKind.H: 1,
    GateKind.X: 1,
    GateKind.RY: 1,
    GateKind.PHASE: 1,
    GateKind.CPHASE: 2,
    GateKind.CNOT: 2,
    GateKind.MEASURE: 1,
    GateKind.COND_PHASE: 1,
}


@dataclass(frozen=True)
class Instruction:
    """
    Uma instrução do circuito.

    Para CPHASE e CNOT, qubits = (controle, alvo). MEASURE escreve em
    `clbit`; COND_PHASE lê `clbit` e aplica a fase `angle` se ele for 1.
    """
    kind: GateKind
    qubits: Tuple[int, ...]
    angle: float = 0.0
    clbit: Optional[int] = None

    # Construtores de conveniência
    @classmethod
    def h(cls, q: int) -> 'Instruction':
        return cls(GateKind.H, (q,))

    @classmethod
    def x(cls, q: int) -> 'Instruction':
        return cls(GateKind.X, (q,))

    @classmethod
    def ry(cls, q: int, theta: float) -> 'Instruction':
        return cls(GateKind.RY, (q,), float(theta))

    @classmethod
    def phase(cls, q: int, phi: float) -> 'Instruction':
        return cls(GateKind.PHASE, (q,), float(phi))

    @classmethod
    def cphase(cls, control: int, target: int, phi: float) -> 'Instruction':
        return cls(GateKind.CPHASE, (control, target), float(phi))

    @classmethod
    def cnot(cls, control: int, target: int) -> 'Instruction':
        return cls(GateKind.CNOT, (control, target))

    @classmethod
    def measure(cls, q: int, clbit: int) -> 'Instruction':
        return cls(GateKind.MEASURE, (q,), 0.0, clbit)

    @classmethod
    def cond_phase(cls, target: int, phi: float, clbit: int) -> 'Instruction':
        return cls(GateKind.COND_PHASE, (target,), float(phi), clbit)

    @property
    def is_measurement(self) -> bool:
        return self.kind is GateKind.MEASURE

    @property
    def is_conditioned(self) -> bool:
        return self.kind is GateKind.COND_PHASE

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT_GATES

    def __str__(self) -> str:
        args = " ".join(str(q) for q in self.qubits)
        if self.kind in (GateKind.RY, GateKind.PHASE, GateKind.CPHASE, GateKind.COND_PHASE):
            args += f" {self.angle:.6g}"
        if self.clbit is not None:
            args += f" c{self.clbit}"
        return f"{self.kind.value} {args}"


def validate_instruction(instr: Instruction, num_qubits: int, num_clbits: int):
    """Valida índices de qubits e bits clássicos de uma instrução"""
    expected = _ARITY[instr.kind]
    if len(instr.qubits) != expected:
        raise QubitIndexError(
            f"{instr.kind.value} espera {expected} qubit(s), recebeu {len(instr.qubits)}")
    for q in instr.qubits:
        if not 0 <= q < num_qubits:
            raise QubitIndexError(f"Qubit {q} fora do intervalo [0, {num_qubits})")
    if len(set(instr.qubits)) != len(instr.qubits):
        raise QubitIndexError(f"Qubits repetidos em {instr}")
    if instr.kind in (GateKind.MEASURE, GateKind.COND_PHASE):
        if instr.clbit is None or not 0 <= instr.clbit < num_clbits:
            raise ClassicalBitError(
                f"Bit clássico {instr.clbit} fora do intervalo [0, {num_clbits})")
    if not np.isfinite(instr.angle):
        raise ValueError(f"Ângulo não finito em {instr}")


@dataclass(frozen=True)
class Circuit:
    """
    Circuito imutável: lista ordenada de instruções e mapa de leitura final.

    final_measurement_map contém pares (qubit, posição); as posições formam
    exatamente 0..P-1 e definem a ordem dos caracteres da bitstring.
    """
    num_qubits: int
    num_classical_bits: int
    instructions: Tuple[Instruction, ...]
    final_measurement_map: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, 'instructions', tuple(self.instructions))
        object.__setattr__(self, 'final_measurement_map',
                           tuple((int(q), int(p)) for q, p in self.final_measurement_map))
        self._validate()

    def _validate(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS_PERMITTED:
            raise QubitIndexError(
                f"Número de qubits {self.num_qubits} fora de [1, {MAX_QUBITS_PERMITTED}]")
        if self.num_classical_bits < 0:
            raise ClassicalBitError("Número de bits clássicos negativo")

        written = set()
        for instr in self.instructions:
            validate_instruction(instr, self.num_qubits, self.num_classical_bits)
            if instr.is_conditioned and instr.clbit not in written:
                raise ClassicalBitError(
                    f"Bit c{instr.clbit} lido por {instr} antes de qualquer medição")
            if instr.is_measurement:
                written.add(instr.clbit)

        qubits = [q for q, _ in self.final_measurement_map]
        positions = sorted(p for _, p in self.final_measurement_map)
        for q in qubits:
            if not 0 <= q < self.num_qubits:
                raise QubitIndexError(f"Qubit {q} do mapa final fora do intervalo")
        if len(set(qubits)) != len(qubits):
            raise QubitIndexError("Qubit medido mais de uma vez na leitura final")
        if positions != list(range(len(positions))):
            raise ValueError("Posições do mapa final devem formar 0..P-1")

    @property
    def num_outcome_bits(self) -> int:
        return len(self.final_measurement_map)

    @property
    def num_measurements(self) -> int:
        return sum(1 for instr in self.instructions if instr.is_measurement)

    @property
    def has_mid_circuit_measurement(self) -> bool:
        return self.num_measurements > 0

    @cached_property
    def final_readout_sources(self) -> Tuple[Tuple[int, int, Optional[int]], ...]:
        """
        (qubit, posição, bit clássico) para cada leitura final.

        Quando o qubit já foi medido no meio do circuito e nada o tocou
        depois, a leitura reutiliza o bit clássico registrado.
        """
        last_clbit: Dict[int, Optional[int]] = {}
        for instr in self.instructions:
            for q in instr.qubits:
                last_clbit[q] = instr.clbit if instr.is_measurement else None
        return tuple(
            (q, pos, last_clbit.get(q))
            for q, pos in self.final_measurement_map
        )

    @property
    def pending_readout_qubits(self) -> List[int]:
        """Qubits que ainda precisam de leitura física no final"""
        return [q for q, _, c in self.final_readout_sources if c is None]


# =============================================================================
# ESTADOS
# =============================================================================

@dataclass
class StateVector:
    """Vetor de estado de num_qubits qubits (qubit q tem peso 2^q no índice)"""
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2 ** self.num_qubits,):
            raise ValueError(
                f"Vetor de estado deve ter 2^{self.num_qubits} amplitudes, "
                f"recebeu {self.amplitudes.shape}")

    @classmethod
    def zero(cls, num_qubits: int) -> 'StateVector':
        amps = np.zeros(2 ** num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> 'StateVector':
        amps = np.zeros(2 ** num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> 'StateVector':
        return StateVector(self.num_qubits, self.amplitudes.copy())


def new_classical_bits(num_clbits: int) -> np.ndarray:
    """Registrador clássico vazio (-1 marca bit ainda não escrito)"""
    return np.full(num_clbits, -1, dtype=np.int8)


@dataclass
class OutcomeCounts:
    """Contagens de bitstrings finais"""
    counts: Dict[str, int]
    total_shots: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("Contagens negativas")
        if sum(self.counts.values()) != self.total_shots:
            raise ValueError(
                f"Soma das contagens ({sum(self.counts.values())}) "
                f"difere de total_shots ({self.total_shots})")
        lengths = {len(s) for s in self.counts}
        if len(lengths) > 1:
            raise ValueError("Bitstrings com comprimentos diferentes")

    @property
    def num_bits(self) -> int:
        return len(next(iter(self.counts))) if self.counts else 0

    def probabilities(self) -> Dict[str, float]:
        return {s: c / self.total_shots for s, c in self.counts.items()}

    def most_common(self, k: int = 1) -> List[Tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]

    def to_dict(self) -> Dict[str, int]:
        return dict(sorted(self.counts.items()))

    @classmethod
    def from_dict(cls, counts: Mapping[str, int]) -> 'OutcomeCounts':
        counts = {str(s): int(c) for s, c in counts.items()}
        return cls(counts, sum(counts.values()))


def format_bitstring(value: int, num_bits: int) -> str:
    """Inteiro de outcome -> bitstring na ordem das posições"""
    return "".join(str((value >> pos) & 1) for pos in range(num_bits))


def parse_bitstring(bitstring: str) -> int:
    """Bitstring na ordem das posições -> inteiro de outcome"""
    return sum(1 << pos for pos, ch in enumerate(bitstring) if ch == '1')


# =============================================================================
# ALEATORIEDADE POR SHOT
# =============================================================================

# Colunas do bloco de sorteios de cada linha (instrução ou leitura final)
COL_COLLAPSE = 0        # medição intermediária / amostragem final
COL_GATE_ERROR = 1      # ocorrência de erro de porta
COL_PAULI = 2           # escolha da Pauli
COL_READOUT = 3         # flip de leitura da medição intermediária
COL_IDLE = 4            # N colunas de defasagem ociosa, depois N de leitura final


def row_width(num_qubits: int) -> int:
    return COL_IDLE + 2 * num_qubits


class ShotStream:
    """
    Fluxo aleatório baseado em contador (Philox) chaveado por (seed, shot).

    O bloco de sorteios tem uma linha por instrução, endereçada pelo índice
    da instrução, e uma linha final para a leitura.
    """

    def __init__(self, seed: int, shot: int):
        self.seed = int(seed)
        self.shot = int(shot)
        self._key = np.random.SeedSequence([self.seed, self.shot]).generate_state(2, dtype=np.uint64)

    def block(self, rows: int, width: int) -> np.ndarray:
        generator = np.random.Generator(np.random.Philox(key=self._key))
        return generator.random((rows, width))

    def draws_for(self, circuit: Circuit) -> np.ndarray:
        return self.block(len(circuit.instructions) + 1, row_width(circuit.num_qubits))


# =============================================================================
# KERNELS (LOTE DE TRAJETÓRIAS)
# =============================================================================

_SQRT_HALF = np.sqrt(0.5)
_H = np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)

PAULI_MATRICES = {'X': _X, 'Y': _Y}


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


class StateBatch:
    """
    Lote de B vetores de estado evoluídos juntos.

    Cada linha é uma trajetória (amostragem, linhas normalizadas) ou um ramo
    de medição (enumeração exata, linhas com peso igual à probabilidade do
    ramo). `weights` guarda a norma² esperada de cada linha.
    """

    def __init__(self, num_qubits: int, amplitudes: np.ndarray,
                 classical_bits: np.ndarray, weights: np.ndarray):
        self.num_qubits = num_qubits
        self.amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        self.classical_bits = classical_bits
        self.weights = weights

    @classmethod
    def zeros(cls, num_qubits: int, batch_size: int, num_clbits: int) -> 'StateBatch':
        amps = np.zeros((batch_size, 2 ** num_qubits), dtype=np.complex128)
        amps[:, 0] = 1.0
        bits = np.full((batch_size, num_clbits), -1, dtype=np.int8)
        return cls(num_qubits, amps, bits, np.ones(batch_size))

    @classmethod
    def from_state(cls, state: StateVector, classical_bits: np.ndarray) -> 'StateBatch':
        bits = np.asarray(classical_bits, dtype=np.int8).reshape(1, -1).copy()
        return cls(state.num_qubits, state.amplitudes.reshape(1, -1).copy(), bits,
                   np.array([state.norm_squared()]))

    @property
    def size(self) -> int:
        return self.amplitudes.shape[0]

    def take(self, rows) -> 'StateBatch':
        return StateBatch(self.num_qubits, self.amplitudes[rows].copy(),
                          self.classical_bits[rows].copy(), self.weights[rows].copy())

    # -------------------------------------------------------------------------
    # Visões
    # -------------------------------------------------------------------------

    def _view(self, q: int) -> np.ndarray:
        """Visão (B, alto, 2, baixo) com o bit do qubit q no eixo 2"""
        return self.amplitudes.reshape(self.size, 2 ** (self.num_qubits - 1 - q), 2, 2 ** q)

    def _pair_view(self, q1: int, q2: int) -> Tuple[np.ndarray, bool]:
        """Visão 6D com o qubit mais alto no eixo 2 e o mais baixo no eixo 4"""
        hi, lo = max(q1, q2), min(q1, q2)
        view = self.amplitudes.reshape(
            self.size, 2 ** (self.num_qubits - 1 - hi), 2, 2 ** (hi - lo - 1), 2, 2 ** lo)
        return view, q1 == hi

    @staticmethod
    def _pair_index(bit1: int, bit2: int, first_is_hi: bool) -> tuple:
        hi_bit, lo_bit = (bit1, bit2) if first_is_hi else (bit2, bit1)
        return (slice(None), slice(None), hi_bit, slice(None), lo_bit, slice(None))

    # -------------------------------------------------------------------------
    # Portas
    # -------------------------------------------------------------------------

    def apply_matrix(self, q: int, matrix: np.ndarray, rows: Optional[np.ndarray] = None):
        """Aplica uma matriz 2x2 ao qubit q (em todas as linhas ou num subconjunto)"""
        view = self._view(q)
        if rows is None:
            a0 = view[:, :, 0, :].copy()
            a1 = view[:, :, 1, :]
            view[:, :, 0, :] = matrix[0, 0] * a0 + matrix[0, 1] * a1
            view[:, :, 1, :] = matrix[1, 0] * a0 + matrix[1, 1] * a1
            return
        sub = view[rows]
        a0 = sub[:, :, 0, :].copy()
        a1 = sub[:, :, 1, :].copy()
        sub[:, :, 0, :] = matrix[0, 0] * a0 + matrix[0, 1] * a1
        sub[:, :, 1, :] = matrix[1, 0] * a0 + matrix[1, 1] * a1
        view[rows] = sub

    def apply_phase(self, q: int, phase) -> None:
        """Multiplica a componente |1> do qubit q por `phase` (escalar ou vetor (B,))"""
        phase = np.asarray(phase)
        if phase.ndim == 1:
            phase = phase[:, None, None]
        self._view(q)[:, :, 1, :] *= phase

    def apply_cphase(self, control: int, target: int, phi: float):
        view, first_is_hi = self._pair_view(control, target)
        view[self._pair_index(1, 1, first_is_hi)] *= np.exp(1j * phi)

    def apply_cnot(self, control: int, target: int):
        view, first_is_hi = self._pair_view(control, target)
        i10 = self._pair_index(1, 0, first_is_hi)
        i11 = self._pair_index(1, 1, first_is_hi)
        tmp = view[i10].copy()
        view[i10] = view[i11]
        view[i11] = tmp

    def apply_pauli(self, label: str, q: int, rows: np.ndarray):
        """Aplica X, Y ou Z ao qubit q nas linhas indicadas (máscara booleana)"""
        if not np.any(rows):
            return
        if label == 'Z':
            self.apply_phase(q, np.where(rows, -1.0, 1.0))
        elif label in PAULI_MATRICES:
            self.apply_matrix(q, PAULI_MATRICES[label], np.nonzero(rows)[0])
        elif label != 'I':
            raise ValueError(f"Pauli desconhecida: {label}")

    # -------------------------------------------------------------------------
    # Medição
    # -------------------------------------------------------------------------

    def measure(self, q: int, clbit: int, draws: np.ndarray,
                readout: Optional[Tuple[float, float]] = None,
                flip_draws: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Mede o qubit q em todas as linhas (amostragem), colapsa e renormaliza.

        Retorna os bits verdadeiros; o bit registrado recebe o flip de
        leitura quando `readout` = (eps01, eps10) é fornecido.
        """
        view = self._view(q)
        p1 = np.sum(np.abs(view[:, :, 1, :]) ** 2, axis=(1, 2)) / self.weights
        bits = (draws < p1).astype(np.int8)
        chosen = np.where(bits == 1, p1, 1.0 - p1)
        if np.any(chosen <= 0.0):
            raise SimulationError(f"Resultado de probabilidade nula sorteado no qubit {q}")

        view[:, :, 0, :] *= (bits == 0)[:, None, None]
        view[:, :, 1, :] *= (bits == 1)[:, None, None]
        self.amplitudes /= np.sqrt(chosen)[:, None]
        self.weights = np.ones(self.size)

        recorded = bits
        if readout is not None and flip_draws is not None:
            eps = np.where(bits == 1, readout[1], readout[0])
            recorded = bits ^ (flip_draws < eps).astype(np.int8)
        self.classical_bits[:, clbit] = recorded
        return bits

    def branch(self, q: int, clbit: int, prune_threshold: float) -> 'StateBatch':
        """Divide cada linha nos dois ramos de medição do qubit q (sem renormalizar)"""
        zero = self.amplitudes.copy()
        one = self.amplitudes.copy()
        shape = (self.size, 2 ** (self.num_qubits - 1 - q), 2, 2 ** q)
        zero.reshape(shape)[:, :, 1, :] = 0.0
        one.reshape(shape)[:, :, 0, :] = 0.0

        amps = np.concatenate([zero, one])
        bits = np.concatenate([self.classical_bits, self.classical_bits])
        bits[:self.size, clbit] = 0
        bits[self.size:, clbit] = 1
        weights = np.sum(np.abs(amps) ** 2, axis=1)

        keep = weights >= prune_threshold
        return StateBatch(self.num_qubits, amps[keep], bits[keep], weights[keep])

    # -------------------------------------------------------------------------
    # Execução
    # -------------------------------------------------------------------------

    def apply(self, instr: Instruction, draws: Optional[np.ndarray] = None,
              readout: Optional[Tuple[float, float]] = None,
              check_norm: bool = True) -> np.ndarray:
        """
        Executa uma instrução em todas as linhas.

        `draws` é a linha de sorteios (B, largura) da instrução. Retorna a
        máscara das linhas onde a instrução teve efeito.
        """
        kind = instr.kind
        executed = np.ones(self.size, dtype=bool)

        if kind is GateKind.H:
            self.apply_matrix(instr.qubits[0], _H)
        elif kind is GateKind.X:
            self.apply_matrix(instr.qubits[0], _X)
        elif kind is GateKind.RY:
            self.apply_matrix(instr.qubits[0], ry_matrix(instr.angle))
        elif kind is GateKind.PHASE:
            self.apply_phase(instr.qubits[0], np.exp(1j * instr.angle))
        elif kind is GateKind.CPHASE:
            self.apply_cphase(instr.qubits[0], instr.qubits[1], instr.angle)
        elif kind is GateKind.CNOT:
            self.apply_cnot(instr.qubits[0], instr.qubits[1])
        elif kind is GateKind.COND_PHASE:
            bits = self.classical_bits[:, instr.clbit]
            if np.any(bits < 0):
                raise ClassicalBitError(f"Bit c{instr.clbit} lido antes de ser escrito")
            executed = bits == 1
            self.apply_phase(instr.qubits[0], np.where(executed, np.exp(1j * instr.angle), 1.0))
        elif kind is GateKind.MEASURE:
            if draws is None:
                raise ValueError("Medição requer um fluxo aleatório")
            flip_draws = draws[:, COL_READOUT] if readout is not None else None
            self.measure(instr.qubits[0], instr.clbit, draws[:, COL_COLLAPSE],
                         readout, flip_draws)
            return executed
        else:
            raise SimulationError(f"Instrução desconhecida: {kind}")

        if check_norm:
            self.check_norm(instr)
        return executed

    def check_norm(self, instr: Optional[Instruction] = None):
        norms = np.sum(np.abs(self.amplitudes) ** 2, axis=1)
        drift = float(np.max(np.abs(norms / self.weights - 1.0))) if self.size else 0.0
        if drift > NORM_DRIFT_ERROR:
            raise NormDriftError(f"Deriva de norma {drift:.3e} após {instr}")
        if drift > NORM_DRIFT_WARNING:
            logger.debug(f"Deriva de norma {drift:.3e} após {instr}")

    def sample_final(self, circuit: Circuit, draws: np.ndarray) -> np.ndarray:
        """
        Amostra a leitura final (inversa da CDF sobre o estado completo).

        Retorna bits (B, P) na ordem das posições.
        """
        probs = np.abs(self.amplitudes) ** 2
        cdf = np.cumsum(probs, axis=1)
        targets = draws * cdf[:, -1]
        indices = np.minimum((cdf < targets[:, None]).sum(axis=1), cdf.shape[1] - 1)
        return assemble_outcome_bits(circuit, indices, self.classical_bits)


def assemble_outcome_bits(circuit: Circuit, indices: np.ndarray,
                          classical_bits: Optional[np.ndarray] = None) -> np.ndarray:
    """Bits (B, P) a partir dos índices de base amostrados e dos bits clássicos"""
    bits = np.zeros((len(indices), circuit.num_outcome_bits), dtype=np.int8)
    for q, pos, clbit in circuit.final_readout_sources:
        if clbit is None:
            bits[:, pos] = (indices >> q) & 1
        else:
            bits[:, pos] = classical_bits[:, clbit]
    return bits


# =============================================================================
# INJEÇÃO DE RUÍDO (interface)
# =============================================================================

class TrajectoryNoise:
    """
    Ganchos chamados durante a execução das trajetórias.
    A implementação sem ruído não altera nada; ver core/noise.py.
    """

    def before_instruction(self, index: int, instr: Instruction,
                           batch: StateBatch, draws: np.ndarray):
        pass

    def after_instruction(self, index: int, instr: Instruction, batch: StateBatch,
                          draws: np.ndarray, executed: np.ndarray):
        pass

    def measurement_readout(self, qubit: int) -> Optional[Tuple[float, float]]:
        return None

    def before_final_readout(self, batch: StateBatch, draws: np.ndarray):
        pass

    def final_readout_flips(self, bits: np.ndarray, draws: np.ndarray) -> np.ndarray:
        return bits


# =============================================================================
# MOTOR
# =============================================================================

class StateVectorEngine:
    """
    Executa circuitos: shots individuais, contagens em lote e distribuição
    exata por enumeração de ramos.
    """

    def __init__(self, branch_cap: int = DEFAULT_BRANCH_CAP,
                 prune_threshold: float = BRANCH_PRUNE_THRESHOLD,
                 amplitude_budget: int = BATCH_AMPLITUDE_BUDGET):
        self.branch_cap = branch_cap
        self.prune_threshold = prune_threshold
        self.amplitude_budget = amplitude_budget

    # -------------------------------------------------------------------------
    # Trajetórias
    # -------------------------------------------------------------------------

    def run_trajectories(self, circuit: Circuit, draws: Optional[np.ndarray],
                         noise: Optional[TrajectoryNoise] = None) -> np.ndarray:
        """
        Executa um lote de trajetórias com sorteios (B, L+1, largura).
        Retorna os bits finais (B, P).
        """
        if draws is None:
            raise ValueError("Execução de trajetórias requer um fluxo aleatório")
        batch = StateBatch.zeros(circuit.num_qubits, draws.shape[0], circuit.num_classical_bits)
        last = len(circuit.instructions)

        for i, instr in enumerate(circuit.instructions):
            row = draws[:, i, :]
            if noise is not None:
                noise.before_instruction(i, instr, batch, row)
            readout = None
            if instr.is_measurement and noise is not None:
                readout = noise.measurement_readout(instr.qubits[0])
            executed = batch.apply(instr, row, readout)
            if noise is not None:
                noise.after_instruction(i, instr, batch, row, executed)

        final_row = draws[:, last, :]
        if noise is not None:
            noise.before_final_readout(batch, final_row)
        bits = batch.sample_final(circuit, final_row[:, COL_COLLAPSE])
        if noise is not None:
            bits = noise.final_readout_flips(bits, final_row)
        return bits

    def final_state(self, circuit: Circuit) -> StateVector:
        """Estado final de um circuito sem medições intermediárias"""
        if circuit.has_mid_circuit_measurement:
            raise SimulationError("final_state exige circuito sem medições intermediárias")
        batch = StateBatch.zeros(circuit.num_qubits, 1, circuit.num_classical_bits)
        for instr in circuit.instructions:
            batch.apply(instr)
        return StateVector(circuit.num_qubits, batch.amplitudes[0])

    def run_shot(self, circuit: Circuit, rng: ShotStream,
                 noise: Optional[TrajectoryNoise] = None) -> str:
        draws = rng.draws_for(circuit)[None, :, :]
        bits = self.run_trajectories(circuit, draws, noise)
        return "".join(str(int(b)) for b in bits[0])

    def sample_bits(self, circuit: Circuit, shots: int, seed: int,
                    noise: Optional[TrajectoryNoise] = None,
                    workers: int = 1) -> np.ndarray:
        """Bits finais (shots, P); o shot i usa ShotStream(seed, i)"""
        if shots < 1:
            raise ValueError(f"shots deve ser >= 1, recebeu {shots}")

        rows = len(circuit.instructions) + 1
        width = row_width(circuit.num_qubits)

        if noise is None and not circuit.has_mid_circuit_measurement:
            return self._sample_unitary(circuit, shots, seed)

        chunk = max(1, self.amplitude_budget // (2 ** circuit.num_qubits))
        starts = list(range(0, shots, chunk))

        def run_chunk(start: int) -> np.ndarray:
            stop = min(shots, start + chunk)
            draws = np.stack([ShotStream(seed, s).block(rows, width) for s in range(start, stop)])
            return self.run_trajectories(circuit, draws, noise)

        if workers > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(run_chunk, starts))
        else:
            parts = [run_chunk(s) for s in starts]
        return np.concatenate(parts)

    def _sample_unitary(self, circuit: Circuit, shots: int, seed: int) -> np.ndarray:
        """Caminho rápido: estado calculado uma vez, um sorteio por shot"""
        batch = StateBatch.zeros(circuit.num_qubits, 1, circuit.num_classical_bits)
        for instr in circuit.instructions:
            batch.apply(instr)
        cdf = np.cumsum(np.abs(batch.amplitudes) ** 2, axis=1)[0]

        rows = len(circuit.instructions) + 1
        width = row_width(circuit.num_qubits)
        draws = np.array([ShotStream(seed, s).block(rows, width)[rows - 1, COL_COLLAPSE]
                          for s in range(shots)])
        indices = np.minimum(np.searchsorted(cdf, draws * cdf[-1], side='left'), cdf.size - 1)
        return assemble_outcome_bits(circuit, indices)

    def sample_counts(self, circuit: Circuit, shots: int, seed: int,
                      noise: Optional[TrajectoryNoise] = None,
                      workers: int = 1) -> OutcomeCounts:
        bits = self.sample_bits(circuit, shots, seed, noise, workers)
        return counts_from_bits(bits)

    # -------------------------------------------------------------------------
    # Distribuição exata
    # -------------------------------------------------------------------------

    def exact_probabilities(self, circuit: Circuit) -> np.ndarray:
        """Vetor denso de probabilidades indexado pelo inteiro do outcome"""
        if circuit.num_measurements > MAX_EXACT_MEASUREMENTS:
            raise BranchLimitError(
                f"{circuit.num_measurements} medições intermediárias excedem o "
                f"máximo de {MAX_EXACT_MEASUREMENTS}")

        dim = 2 ** circuit.num_qubits
        total = np.zeros(dim)
        created = 1
        stack = [(StateBatch.zeros(circuit.num_qubits, 1, circuit.num_classical_bits), 0)]

        while stack:
            batch, start = stack.pop()
            for i in range(start, len(circuit.instructions)):
                instr = circuit.instructions[i]
                if not instr.is_measurement:
                    batch.apply(instr)
                    continue
                before = batch.size
                batch = batch.branch(instr.qubits[0], instr.clbit, self.prune_threshold)
                created += batch.size - before
                if created > self.branch_cap:
                    raise BranchLimitError(
                        f"Mais de {self.branch_cap} ramos na enumeração exata")
                if batch.size * dim > self.amplitude_budget and batch.size > 1:
                    half = batch.size // 2
                    stack.append((batch.take(slice(half, None)), i + 1))
                    batch = batch.take(slice(0, half))
            total += np.sum(np.abs(batch.amplitudes) ** 2, axis=0)

        mass = total.sum()
        if abs(mass - 1.0) > NORM_TOLERANCE:
            logger.warning(f"⚠️ Massa total {mass:.12f} após poda de ramos")
        logger.debug(f"Enumeração exata concluída com {created} ramos")
        return outcome_marginal(total, circuit)

    def exact_distribution(self, circuit: Circuit) -> Dict[str, float]:
        probs = self.exact_probabilities(circuit)
        width = circuit.num_outcome_bits
        return {
            format_bitstring(idx, width): float(p)
            for idx, p in enumerate(probs) if p > 0.0
        }


def outcome_marginal(probs: np.ndarray, circuit: Circuit) -> np.ndarray:
    """
    Marginaliza probabilidades sobre a base computacional para o vetor
    indexado pelo inteiro do outcome (posição i com peso 2^i).
    """
    n = circuit.num_qubits
    pos_of = dict(circuit.final_measurement_map)
    tensor = probs.reshape([2] * n)     # eixo k corresponde ao qubit n-1-k

    unmeasured = tuple(n - 1 - q for q in range(n) if q not in pos_of)
    if unmeasured:
        tensor = tensor.sum(axis=unmeasured)
    if not pos_of:
        return np.array([float(np.sum(tensor))])

    remaining = [q for q in reversed(range(n)) if q in pos_of]
    order = sorted(range(len(remaining)), key=lambda k: -pos_of[remaining[k]])
    return np.ascontiguousarray(np.transpose(tensor, order)).reshape(-1)


def counts_from_bits(bits: np.ndarray) -> OutcomeCounts:
    """Agrupa bits (shots, P) em OutcomeCounts"""
    shots, width = bits.shape
    weights = (1 << np.arange(width, dtype=np.int64))
    values = bits.astype(np.int64) @ weights
    unique, counts = np.unique(values, return_counts=True)
    return OutcomeCounts(
        {format_bitstring(int(v), width): int(c) for v, c in zip(unique, counts)},
        int(shots),
    )


# =============================================================================
# API FUNCIONAL
# =============================================================================

DEFAULT_ENGINE = StateVectorEngine()


def apply_instruction(state: StateVector, instr: Instruction,
                      classical_bits: np.ndarray,
                      rng: Optional[np.random.Generator] = None) -> Tuple[StateVector, np.ndarray]:
    """
    Aplica uma única instrução e retorna (novo estado, novos bits clássicos).
    Medições consomem um sorteio de `rng`.
    """
    validate_instruction(instr, state.num_qubits, len(classical_bits))
    batch = StateBatch.from_state(state, classical_bits)
    draws = None
    if instr.is_measurement:
        if rng is None:
            raise ValueError("Medição requer um fluxo aleatório")
        draws = np.zeros((1, row_width(state.num_qubits)))
        draws[0, COL_COLLAPSE] = rng.random()
    batch.apply(instr, draws)
    return StateVector(state.num_qubits, batch.amplitudes[0]), batch.classical_bits[0].copy()


def run_shot(circuit: Circuit, rng: ShotStream) -> str:
    return DEFAULT_ENGINE.run_shot(circuit, rng)


def sample_counts(circuit: Circuit, shots: int, seed: int, workers: int = 1) -> OutcomeCounts:
    return DEFAULT_ENGINE.sample_counts(circuit, shots, seed, workers=workers)


def exact_distribution(circuit: Circuit) -> Dict[str, float]:
    return DEFAULT_ENGINE.exact_distribution(circuit)


def exact_probabilities(circuit: Circuit) -> np.ndarray:
    return DEFAULT_ENGINE.exact_probabilities(circuit)


def final_state(circuit: Circuit) -> StateVector:
    return DEFAULT_ENGINE.final_state(circuit)
