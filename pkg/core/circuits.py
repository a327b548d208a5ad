"""
===============================================================================
HDBellSim - Construção de Circuitos
===============================================================================
Pasta: core/
Arquivo: core/circuits.py
Descrição: Preparação do estado maximamente emaranhado, camadas de fase,
           QFT unitária e dinâmica (DQFT), tilt e circuito completo do
           teste de Bell, mais a contagem de recursos
===============================================================================
"""

import logging
import math
from dataclasses import dataclass, asdict
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

from core.scheduler import DurationTable, Scheduler
from core.statevector import (
    Circuit,
    GateKind,
    Instruction,
    ONE_QUBIT_GATES,
    TWO_QUBIT_GATES,
)
from utils.constants import (
    MAX_QUBITS_PER_PARTY,
    MIN_QUBITS_PER_PARTY,
    SETTING_ANGLES,
    default_shots,
)

if TYPE_CHECKING:
    from core.noise import NoiseModel

logger = logging.getLogger("Circuits")


class CircuitError(ValueError):
    """Erro de construção ou validação de circuito"""
    pass


# =============================================================================
# TIPOS
# =============================================================================

class Party(Enum):
    """Parte do teste de Bell"""
    A = "A"
    B = "B"


class Implementation(Enum):
    """Implementação da base de medição"""
    UNITARY = "unitary_qft"
    DYNAMIC = "dynamic_qft"

    @classmethod
    def from_label(cls, label: str) -> 'Implementation':
        aliases = {
            'unitary': cls.UNITARY, 'unitary_qft': cls.UNITARY,
            'dynamic': cls.DYNAMIC, 'dynamic_qft': cls.DYNAMIC,
        }
        try:
            return aliases[label.lower()]
        except KeyError:
            raise CircuitError(f"Implementação desconhecida: {label}") from None

    @property
    def short_label(self) -> str:
        return "unitary" if self is Implementation.UNITARY else "dynamic"


@dataclass(frozen=True)
class MeasurementSetting:
    """Setting de medição (parte, índice 1 ou 2) e seu parâmetro de ângulo"""
    party: Party
    index: int

    def __post_init__(self):
        if self.index not in (1, 2):
            raise CircuitError(f"Índice de setting deve ser 1 ou 2, recebeu {self.index}")

    @property
    def angle_parameter(self) -> Fraction:
        return SETTING_ANGLES[(self.party.value, self.index)]


@dataclass(frozen=True)
class Tilt:
    """Rotação RY(angle) no qubit `qubit` (1-based) de uma parte"""
    party: Party
    qubit: int
    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise CircuitError(f"Ângulo de tilt não finito: {self.angle}")


@dataclass(frozen=True)
class ExperimentSpec:
    """Parâmetros de um circuito do teste de Bell"""
    n: int
    implementation: Implementation
    settings: Tuple[int, int]
    tilt: Optional[Tilt] = None
    noise: Optional['NoiseModel'] = None
    shots: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if not MIN_QUBITS_PER_PARTY <= self.n <= MAX_QUBITS_PER_PARTY:
            raise CircuitError(
                f"n = {self.n} fora de [{MIN_QUBITS_PER_PARTY}, {MAX_QUBITS_PER_PARTY}]")
        if self.implementation is Implementation.DYNAMIC and self.n < 2:
            raise CircuitError("A QFT dinâmica requer n >= 2")
        x, y = self.settings
        if x not in (1, 2) or y not in (1, 2):
            raise CircuitError(f"Settings inválidos: {self.settings}")
        if self.tilt is not None and not 1 <= self.tilt.qubit <= self.n:
            raise CircuitError(f"Qubit de tilt {self.tilt.qubit} fora de [1, {self.n}]")
        if self.shots is not None and self.shots < 1:
            raise CircuitError(f"shots deve ser >= 1, recebeu {self.shots}")

    @property
    def d(self) -> int:
        return 2 ** self.n

    @property
    def shots_per_setting(self) -> int:
        return self.shots if self.shots is not None else default_shots(self.n)


@dataclass
class ResourceReport:
    """Contagem de recursos de um circuito"""
    one_qubit_gates: int
    two_qubit_gates: int
    mid_circuit_measurements: int
    conditioned_gates: int
    depth: int
    estimated_runtime: float

    def to_dict(self) -> Dict:
        return asdict(self)


# =============================================================================
# LAYOUT
# =============================================================================

def party_qubits(n: int, party: Party) -> List[int]:
    """A ocupa os qubits 0..n-1, B ocupa n..2n-1 (par j com n+j)"""
    offset = 0 if party is Party.A else n
    return list(range(offset, offset + n))


def qft_output_positions(n: int) -> List[int]:
    """Dígito de saída guardado em cada qubit físico após a QFT"""
    return [n - 1 - p for p in range(n)]


# =============================================================================
# BLOCOS
# =============================================================================

def build_state_prep(n: int) -> Circuit:
    """
    Prepara sum_k |k>|k> / sqrt(d) como produto de n pares de Bell.

    Args:
        n: Qubits por parte

    Returns:
        Circuito em 2n qubits com leitura final identidade
    """
    if not MIN_QUBITS_PER_PARTY <= n <= MAX_QUBITS_PER_PARTY:
        raise CircuitError(f"n = {n} fora de [{MIN_QUBITS_PER_PARTY}, {MAX_QUBITS_PER_PARTY}]")
    instructions = []
    for j in range(n):
        instructions.append(Instruction.h(j))
        instructions.append(Instruction.cnot(j, n + j))
    return Circuit(2 * n, 0, instructions, [(q, q) for q in range(2 * n)])


def build_phase_layer(n: int, setting: MeasurementSetting,
                      qubits: Optional[Sequence[int]] = None) -> List[Instruction]:
    """
    Uma Phase por qubit; o qubit de peso 2^j recebe pi * 2^(j+1) * angle / d,
    de modo que |k> acumula a fase exp(2 pi i k angle / d).
    """
    qubits = list(range(n)) if qubits is None else list(qubits)
    d = 2 ** n
    alpha = float(setting.angle_parameter)
    return [
        Instruction.phase(q, math.pi * (2 ** (j + 1)) * alpha / d)
        for j, q in enumerate(qubits)
    ]


def build_qft(n: int, inverse: bool = False,
              qubits: Optional[Sequence[int]] = None) -> List[Instruction]:
    """
    QFT em n qubits: para cada alvo p (do mais significativo ao menos),
    H seguido de fases controladas pelos qubits de menor índice.

    A saída sai com os dígitos invertidos (ver qft_output_positions); a
    inversa nega todos os ângulos.
    """
    qubits = list(range(n)) if qubits is None else list(qubits)
    if len(qubits) != n:
        raise CircuitError(f"build_qft espera {n} qubits, recebeu {len(qubits)}")
    sign = -1.0 if inverse else 1.0
    instructions = []
    for p in reversed(range(n)):
        instructions.append(Instruction.h(qubits[p]))
        for r in reversed(range(p)):
            angle = sign * 2.0 * math.pi / 2 ** (p - r + 1)
            instructions.append(Instruction.cphase(qubits[r], qubits[p], angle))
    return instructions


def build_dqft(n: int, inverse: bool = False,
               qubits: Optional[Sequence[int]] = None,
               clbit_offset: int = 0) -> Tuple[List[Instruction], Dict[int, int]]:
    """
    QFT dinâmica: cada fase controlada vira medição + fase condicionada.

    Returns:
        (instruções, mapa qubit físico -> bit clássico). O bit clássico
        clbit_offset + i guarda o dígito de saída i.
    """
    if n < 2:
        raise CircuitError("A QFT dinâmica requer n >= 2")
    qubits = list(range(n)) if qubits is None else list(qubits)
    if len(qubits) != n:
        raise CircuitError(f"build_dqft espera {n} qubits, recebeu {len(qubits)}")
    sign = -1.0 if inverse else 1.0
    instructions = []
    clbit_map = {}
    for p in reversed(range(n)):
        clbit = clbit_offset + (n - 1 - p)
        clbit_map[qubits[p]] = clbit
        instructions.append(Instruction.h(qubits[p]))
        instructions.append(Instruction.measure(qubits[p], clbit))
        for r in reversed(range(p)):
            angle = sign * 2.0 * math.pi / 2 ** (p - r + 1)
            instructions.append(Instruction.cond_phase(qubits[r], angle, clbit))
    return instructions, clbit_map


def check_terminal_measurements(instructions: Sequence[Instruction]):
    """Garante que nenhum qubit medido volta a ser usado depois"""
    measured = set()
    for instr in instructions:
        touched = measured.intersection(instr.qubits)
        if touched:
            raise CircuitError(
                f"Qubit {sorted(touched)} usado após medição terminal em {instr}")
        if instr.is_measurement:
            measured.add(instr.qubits[0])


def qft_circuit(n: int, dynamic: bool = False, inverse: bool = False) -> Circuit:
    """Bloco QFT/DQFT isolado com leitura final na ordem dos dígitos"""
    if dynamic:
        instructions, _ = build_dqft(n, inverse)
        num_clbits = n
    else:
        instructions = build_qft(n, inverse)
        num_clbits = 0
    final_map = list(zip(range(n), qft_output_positions(n)))
    return Circuit(n, num_clbits, instructions, final_map)


def build_bell_circuit(spec: ExperimentSpec) -> Circuit:
    """
    Circuito completo: preparação, tilt opcional, camadas de fase e QFT
    (A) / QFT inversa (B), com leitura final (a nas posições 0..n-1, b em
    n..2n-1).
    """
    n = spec.n
    qubits_a = party_qubits(n, Party.A)
    qubits_b = party_qubits(n, Party.B)
    x, y = spec.settings

    instructions = list(build_state_prep(n).instructions)
    if spec.tilt is not None:
        target = party_qubits(n, spec.tilt.party)[spec.tilt.qubit - 1]
        instructions.append(Instruction.ry(target, spec.tilt.angle))

    instructions += build_phase_layer(n, MeasurementSetting(Party.A, x), qubits_a)
    instructions += build_phase_layer(n, MeasurementSetting(Party.B, y), qubits_b)

    if spec.implementation is Implementation.UNITARY:
        instructions += build_qft(n, False, qubits_a)
        instructions += build_qft(n, True, qubits_b)
        num_clbits = 0
    else:
        block_a, _ = build_dqft(n, False, qubits_a, clbit_offset=0)
        block_b, _ = build_dqft(n, True, qubits_b, clbit_offset=n)
        check_terminal_measurements(block_a + block_b)
        instructions += block_a + block_b
        num_clbits = 2 * n

    positions = qft_output_positions(n)
    final_map = [(qubits_a[p], positions[p]) for p in range(n)]
    final_map += [(qubits_b[p], n + positions[p]) for p in range(n)]
    return Circuit(2 * n, num_clbits, instructions, final_map)


# =============================================================================
# RECURSOS
# =============================================================================

def count_resources(circuit: Circuit,
                    duration_table: DurationTable = DurationTable()) -> ResourceReport:
    """
    Conta portas, medições intermediárias e fases condicionadas; estima a
    profundidade (cadeia de dependências) e o tempo de execução (ASAP mais
    a leitura final quando há qubits pendentes).
    """
    kinds = [instr.kind for instr in circuit.instructions]
    scheduler = Scheduler(duration_table)
    schedule = scheduler.asap(circuit)
    return ResourceReport(
        one_qubit_gates=sum(1 for k in kinds if k in ONE_QUBIT_GATES),
        two_qubit_gates=sum(1 for k in kinds if k in TWO_QUBIT_GATES),
        mid_circuit_measurements=sum(1 for k in kinds if k is GateKind.MEASURE),
        conditioned_gates=sum(1 for k in kinds if k is GateKind.COND_PHASE),
        depth=scheduler.dependency_depth(circuit),
        estimated_runtime=schedule.total_runtime,
    )


# =============================================================================
# SERIALIZAÇÃO
# =============================================================================

_BY_VALUE = {kind.value: kind for kind in GateKind}


def serialize_circuit(circuit: Circuit) -> str:
    """Formato texto, uma instrução por linha; ângulos com 12 algarismos significativos"""
    lines = [f"QUBITS {circuit.num_qubits}", f"CLBITS {circuit.num_classical_bits}"]
    for instr in circuit.instructions:
        parts = [instr.kind.value] + [str(q) for q in instr.qubits]
        if instr.kind in (GateKind.RY, GateKind.PHASE, GateKind.CPHASE, GateKind.COND_PHASE):
            parts.append(f"{float(instr.angle):.12g}")
        if instr.clbit is not None:
            parts.append(f"c{instr.clbit}")
        lines.append(" ".join(parts))
    for q, pos in circuit.final_measurement_map:
        lines.append(f"FINAL {q} {pos}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    """Inverso de serialize_circuit"""
    num_qubits = num_clbits = None
    instructions: List[Instruction] = []
    final_map: List[Tuple[int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        try:
            if head == "QUBITS":
                num_qubits = int(args[0])
            elif head == "CLBITS":
                num_clbits = int(args[0])
            elif head == "FINAL":
                final_map.append((int(args[0]), int(args[1])))
            elif head in _BY_VALUE:
                instructions.append(_parse_instruction(_BY_VALUE[head], args))
            else:
                raise CircuitError(f"Instrução desconhecida '{head}'")
        except (IndexError, ValueError) as e:
            raise CircuitError(f"Linha {lineno} inválida: '{raw}' ({e})") from e

    if num_qubits is None or num_clbits is None:
        raise CircuitError("Cabeçalho QUBITS/CLBITS ausente")
    return Circuit(num_qubits, num_clbits, instructions, final_map)


def _parse_instruction(kind: GateKind, args: List[str]) -> Instruction:
    clbit = None
    if args and args[-1].startswith('c'):
        clbit = int(args.pop()[1:])
    if kind in (GateKind.CPHASE, GateKind.CNOT):
        qubits = (int(args[0]), int(args[1]))
        rest = args[2:]
    else:
        qubits = (int(args[0]),)
        rest = args[1:]
    angle = float(rest[0]) if rest else 0.0
    return Instruction(kind, qubits, angle, clbit)
