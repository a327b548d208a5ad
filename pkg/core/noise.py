"""
===============================================================================
HDBellSim - Modelo de Ruído
===============================================================================
Pasta: core/
Arquivo: core/noise.py
Descrição: Ruído estocástico de Pauli por trajetória (portas, defasagem
           ociosa e leitura) com modelo fenomenológico de desacoplamento
           dinâmico (DD)
===============================================================================
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.scheduler import DurationTable, Scheduler
from core.statevector import (
    COL_GATE_ERROR,
    COL_IDLE,
    COL_PAULI,
    DEFAULT_ENGINE,
    Circuit,
    Instruction,
    OutcomeCounts,
    ShotStream,
    StateBatch,
    TrajectoryNoise,
)
from utils.constants import DD_SCOPES, DEFAULT_NOISE, IDLE_SCHEDULES

logger = logging.getLogger("Noise")

_PAULI_LABELS = ('I', 'X', 'Y', 'Z')


# =============================================================================
# MODELO
# =============================================================================

@dataclass(frozen=True)
class ReadoutModel:
    """Probabilidades de flip de leitura 0->1 e 1->0 de um qubit"""
    p01: float
    p10: float

    def __post_init__(self):
        for name, value in (('p01', self.p01), ('p10', self.p10)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"Probabilidade de leitura {name} = {value} fora de [0, 1]")

    def matrix(self) -> np.ndarray:
        """Matriz coluna-estocástica M[observado, verdadeiro]"""
        return np.array([[1.0 - self.p01, self.p10],
                         [self.p01, 1.0 - self.p10]])

    @property
    def as_tuple(self) -> Tuple[float, float]:
        return (self.p01, self.p10)


@dataclass
class NoiseModel:
    """
    Parâmetros do ruído fenomenológico.

    idle_dephasing_rate é a probabilidade de Z por unidade de tempo ociosa;
    com DD ligado, a parte elegível da janela é multiplicada por dd_factor.
    As janelas vêm do agendamento idle_schedule: ASAP prepara todos os
    qubits em t=0 e expõe a espera durante medições intermediárias; ALAP
    empurra cada cadeia para perto da própria medição.
    """
    p1: float = DEFAULT_NOISE['p1']
    p2: float = DEFAULT_NOISE['p2']
    readout_default: ReadoutModel = ReadoutModel(*DEFAULT_NOISE['readout']['default'])
    readout_per_qubit: Dict[int, ReadoutModel] = field(default_factory=dict)
    idle_dephasing_rate: float = DEFAULT_NOISE['idle_dephasing_rate']
    durations: DurationTable = field(default_factory=DurationTable)
    dd_factor: float = DEFAULT_NOISE['dd_factor']
    dd_scope: str = DEFAULT_NOISE['dd_scope']
    idle_schedule: str = DEFAULT_NOISE['idle_schedule']

    def __post_init__(self):
        for name in ('p1', 'p2', 'idle_dephasing_rate', 'dd_factor'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} = {value} fora de [0, 1]")
        if self.dd_scope not in DD_SCOPES:
            raise ValueError(f"dd_scope inválido: {self.dd_scope}")
        if self.idle_schedule not in IDLE_SCHEDULES:
            raise ValueError(f"idle_schedule inválido: {self.idle_schedule}")

    @classmethod
    def ideal(cls) -> 'NoiseModel':
        return cls(p1=0.0, p2=0.0, readout_default=ReadoutModel(0.0, 0.0),
                   idle_dephasing_rate=0.0)

    @property
    def is_noiseless(self) -> bool:
        return (self.p1 == 0.0 and self.p2 == 0.0 and self.idle_dephasing_rate == 0.0
                and self.readout_default.as_tuple == (0.0, 0.0)
                and all(r.as_tuple == (0.0, 0.0) for r in self.readout_per_qubit.values()))

    def readout(self, qubit: int) -> ReadoutModel:
        return self.readout_per_qubit.get(qubit, self.readout_default)

    def readout_matrices(self, circuit: Circuit) -> List[np.ndarray]:
        """Matrizes de confusão por posição da bitstring final"""
        matrices: List[Optional[np.ndarray]] = [None] * circuit.num_outcome_bits
        for q, pos in circuit.final_measurement_map:
            matrices[pos] = self.readout(q).matrix()
        return matrices

    # -------------------------------------------------------------------------
    # Serialização
    # -------------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            'p1': self.p1,
            'p2': self.p2,
            'readout': {
                'default': list(self.readout_default.as_tuple),
                'per_qubit': {str(q): list(r.as_tuple) for q, r in self.readout_per_qubit.items()},
            },
            'idle_dephasing_rate': self.idle_dephasing_rate,
            'durations': self.durations.to_dict(),
            'dd_factor': self.dd_factor,
            'dd_scope': self.dd_scope,
            'idle_schedule': self.idle_schedule,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'NoiseModel':
        readout = data.get('readout', DEFAULT_NOISE['readout'])
        default = readout.get('default', DEFAULT_NOISE['readout']['default'])
        per_qubit = {
            int(q): ReadoutModel(float(v[0]), float(v[1]))
            for q, v in readout.get('per_qubit', {}).items()
        }
        return cls(
            p1=float(data.get('p1', DEFAULT_NOISE['p1'])),
            p2=float(data.get('p2', DEFAULT_NOISE['p2'])),
            readout_default=ReadoutModel(float(default[0]), float(default[1])),
            readout_per_qubit=per_qubit,
            idle_dephasing_rate=float(data.get('idle_dephasing_rate',
                                               DEFAULT_NOISE['idle_dephasing_rate'])),
            durations=DurationTable.from_dict(data.get('durations', DEFAULT_NOISE['durations'])),
            dd_factor=float(data.get('dd_factor', DEFAULT_NOISE['dd_factor'])),
            dd_scope=str(data.get('dd_scope', DEFAULT_NOISE['dd_scope'])),
            idle_schedule=str(data.get('idle_schedule', DEFAULT_NOISE['idle_schedule'])),
        )


# =============================================================================
# TRAJETÓRIAS
# =============================================================================

class PauliTrajectoryNoise(TrajectoryNoise):
    """
    Injeta ruído de Pauli nas trajetórias de um circuito:
    - após cada porta, Pauli não identidade uniforme com prob. p1 ou p2;
    - Z nas janelas ociosas do agendamento (ASAP ou ALAP);
    - flips de leitura nas medições intermediárias e na leitura final.
    """

    def __init__(self, circuit: Circuit, model: NoiseModel, dd_enabled: bool):
        self.circuit = circuit
        self.model = model
        self.dd_enabled = dd_enabled
        self.num_qubits = circuit.num_qubits
        self._idle_before: Dict[int, List[Tuple[int, float]]] = {}
        self._idle_final: List[Tuple[int, float]] = []
        self._build_idle_table()

    def _build_idle_table(self):
        if self.model.idle_dephasing_rate == 0.0:
            return
        scheduler = Scheduler(self.model.durations, self.model.dd_scope)
        if self.model.idle_schedule == 'alap':
            schedule = scheduler.alap(self.circuit)
        else:
            schedule = scheduler.asap(self.circuit)
        factor = self.model.dd_factor if self.dd_enabled else 1.0
        for window in schedule.idle_windows:
            exposure = window.plain + factor * window.eligible
            prob = min(1.0, self.model.idle_dephasing_rate * exposure)
            if prob <= 0.0:
                continue
            if window.before_index < 0:
                self._idle_final.append((window.qubit, prob))
            else:
                self._idle_before.setdefault(window.before_index, []).append((window.qubit, prob))
        logger.debug(f"{len(schedule.idle_windows)} janelas ociosas "
                     f"(DD {'ligado' if self.dd_enabled else 'desligado'})")

    def _dephase(self, batch: StateBatch, draws: np.ndarray,
                 entries: Sequence[Tuple[int, float]]):
        for qubit, prob in entries:
            batch.apply_pauli('Z', qubit, draws[:, COL_IDLE + qubit] < prob)

    def before_instruction(self, index: int, instr: Instruction,
                           batch: StateBatch, draws: np.ndarray):
        entries = self._idle_before.get(index)
        if entries:
            self._dephase(batch, draws, entries)

    def after_instruction(self, index: int, instr: Instruction, batch: StateBatch,
                          draws: np.ndarray, executed: np.ndarray):
        if instr.is_measurement:
            return
        prob = self.model.p2 if instr.is_two_qubit else self.model.p1
        if prob == 0.0:
            return
        occurred = (draws[:, COL_GATE_ERROR] < prob) & executed
        if not np.any(occurred):
            return

        if instr.is_two_qubit:
            # 15 Paulis de dois qubits não identidade
            choice = np.minimum((draws[:, COL_PAULI] * 15).astype(int), 14) + 1
            labels = [(choice // 4, 0), (choice % 4, 1)]
        else:
            choice = np.minimum((draws[:, COL_PAULI] * 3).astype(int), 2) + 1
            labels = [(choice, 0)]

        for codes, slot in labels:
            qubit = instr.qubits[slot]
            for code in (1, 2, 3):
                rows = occurred & (codes == code)
                batch.apply_pauli(_PAULI_LABELS[code], qubit, rows)

    def measurement_readout(self, qubit: int) -> Optional[Tuple[float, float]]:
        return self.model.readout(qubit).as_tuple

    def before_final_readout(self, batch: StateBatch, draws: np.ndarray):
        if self._idle_final:
            self._dephase(batch, draws, self._idle_final)

    def final_readout_flips(self, bits: np.ndarray, draws: np.ndarray) -> np.ndarray:
        flipped = bits.copy()
        for q, pos, clbit in self.circuit.final_readout_sources:
            if clbit is not None:
                continue
            p01, p10 = self.model.readout(q).as_tuple
            eps = np.where(bits[:, pos] == 1, p10, p01)
            flip = draws[:, COL_IDLE + self.num_qubits + q] < eps
            flipped[:, pos] ^= flip.astype(np.int8)
        return flipped


# =============================================================================
# API
# =============================================================================

def noisy_run_shot(circuit: Circuit, model: NoiseModel, dd_enabled: bool,
                   rng: ShotStream) -> str:
    """Uma trajetória ruidosa; com todas as taxas nulas coincide com run_shot"""
    return DEFAULT_ENGINE.run_shot(circuit, rng, PauliTrajectoryNoise(circuit, model, dd_enabled))


def noisy_sample_counts(circuit: Circuit, model: NoiseModel, dd_enabled: bool,
                        shots: int, seed: int, workers: int = 1) -> OutcomeCounts:
    noise = PauliTrajectoryNoise(circuit, model, dd_enabled)
    return DEFAULT_ENGINE.sample_counts(circuit, shots, seed, noise, workers)
