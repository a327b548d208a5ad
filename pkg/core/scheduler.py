"""
===============================================================================
HDBellSim - Agendamento de Instruções
===============================================================================
Pasta: core/
Arquivo: core/scheduler.py
Descrição: Agendamento ASAP/ALAP com durações por tipo de instrução,
           janelas ociosas por qubit e profundidade por dependências
===============================================================================
"""

from dataclasses import dataclass, field, asdict
from typing import Dict, List, Mapping, Tuple

from core.statevector import Circuit, GateKind, Instruction, TWO_QUBIT_GATES
from utils.constants import DD_SCOPES, DEFAULT_DURATIONS

_EPS = 1e-12


@dataclass(frozen=True)
class DurationTable:
    """Durações por tipo de instrução (unidades de tempo arbitrárias)"""
    one_qubit: float = DEFAULT_DURATIONS['one_qubit']
    two_qubit: float = DEFAULT_DURATIONS['two_qubit']
    measure: float = DEFAULT_DURATIONS['measure']
    feed_forward: float = DEFAULT_DURATIONS['feed_forward']

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"Duração '{name}' negativa: {value}")

    def duration_of(self, instr: Instruction) -> float:
        if instr.kind is GateKind.MEASURE:
            return self.measure
        if instr.kind in TWO_QUBIT_GATES:
            return self.two_qubit
        return self.one_qubit

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> 'DurationTable':
        unknown = set(data) - set(DEFAULT_DURATIONS)
        if unknown:
            raise ValueError(f"Durações desconhecidas: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class IdleWindow:
    """
    Intervalo em que um qubit fica parado antes da instrução `before_index`
    (-1 = antes da leitura final). `eligible` é a parte da janela coberta
    por desacoplamento dinâmico.
    """
    qubit: int
    start: float
    end: float
    before_index: int
    eligible: float = 0.0

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def plain(self) -> float:
        return self.duration - self.eligible


@dataclass
class Schedule:
    """Resultado de um agendamento"""
    starts: List[float]
    ends: List[float]
    makespan: float
    readout_duration: float
    idle_windows: List[IdleWindow] = field(default_factory=list)

    @property
    def total_runtime(self) -> float:
        return self.makespan + self.readout_duration


class Scheduler:
    """
    Agenda instruções respeitando dependências de qubits e de bits
    clássicos (fase condicionada começa após medição + feed-forward).
    """

    def __init__(self, durations: DurationTable = DurationTable(),
                 dd_scope: str = "measurement"):
        if dd_scope not in DD_SCOPES:
            raise ValueError(f"dd_scope inválido: {dd_scope} (esperado {DD_SCOPES})")
        self.durations = durations
        self.dd_scope = dd_scope

    # =========================================================================
    # ASAP
    # =========================================================================

    def asap(self, circuit: Circuit) -> Schedule:
        qubit_ready = [0.0] * circuit.num_qubits
        clbit_ready: Dict[int, float] = {}
        starts, ends = [], []

        for instr in circuit.instructions:
            start = max(qubit_ready[q] for q in instr.qubits)
            if instr.is_conditioned:
                start = max(start, clbit_ready[instr.clbit])
            end = start + self.durations.duration_of(instr)
            for q in instr.qubits:
                qubit_ready[q] = end
            if instr.is_measurement:
                clbit_ready[instr.clbit] = end + self.durations.feed_forward
            starts.append(start)
            ends.append(end)

        return self._finish(circuit, starts, ends)

    # =========================================================================
    # ALAP
    # =========================================================================

    def alap(self, circuit: Circuit) -> Schedule:
        """Agendamento o mais tarde possível com o mesmo makespan do ASAP"""
        makespan = self.asap(circuit).makespan
        n_instr = len(circuit.instructions)
        latest = [makespan] * circuit.num_qubits
        clbit_deadline: Dict[int, float] = {}
        starts = [0.0] * n_instr
        ends = [0.0] * n_instr

        for i in reversed(range(n_instr)):
            instr = circuit.instructions[i]
            end = min(latest[q] for q in instr.qubits)
            if instr.is_measurement and instr.clbit in clbit_deadline:
                end = min(end, clbit_deadline.pop(instr.clbit))
            start = end - self.durations.duration_of(instr)
            for q in instr.qubits:
                latest[q] = start
            if instr.is_conditioned:
                deadline = start - self.durations.feed_forward
                clbit_deadline[instr.clbit] = min(clbit_deadline.get(instr.clbit, deadline), deadline)
            starts[i], ends[i] = start, end

        return self._finish(circuit, starts, ends, makespan)

    # =========================================================================
    # AUXILIARES
    # =========================================================================

    def _finish(self, circuit: Circuit, starts: List[float], ends: List[float],
                makespan: float = None) -> Schedule:
        if makespan is None:
            makespan = max(ends, default=0.0)
        readout = self.durations.measure if circuit.pending_readout_qubits else 0.0
        schedule = Schedule(starts, ends, makespan, readout)
        schedule.idle_windows = self._idle_windows(circuit, schedule)
        return schedule

    def _measurement_intervals(self, circuit: Circuit, schedule: Schedule) -> List[Tuple[float, float]]:
        """União dos intervalos medição + feed-forward"""
        intervals = sorted(
            (schedule.starts[i], schedule.ends[i] + self.durations.feed_forward)
            for i, instr in enumerate(circuit.instructions) if instr.is_measurement
        )
        merged: List[Tuple[float, float]] = []
        for start, end in intervals:
            if merged and start <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], end))
            else:
                merged.append((start, end))
        return merged

    def _eligible(self, start: float, end: float, intervals: List[Tuple[float, float]]) -> float:
        if self.dd_scope == "all":
            return end - start
        return sum(max(0.0, min(end, b) - max(start, a)) for a, b in intervals)

    def _idle_windows(self, circuit: Circuit, schedule: Schedule) -> List[IdleWindow]:
        intervals = self._measurement_intervals(circuit, schedule)
        per_qubit: Dict[int, List[int]] = {q: [] for q in range(circuit.num_qubits)}
        for i, instr in enumerate(circuit.instructions):
            for q in instr.qubits:
                per_qubit[q].append(i)

        pending = set(circuit.pending_readout_qubits)
        windows = []
        for q, indices in per_qubit.items():
            for prev, nxt in zip(indices, indices[1:]):
                start, end = schedule.ends[prev], schedule.starts[nxt]
                if end - start > _EPS:
                    windows.append(IdleWindow(q, start, end, nxt, self._eligible(start, end, intervals)))
            # Qubit nunca tocado permanece em |0>; defasagem não tem efeito
            if indices and q in pending:
                start, end = schedule.ends[indices[-1]], schedule.makespan
                if end - start > _EPS:
                    windows.append(IdleWindow(q, start, end, -1, self._eligible(start, end, intervals)))
        return windows

    def dependency_depth(self, circuit: Circuit) -> int:
        """Maior cadeia de instruções dependentes (peso 1 por instrução)"""
        qubit_depth = [0] * circuit.num_qubits
        clbit_depth: Dict[int, int] = {}
        depth = 0
        for instr in circuit.instructions:
            level = max(qubit_depth[q] for q in instr.qubits)
            if instr.is_conditioned:
                level = max(level, clbit_depth[instr.clbit])
            level += 1
            for q in instr.qubits:
                qubit_depth[q] = level
            if instr.is_measurement:
                clbit_depth[instr.clbit] = level
            depth = max(depth, level)
        return depth
