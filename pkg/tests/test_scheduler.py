"""
===============================================================================
HDBellSim - Testes do Agendamento
===============================================================================
Pasta: tests/
Arquivo: tests/test_scheduler.py
===============================================================================
"""

import pytest

from core.circuits import ExperimentSpec, Implementation, build_bell_circuit, qft_circuit
from core.scheduler import DurationTable, Scheduler
from core.statevector import Circuit, Instruction


def test_qft_runtimes_n2():
    scheduler = Scheduler()
    assert scheduler.asap(qft_circuit(2)).total_runtime == 12.0
    assert scheduler.asap(qft_circuit(2, dynamic=True)).total_runtime == 21.0


def test_dependency_depths_n2():
    scheduler = Scheduler()
    assert scheduler.dependency_depth(qft_circuit(2)) == 3
    assert scheduler.dependency_depth(qft_circuit(2, dynamic=True)) == 5


def test_empty_circuit_schedule():
    schedule = Scheduler().asap(Circuit(2, 0, [], []))
    assert schedule.makespan == 0.0
    assert schedule.total_runtime == 0.0
    assert schedule.idle_windows == []


def test_conditioned_gate_waits_for_feed_forward():
    durations = DurationTable()
    circuit = qft_circuit(3, dynamic=True)
    schedule = Scheduler(durations).asap(circuit)
    measured_end = {}
    for i, instr in enumerate(circuit.instructions):
        if instr.is_measurement:
            measured_end[instr.clbit] = schedule.ends[i]
        if instr.is_conditioned:
            assert schedule.starts[i] >= measured_end[instr.clbit] + durations.feed_forward


@pytest.mark.parametrize("dynamic", [False, True])
def test_alap_keeps_makespan(dynamic):
    circuit = build_bell_circuit(ExperimentSpec(3, Implementation.DYNAMIC if dynamic
                                                else Implementation.UNITARY, (2, 1)))
    scheduler = Scheduler()
    asap = scheduler.asap(circuit)
    alap = scheduler.alap(circuit)
    assert alap.makespan == asap.makespan
    assert all(late >= early for late, early in zip(alap.starts, asap.starts))


def test_measurement_wait_is_dd_eligible():
    # qubit 0 espera de t=4 (fim da fase) até a fase condicionada em t=15
    circuit = build_bell_circuit(ExperimentSpec(2, Implementation.DYNAMIC, (1, 1)))
    windows = Scheduler(dd_scope="measurement").asap(circuit).idle_windows
    wait = [w for w in windows if w.qubit == 0 and w.before_index >= 0]
    assert len(wait) == 1
    assert (wait[0].start, wait[0].end) == (4.0, 15.0)
    assert wait[0].eligible == 10.0
    assert wait[0].plain == 1.0


def test_all_scope_makes_every_window_eligible():
    circuit = build_bell_circuit(ExperimentSpec(2, Implementation.UNITARY, (1, 1)))
    windows = Scheduler(dd_scope="all").asap(circuit).idle_windows
    assert windows
    assert all(w.eligible == w.duration for w in windows)
    # sem medições intermediárias nada é elegível no escopo padrão
    assert all(w.eligible == 0.0 for w in Scheduler().asap(circuit).idle_windows)


def test_final_window_only_for_pending_qubits():
    circuit = Circuit(2, 0, [Instruction.h(0), Instruction.h(0), Instruction.h(1)],
                      [(0, 0), (1, 1)])
    windows = Scheduler().asap(circuit).idle_windows
    assert [(w.qubit, w.start, w.end, w.before_index) for w in windows] == [(1, 1.0, 2.0, -1)]


def test_duration_table_validation():
    with pytest.raises(ValueError):
        DurationTable(measure=-1.0)
    with pytest.raises(ValueError):
        DurationTable.from_dict({'teleport': 1.0})
    assert DurationTable.from_dict({'measure': 4}).measure == 4.0
    with pytest.raises(ValueError):
        Scheduler(dd_scope="sometimes")
