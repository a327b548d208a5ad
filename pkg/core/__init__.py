"""
===============================================================================
HDBellSim - Módulo CORE
===============================================================================
Pasta: core/
Arquivo: core/__init__.py
Descrição: Simulação de vetor de estado, circuitos do teste de Bell,
           funcional CGLMP/ZG, estatística, ruído e mitigação
===============================================================================
"""

from .statevector import (
    Circuit, Instruction, GateKind, StateVector, OutcomeCounts,
    StateVectorEngine, SimulationError,
    apply_instruction, run_shot, sample_counts, exact_distribution, final_state
)
from .scheduler import DurationTable, Scheduler, Schedule
from .circuits import (
    Implementation, Party, Tilt, ExperimentSpec, ResourceReport,
    build_bell_circuit, build_qft, build_dqft, count_resources
)
from .bell import (
    JointDistribution, BellResult, izg, ideal_distribution, chsh_max, pairwise_marginal
)
from .stats import ScoreRule, cglmp_score_rule, zg_score_rule, bentkus_pvalue, pvalue_curve
from .noise import NoiseModel, ReadoutModel, noisy_run_shot, noisy_sample_counts
from .mitigation import build_confusion, mitigate, simplex_project, mitigate_counts

__all__ = [
    # Simulação
    'Circuit', 'Instruction', 'GateKind', 'StateVector', 'OutcomeCounts',
    'StateVectorEngine', 'SimulationError',
    'apply_instruction', 'run_shot', 'sample_counts', 'exact_distribution', 'final_state',
    # Agendamento
    'DurationTable', 'Scheduler', 'Schedule',
    # Circuitos
    'Implementation', 'Party', 'Tilt', 'ExperimentSpec', 'ResourceReport',
    'build_bell_circuit', 'build_qft', 'build_dqft', 'count_resources',
    # Bell
    'JointDistribution', 'BellResult', 'izg', 'ideal_distribution', 'chsh_max',
    'pairwise_marginal',
    # Estatística
    'ScoreRule', 'cglmp_score_rule', 'zg_score_rule', 'bentkus_pvalue', 'pvalue_curve',
    # Ruído e mitigação
    'NoiseModel', 'ReadoutModel', 'noisy_run_shot', 'noisy_sample_counts',
    'build_confusion', 'mitigate', 'simplex_project', 'mitigate_counts',
]
