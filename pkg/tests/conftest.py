"""
===============================================================================
HDBellSim - Fixtures de Teste
===============================================================================
Pasta: tests/
Arquivo: tests/conftest.py
===============================================================================
"""

import numpy as np
import pytest

from core.bell import JointDistribution, from_outcome_probabilities, ideal_distribution
from core.circuits import ExperimentSpec, Implementation, build_bell_circuit
from core.statevector import exact_probabilities
from utils.constants import SETTING_PAIRS


def bell_circuits(n, implementation=Implementation.UNITARY, tilt=None):
    """Os quatro circuitos (um por par de settings)"""
    return {s: build_bell_circuit(ExperimentSpec(n, implementation, s, tilt=tilt))
            for s in SETTING_PAIRS}


def exact_joint(n, implementation=Implementation.UNITARY, tilt=None) -> JointDistribution:
    circuits = bell_circuits(n, implementation, tilt)
    return from_outcome_probabilities({s: exact_probabilities(c) for s, c in circuits.items()}, n)


def random_distribution(d: int, rng: np.random.Generator) -> JointDistribution:
    """Distribuição válida arbitrária (sem no-signaling)"""
    tables = rng.random((2, 2, d, d))
    tables /= tables.sum(axis=(2, 3), keepdims=True)
    return JointDistribution(d, tables)


def random_no_signaling_distribution(d: int, rng: np.random.Generator,
                                     hidden_states: int = 3) -> JointDistribution:
    """
    Mistura aleatória da distribuição quântica ideal com um modelo local
    (variável oculta com respostas estocásticas). As marginais de cada parte
    dependem só do próprio setting.
    """
    weights = rng.dirichlet(np.ones(hidden_states))
    response_a = rng.dirichlet(np.ones(d), size=(hidden_states, 2))
    response_b = rng.dirichlet(np.ones(d), size=(hidden_states, 2))
    local = np.einsum('l,lxa,lyb->xyab', weights, response_a, response_b)
    quantum_weight = rng.random()
    tables = quantum_weight * ideal_distribution(d).tables + (1.0 - quantum_weight) * local
    return JointDistribution(d, tables)


def signaling_distribution() -> JointDistribution:
    """d = 2 determinística por setting, com I_ZG = 3 (acima do score máximo)"""
    def delta(a, b):
        return np.outer(np.eye(2)[a], np.eye(2)[b])

    return JointDistribution.from_tables(
        {(1, 1): delta(0, 0), (1, 2): delta(0, 0), (2, 1): delta(0, 1), (2, 2): delta(0, 0)})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ideal_joint():
    """Distribuição exata dos circuitos ideais, com cache por n"""
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = exact_joint(n)
        return cache[n]
    return get


@pytest.fixture
def analytic_ideal():
    return ideal_distribution
