"""
===============================================================================
HDBellSim - Gerenciador de Configurações
===============================================================================
Pasta: utils/
Arquivo: utils/config_manager.py
Descrição: Carrega a configuração JSON do experimento, mescla os padrões,
           valida e converte para ExperimentConfig
===============================================================================
"""

import copy
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from core.noise import NoiseModel
from utils.constants import (
    DEFAULT_NOISE,
    DEFAULT_PVALUE_GRID,
    DEFAULT_TILT_POINTS,
    IMPLEMENTATIONS,
    MAX_QUBITS_PER_PARTY,
    MIN_QUBITS_PER_PARTY,
    MITIGATION_MODES,
    MITIGATION_TOLERANCE,
)

logger = logging.getLogger("Config")


class ConfigError(ValueError):
    """Falha de validação da configuração"""
    pass


DEFAULTS: Dict[str, Any] = {
    'n_list': [1, 2, 3, 4],
    'implementations': list(IMPLEMENTATIONS),
    'mitigation': list(MITIGATION_MODES),
    'shots_per_setting': None,
    'seed': 1234,
    'noise': copy.deepcopy(DEFAULT_NOISE),
    'tilt_scan': {
        'party': 'A',
        'n': 4,
        'implementation': 'unitary',
        'qubits': None,
        'angles': None,
    },
    'pairwise': {
        'enabled': True,
        'n_list': [1, 2, 3, 4, 5, 6],
    },
    'pvalues': True,
    'pvalue_curve': {
        'm_grid': list(DEFAULT_PVALUE_GRID),
        'mean_scores': None,
    },
    'mitigation_options': {
        'tol': MITIGATION_TOLERANCE,
        'max_distance': None,
    },
    'ideal_n_list': [1, 2, 3, 4, 5, 6, 7, 8],
    'resources_n_list': [1, 2, 3, 4, 5, 6, 7, 8],
    'exact': False,
    'threads': 1,
    'output_dir': 'results',
}


class ConfigManager:
    """Gerencia a configuração do experimento (arquivo JSON + padrões)"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file
        self.config = self._load_config()

        # Configurações padrão
        self._set_defaults()

    def _load_config(self) -> Dict[str, Any]:
        """Carrega configurações do arquivo"""
        if self.config_file is None:
            logger.info("⚠️ Nenhum arquivo de configuração; usando padrões")
            return {}
        if not os.path.exists(self.config_file):
            raise ConfigError(f"Arquivo de configuração não encontrado: {self.config_file}")
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                config = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"JSON inválido em {self.config_file}: {e}") from e
        if not isinstance(config, dict):
            raise ConfigError("A configuração deve ser um objeto JSON")
        logger.info(f"✅ Configurações carregadas de: {self.config_file}")
        return config

    def _set_defaults(self):
        """Define valores padrão para configurações ausentes"""
        for key, value in DEFAULTS.items():
            if key not in self.config:
                self.config[key] = copy.deepcopy(value)
            elif isinstance(value, dict) and isinstance(self.config[key], dict):
                # Para dicionários aninhados, mescla
                for subkey, subvalue in value.items():
                    if subkey not in self.config[key]:
                        self.config[key][subkey] = copy.deepcopy(subvalue)

    def save(self, path: str):
        """Grava a configuração efetiva"""
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.config, f, indent=4, ensure_ascii=False)
        logger.debug(f"Configuração efetiva salva em: {path}")

    def get(self, key: str, default: Any = None) -> Any:
        """Obtém um valor de configuração (chaves pontuadas: 'noise.p2')"""
        keys = key.split('.')
        value = self.config

        try:
            for k in keys:
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key: str, value: Any):
        """Define um valor de configuração"""
        keys = key.split('.')
        config = self.config

        # Navega até o dicionário pai
        for k in keys[:-1]:
            if k not in config or not isinstance(config[k], dict):
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def apply_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None,
                        exact: bool = False, threads: Optional[int] = None):
        """Flags globais da linha de comando sobrescrevem o arquivo"""
        if seed is not None:
            self.set('seed', seed)
        if output_dir is not None:
            self.set('output_dir', output_dir)
        if exact:
            self.set('exact', True)
        if threads is not None:
            self.set('threads', threads)

    def to_experiment_config(self) -> 'ExperimentConfig':
        return ExperimentConfig.from_dict(self.config)


# =============================================================================
# CONFIGURAÇÃO TIPADA
# =============================================================================

@dataclass
class TiltScanConfig:
    party: str
    n: int
    implementation: str
    qubits: List[int]
    angles: List[float]


@dataclass
class PValueCurveConfig:
    m_grid: List[int]
    mean_scores: Optional[Dict[str, Dict[str, float]]] = None


@dataclass
class ExperimentConfig:
    """Configuração validada do experimento"""
    n_list: List[int]
    implementations: List[str]
    mitigation: List[str]
    shots_per_setting: Optional[int]
    seed: int
    noise: Optional[NoiseModel]
    tilt_scan: Optional[TiltScanConfig]
    pairwise_enabled: bool
    pairwise_n_list: List[int]
    pvalues: bool
    pvalue_curve: PValueCurveConfig
    mitigation_tol: float = MITIGATION_TOLERANCE
    mitigation_max_distance: Optional[int] = None
    ideal_n_list: List[int] = field(default_factory=lambda: list(range(1, 9)))
    resources_n_list: List[int] = field(default_factory=lambda: list(range(1, 9)))
    exact: bool = False
    threads: int = 1
    output_dir: str = 'results'
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_ideal(self) -> bool:
        return self.noise is None or self.noise.is_noiseless

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        n_list = _check_n_list(data.get('n_list'), 'n_list')
        implementations = _check_subset(data.get('implementations'), IMPLEMENTATIONS, 'implementations')
        mitigation = _check_subset(data.get('mitigation'), MITIGATION_MODES, 'mitigation')

        shots = data.get('shots_per_setting')
        if shots is not None and (not isinstance(shots, int) or shots < 1):
            raise ConfigError(f"shots_per_setting deve ser inteiro >= 1, recebeu {shots}")

        seed = data.get('seed')
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed deve ser inteiro não negativo, recebeu {seed}")

        noise_data = data.get('noise')
        if noise_data == 'ideal' or noise_data is None:
            noise = None
        elif isinstance(noise_data, dict):
            try:
                noise = NoiseModel.from_dict(noise_data)
            except (ValueError, TypeError, IndexError) as e:
                raise ConfigError(f"Modelo de ruído inválido: {e}") from e
        else:
            raise ConfigError(f"noise deve ser 'ideal' ou objeto, recebeu {noise_data!r}")

        tilt = _parse_tilt(data.get('tilt_scan'))

        pairwise = data.get('pairwise') or {}
        pairwise_n = _check_n_list(pairwise.get('n_list', [1]), 'pairwise.n_list')

        curve = data.get('pvalue_curve') or {}
        m_grid = curve.get('m_grid') or list(DEFAULT_PVALUE_GRID)
        if any(not isinstance(m, int) or m < 1 for m in m_grid):
            raise ConfigError("pvalue_curve.m_grid deve conter inteiros >= 1")
        if any(b < a for a, b in zip(m_grid, m_grid[1:])):
            raise ConfigError("pvalue_curve.m_grid deve ser crescente")

        options = data.get('mitigation_options') or {}
        tol = float(options.get('tol', MITIGATION_TOLERANCE))
        if not 0.0 < tol < 1.0:
            raise ConfigError(f"mitigation_options.tol fora de (0, 1): {tol}")
        max_distance = options.get('max_distance')
        if max_distance is not None and (not isinstance(max_distance, int) or max_distance < 0):
            raise ConfigError(f"max_distance inválido: {max_distance}")

        threads = data.get('threads', 1)
        if not isinstance(threads, int) or threads < 1:
            raise ConfigError(f"threads deve ser inteiro >= 1, recebeu {threads}")

        return cls(
            n_list=n_list,
            implementations=implementations,
            mitigation=mitigation,
            shots_per_setting=shots,
            seed=seed,
            noise=noise,
            tilt_scan=tilt,
            pairwise_enabled=bool(pairwise.get('enabled', True)),
            pairwise_n_list=pairwise_n,
            pvalues=bool(data.get('pvalues', True)),
            pvalue_curve=PValueCurveConfig(list(m_grid), curve.get('mean_scores')),
            mitigation_tol=tol,
            mitigation_max_distance=max_distance,
            ideal_n_list=_check_n_list(data.get('ideal_n_list', list(range(1, 9))), 'ideal_n_list'),
            resources_n_list=_check_n_list(data.get('resources_n_list', list(range(1, 9))),
                                           'resources_n_list'),
            exact=bool(data.get('exact', False)),
            threads=threads,
            output_dir=str(data.get('output_dir', 'results')),
            raw=copy.deepcopy(data),
        )


def _check_n_list(values: Any, name: str) -> List[int]:
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{name} deve ser uma lista não vazia")
    for n in values:
        if not isinstance(n, int) or not MIN_QUBITS_PER_PARTY <= n <= MAX_QUBITS_PER_PARTY:
            raise ConfigError(
                f"{name}: n = {n} fora de [{MIN_QUBITS_PER_PARTY}, {MAX_QUBITS_PER_PARTY}]")
    return list(values)


def _check_subset(values: Any, allowed, name: str) -> List[str]:
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{name} deve ser uma lista não vazia")
    unknown = [v for v in values if v not in allowed]
    if unknown:
        raise ConfigError(f"{name}: valores desconhecidos {unknown} (permitidos {list(allowed)})")
    return list(values)


def _parse_tilt(data: Optional[Dict[str, Any]]) -> Optional[TiltScanConfig]:
    if not data:
        return None
    party = data.get('party', 'A')
    if party not in ('A', 'B'):
        raise ConfigError(f"tilt_scan.party deve ser 'A' ou 'B', recebeu {party}")
    n = data.get('n', 4)
    _check_n_list([n], 'tilt_scan.n')
    implementation = data.get('implementation', 'unitary')
    if implementation not in IMPLEMENTATIONS:
        raise ConfigError(f"tilt_scan.implementation desconhecida: {implementation}")
    if implementation == 'dynamic' and n < 2:
        raise ConfigError("tilt_scan com QFT dinâmica requer n >= 2")

    qubits = data.get('qubits') or list(range(1, n + 1))
    for q in qubits:
        if not isinstance(q, int) or not 1 <= q <= n:
            raise ConfigError(f"tilt_scan: qubit {q} fora de [1, {n}]")

    angles = data.get('angles')
    if angles is None:
        angles = [math.pi * i / (DEFAULT_TILT_POINTS - 1) for i in range(DEFAULT_TILT_POINTS)]
    if not angles:
        raise ConfigError("tilt_scan.angles não pode ser vazio")
    angles = [float(a) for a in angles]
    if not all(math.isfinite(a) for a in angles):
        raise ConfigError("tilt_scan.angles contém valores não finitos")
    return TiltScanConfig(party, n, implementation, list(qubits), angles)
