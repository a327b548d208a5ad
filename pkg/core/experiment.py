"""
===============================================================================
HDBellSim - Orquestração dos Experimentos
===============================================================================
Pasta: core/
Arquivo: core/experiment.py
Descrição: Comandos ideal, run, tilt-scan, pairwise, pvalue e resources:
           monta circuitos, amostra (com ou sem ruído), mitiga, avalia o
           funcional de Bell e grava tabelas e relatórios
===============================================================================
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.bell import (
    BellResult,
    JointDistribution,
    chsh_max,
    from_counts,
    from_outcome_probabilities,
    from_probability_maps,
    ideal_distribution,
    izg,
    pairwise_from_distribution,
    pairwise_marginal,
)
from core.circuits import (
    ExperimentSpec,
    Implementation,
    Party,
    Tilt,
    build_bell_circuit,
    count_resources,
    qft_circuit,
)
from core.mitigation import build_confusion, mitigate_counts
from core.noise import noisy_sample_counts
from core.progress_tracker import ProgressTracker
from core.scheduler import DurationTable
from core.statevector import OutcomeCounts, exact_probabilities, sample_counts
from core.stats import (
    pvalue_curve,
    pvalue_from_counts,
    pvalue_from_distribution,
    zg_score_rule,
)
from utils.config_manager import ExperimentConfig
from utils.constants import (
    CHSH_LHV_BOUND,
    REPORT_SCHEMA_VERSION,
    SETTING_PAIRS,
    IDEAL_IZG_DECIMALS,
    IDEAL_IZG_EXACT,
    IDEAL_IZG_REFERENCE,
    default_shots,
    ideal_reference_tolerance,
)
from utils.report_writer import ReportWriter

logger = logging.getLogger("Experiment")

# Modo de mitigação -> (DD ligado, EM ligado)
MITIGATION_FLAGS = {
    'none': (False, False),
    'em': (False, True),
    'dd': (True, False),
    'em+dd': (True, True),
}

_IMPLEMENTATION_INDEX = {Implementation.UNITARY: 0, Implementation.DYNAMIC: 1}


# =============================================================================
# TIPOS DE RELATÓRIO
# =============================================================================

@dataclass
class CombinationResult:
    """Resultado de uma combinação (d, implementação, mitigação)"""
    n: int
    implementation: str
    mitigation: str
    status: str = "ok"
    izg: Optional[float] = None
    i_d: Optional[float] = None
    terms: Dict[str, float] = field(default_factory=dict)
    p_value: Optional[float] = None
    total_score: Optional[float] = None
    trials: Optional[int] = None
    shots_per_setting: Optional[int] = None
    exact: bool = False
    resources: Dict[str, Any] = field(default_factory=dict)
    mitigation_diagnostics: Dict[str, Any] = field(default_factory=dict)
    counts_files: Dict[str, str] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    wall_clock: float = 0.0
    error: Optional[str] = None

    @property
    def d(self) -> int:
        return 2 ** self.n

    @property
    def row_label(self) -> str:
        base = "Unitary" if self.implementation == 'unitary' else "Dynamic"
        suffix = {
            'none': "",
            'em': " (with EM)",
            'dd': " (with DD)",
            'em+dd': " (with EM and DD)",
        }[self.mitigation]
        return base + suffix

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['d'] = self.d
        return data


@dataclass
class RunReport:
    """Relatório de cmd_run"""
    seed: int
    shot_budget: str
    noise: Any
    combinations: List[CombinationResult] = field(default_factory=list)
    wall_clock: float = 0.0
    schema_version: int = REPORT_SCHEMA_VERSION

    @property
    def has_errors(self) -> bool:
        return any(c.status == "error" for c in self.combinations)

    def find(self, n: int, implementation: str, mitigation: str) -> Optional[CombinationResult]:
        for c in self.combinations:
            if (c.n, c.implementation, c.mitigation) == (n, implementation, mitigation):
                return c
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': self.schema_version,
            'command': 'run',
            'seed': self.seed,
            'shot_budget': self.shot_budget,
            'noise': self.noise,
            'wall_clock': self.wall_clock,
            'status': 'error' if self.has_errors else 'ok',
            'combinations': [c.to_dict() for c in self.combinations],
        }


# =============================================================================
# SEEDS
# =============================================================================

def setting_seed(seed: int, n: int, implementation: Implementation, dd: bool,
                 setting: Tuple[int, int]) -> int:
    """
    Seed de um par de settings. Não depende do modo EM, de modo que
    'none'/'em' (e 'dd'/'em+dd') avaliam as mesmas contagens.
    """
    entropy = [seed, n, _IMPLEMENTATION_INDEX[implementation], int(dd), setting[0], setting[1]]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


# =============================================================================
# EXECUTOR
# =============================================================================

class ExperimentRunner:
    """Executa os comandos a partir de uma ExperimentConfig"""

    def __init__(self, config: ExperimentConfig, writer: Optional[ReportWriter] = None,
                 tracker: Optional[ProgressTracker] = None):
        self.config = config
        self.writer = writer if writer is not None else ReportWriter(config.output_dir)
        self.tracker = tracker if tracker is not None else ProgressTracker()
        self.noise = config.noise if not config.is_ideal else None
        self.durations = self.noise.durations if self.noise is not None else DurationTable()

    # -------------------------------------------------------------------------
    # Auxiliares de avaliação
    # -------------------------------------------------------------------------

    def _shots(self, n: int) -> int:
        return self.config.shots_per_setting or default_shots(n)

    def _circuits(self, n: int, implementation: Implementation,
                  tilt: Optional[Tilt] = None) -> Dict[Tuple[int, int], Any]:
        return {
            s: build_bell_circuit(ExperimentSpec(n, implementation, s, tilt=tilt,
                                                 noise=self.noise, shots=self._shots(n),
                                                 seed=self.config.seed))
            for s in SETTING_PAIRS
        }

    @staticmethod
    def exact_joint(circuits: Dict[Tuple[int, int], Any], n: int) -> JointDistribution:
        return from_outcome_probabilities(
            {s: exact_probabilities(c) for s, c in circuits.items()}, n)

    def _sample(self, circuits: Dict[Tuple[int, int], Any], n: int,
                implementation: Implementation, dd: bool) -> Tuple[Dict, Dict[str, int]]:
        counts, seeds = {}, {}
        shots = self._shots(n)
        for s, circuit in circuits.items():
            seed = setting_seed(self.config.seed, n, implementation, dd, s)
            seeds[f"x{s[0]}y{s[1]}"] = seed
            if self.noise is None:
                counts[s] = sample_counts(circuit, shots, seed)
            else:
                counts[s] = noisy_sample_counts(circuit, self.noise, dd, shots, seed)
        return counts, seeds

    def _mitigated_joint(self, circuits, counts: Dict[Tuple[int, int], OutcomeCounts],
                         n: int) -> Tuple[JointDistribution, Dict[str, Any]]:
        maps, diagnostics = {}, {}
        for s, circuit in circuits.items():
            confusion = build_confusion(counts[s].counts, self.noise.readout_matrices(circuit),
                                        self.config.mitigation_max_distance)
            outcome = mitigate_counts(counts[s], confusion, self.config.mitigation_tol)
            maps[s] = outcome['probabilities']
            diagnostics[f"x{s[0]}y{s[1]}"] = outcome['diagnostics']
        return from_probability_maps(maps, n), diagnostics

    # -------------------------------------------------------------------------
    # cmd_ideal
    # -------------------------------------------------------------------------

    def cmd_ideal(self) -> List[Dict[str, Any]]:
        """Valores ideais de I_ZG por simulação exata (sem amostragem)"""
        rows = []
        self.tracker.start(len(self.config.ideal_n_list))
        for n in self.config.ideal_n_list:
            self.tracker.check_cancelled()
            d = 2 ** n
            result = izg(self.exact_joint(self._circuits(n, Implementation.UNITARY), n))
            analytic = izg(ideal_distribution(d)).izg
            reference = IDEAL_IZG_REFERENCE.get(n)
            matches = (reference is not None
                       and abs(result.izg - reference) <= ideal_reference_tolerance(n))
            if reference is not None and not matches:
                logger.warning(f"⚠️ d = {d}: I_ZG = {result.izg:.4f} fora da tolerância "
                               f"da referência {reference}")
            rows.append({
                'n': n,
                'd': d,
                'izg': result.izg,
                'i_d': result.i_d,
                'izg_analytic': analytic,
                'reference': reference,
                'expected': IDEAL_IZG_EXACT.get(n, reference),
                'matches_reference': matches,
                'rounded': round(result.izg, IDEAL_IZG_DECIMALS.get(n, 4)),
            })
            self.tracker.advance(f"d = {d}: I_ZG = {result.izg:.4f}")

        self.writer.write_csv(
            'ideal_table.csv',
            ['n', 'd', 'izg', 'i_d', 'izg_analytic', 'reference', 'expected',
             'matches_reference', 'rounded'],
            [[r['n'], r['d'], r['izg'], r['i_d'], r['izg_analytic'], r['reference'],
              r['expected'], r['matches_reference'], r['rounded']] for r in rows])
        return rows

    # -------------------------------------------------------------------------
    # cmd_run
    # -------------------------------------------------------------------------

    def _groups(self) -> List[Tuple[int, Implementation, bool, List[str]]]:
        """Agrupa combinações que compartilham as mesmas contagens"""
        groups = []
        for n in self.config.n_list:
            for label in self.config.implementations:
                implementation = Implementation.from_label(label)
                if self.noise is None:
                    groups.append((n, implementation, False, ['none']))
                    continue
                modes = list(self.config.mitigation)
                if implementation is Implementation.UNITARY:
                    modes = [m for m in modes if not MITIGATION_FLAGS[m][0]]
                for dd in (False, True):
                    selected = [m for m in modes if MITIGATION_FLAGS[m][0] == dd]
                    if selected:
                        groups.append((n, implementation, dd, selected))
        return groups

    def _run_group(self, n: int, implementation: Implementation, dd: bool,
                   modes: List[str]) -> List[CombinationResult]:
        label = implementation.short_label
        results = [CombinationResult(n, label, mode) for mode in modes]
        if implementation is Implementation.DYNAMIC and n < 2:
            for r in results:
                r.status = "skipped"
                r.error = "QFT dinâmica requer n >= 2"
            return results

        start = time.time()
        try:
            circuits = self._circuits(n, implementation)
            resources = count_resources(circuits[(1, 1)], self.durations).to_dict()
            shots = self._shots(n)
            trials = len(SETTING_PAIRS) * shots
            rule = zg_score_rule(2 ** n)

            exact = self.noise is None and self.config.exact
            counts, seeds, files = {}, {}, {}
            if exact:
                base_dist = self.exact_joint(circuits, n)
            else:
                counts, seeds = self._sample(circuits, n, implementation, dd)
                base_dist = from_counts(counts, n)
                tag = f"n{n}_{label}" + ("_dd" if dd else "")
                for s, c in counts.items():
                    files[f"x{s[0]}y{s[1]}"] = self.writer.write_counts(tag, s, c.to_dict())
        except Exception as e:
            logger.error(f"❌ n={n} {label}: {e}")
            for r in results:
                r.status, r.error = "error", f"{type(e).__name__}: {e}"
                r.wall_clock = time.time() - start
            return results

        for r in results:
            try:
                diagnostics = {}
                if MITIGATION_FLAGS[r.mitigation][1]:
                    dist, diagnostics = self._mitigated_joint(circuits, counts, n)
                else:
                    dist = base_dist
                result: BellResult = izg(dist)

                if counts and not MITIGATION_FLAGS[r.mitigation][1]:
                    c_total, m, p = pvalue_from_counts(counts, rule, n)
                else:
                    c_total, m, p = pvalue_from_distribution(dist, trials, rule)

                r.izg, r.i_d, r.terms = result.izg, result.i_d, result.terms()
                r.p_value = p if self.config.pvalues else None
                r.total_score, r.trials = c_total, m
                r.shots_per_setting, r.exact = shots, exact
                r.resources, r.mitigation_diagnostics = resources, diagnostics
                r.counts_files, r.seeds = files, seeds
            except Exception as e:
                logger.error(f"❌ n={n} {label} {r.mitigation}: {e}")
                r.status, r.error = "error", f"{type(e).__name__}: {e}"
            r.wall_clock = time.time() - start
        return results

    def cmd_run(self) -> RunReport:
        """Executa todas as combinações e grava report.json, results.csv e summary_table.csv"""
        start = time.time()
        groups = self._groups()
        shot_budget = (f"{self.config.shots_per_setting} shots por par de settings"
                       if self.config.shots_per_setting
                       else "m = 2 x n x 1024 shots por par de settings")
        report = RunReport(
            seed=self.config.seed,
            shot_budget=shot_budget,
            noise=self.noise.to_dict() if self.noise is not None else "ideal",
        )
        self.tracker.start(len(groups))

        def task(group):
            self.tracker.check_cancelled()
            results = self._run_group(*group)
            n, implementation, dd, _ = group
            self.tracker.advance(f"n={n} {implementation.short_label}{' DD' if dd else ''}")
            return results

        try:
            if self.config.threads > 1 and len(groups) > 1:
                with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                    futures = [pool.submit(task, g) for g in groups]
                    for future in futures:
                        report.combinations.extend(future.result())
            else:
                for g in groups:
                    report.combinations.extend(task(g))
        finally:
            report.wall_clock = time.time() - start
            self._write_run_outputs(report)
        return report

    def _write_run_outputs(self, report: RunReport):
        self.writer.write_json('report.json', report.to_dict())
        ok = [c for c in report.combinations if c.status == "ok"]
        self.writer.write_csv(
            'results.csv',
            ['d', 'n', 'implementation', 'mitigation', 'status', 'izg', 'i_d', 'p_value'],
            [[c.d, c.n, c.implementation, c.mitigation, c.status, c.izg, c.i_d, c.p_value]
             for c in report.combinations])

        # Tabela de resumo: uma linha por implementação/mitigação, uma coluna por d
        columns = sorted({c.n for c in ok})
        labels: Dict[str, Dict[int, float]] = {}
        for c in ok:
            labels.setdefault(c.row_label, {})[c.n] = c.izg
        self.writer.write_csv(
            'summary_table.csv',
            ['row'] + [f"d=2^{n}" for n in columns],
            [[label] + [values.get(n, '') for n in columns] for label, values in labels.items()])

        if self.config.pvalues and ok:
            rows = []
            for c in ok:
                rule = zg_score_rule(c.d)
                mean = c.total_score / c.trials
                for m, p in pvalue_curve(mean, rule, self.config.pvalue_curve.m_grid):
                    rows.append([c.row_label, m, p, mean, c.d, rule.name])
            self.writer.write_csv('run_pvalue_curves.csv',
                                  ['label', 'm', 'p', 'mean_score', 'd', 'rule'], rows)

    # -------------------------------------------------------------------------
    # cmd_tilt_scan
    # -------------------------------------------------------------------------

    def evaluate(self, n: int, implementation: Implementation,
                 tilt: Optional[Tilt] = None) -> BellResult:
        """Avaliação completa: exata sem ruído, amostrada (sem mitigação) com ruído"""
        circuits = self._circuits(n, implementation, tilt)
        if self.noise is None:
            return izg(self.exact_joint(circuits, n))
        counts, _ = self._sample(circuits, n, implementation, dd=False)
        return izg(from_counts(counts, n))

    def cmd_tilt_scan(self) -> List[Dict[str, Any]]:
        """Curvas I_ZG(theta) por qubit com RY no eixo de medição"""
        scan = self.config.tilt_scan
        if scan is None:
            raise ValueError("tilt_scan ausente na configuração")
        if not scan.angles:
            raise ValueError("Grade de ângulos vazia")

        implementation = Implementation.from_label(scan.implementation)
        party = Party(scan.party)
        baseline = self.evaluate(scan.n, implementation).izg
        logger.info(f"Linha de base n={scan.n}: I_ZG = {baseline:.6f}")

        rows = []
        self.tracker.start(len(scan.qubits) * len(scan.angles))
        for qubit in scan.qubits:
            for theta in scan.angles:
                self.tracker.check_cancelled()
                value = self.evaluate(scan.n, implementation, Tilt(party, qubit, theta)).izg
                rows.append({
                    'party': party.value,
                    'qubit': qubit,
                    'theta': theta,
                    'izg': value,
                    'baseline': baseline,
                    'delta': value - baseline,
                })
                self.tracker.advance(f"qubit {qubit}, theta = {theta:.4f}")

        self.writer.write_csv(
            'tilt_scan.csv',
            ['party', 'qubit', 'theta', 'izg', 'baseline', 'delta'],
            [[r['party'], r['qubit'], r['theta'], r['izg'], r['baseline'], r['delta']] for r in rows])
        return rows

    # -------------------------------------------------------------------------
    # cmd_pairwise
    # -------------------------------------------------------------------------

    def pairwise_matrix(self, n: int) -> np.ndarray:
        """Matriz n x n de I_max (linha: dígito de A, coluna: dígito de B)"""
        circuits = self._circuits(n, Implementation.UNITARY)
        matrix = np.zeros((n, n))
        if self.noise is None:
            dist = self.exact_joint(circuits, n)
            for i in range(n):
                for j in range(n):
                    matrix[i, j] = chsh_max(pairwise_from_distribution(dist, i, j))
        else:
            counts, _ = self._sample(circuits, n, Implementation.UNITARY, dd=False)
            for i in range(n):
                for j in range(n):
                    matrix[i, j] = chsh_max(pairwise_marginal(counts, i, j))
        return matrix

    def cmd_pairwise(self) -> Dict[int, Dict[str, Any]]:
        if not self.config.pairwise_enabled:
            logger.info("⚠️ Análise por pares desabilitada na configuração")
            return {}
        results = {}
        rows = []
        self.tracker.start(len(self.config.pairwise_n_list))
        for n in self.config.pairwise_n_list:
            self.tracker.check_cancelled()
            matrix = self.pairwise_matrix(n)
            violating = int(np.sum(matrix > CHSH_LHV_BOUND))
            results[n] = {'matrix': matrix.tolist(), 'violating_pairs': violating}
            for i in range(n):
                for j in range(n):
                    rows.append([n, i + 1, j + 1, matrix[i, j], bool(matrix[i, j] > CHSH_LHV_BOUND)])
            self.tracker.advance(f"n={n}: {violating} de {n * n} pares violam CHSH")

        self.writer.write_csv('pairwise.csv', ['n', 'qubit_a', 'qubit_b', 'i_max', 'violates'], rows)
        self.writer.write_json('pairwise.json', {
            'schema_version': REPORT_SCHEMA_VERSION,
            'command': 'pairwise',
            'results': {str(n): r for n, r in results.items()},
        })
        return results

    # -------------------------------------------------------------------------
    # cmd_pvalue
    # -------------------------------------------------------------------------

    def cmd_pvalue(self) -> List[Dict[str, Any]]:
        """Curvas p-valor vs número de tentativas (regra ZG)"""
        curve = self.config.pvalue_curve
        if curve.mean_scores:
            targets = [(label, int(entry['n']), float(entry['mean']))
                       for label, entry in curve.mean_scores.items()]
        else:
            targets = [(f"ideal d=2^{n}", n, izg(ideal_distribution(2 ** n)).izg)
                       for n in self.config.n_list]

        rows = []
        for label, n, mean in targets:
            rule = zg_score_rule(2 ** n)
            for m, p in pvalue_curve(mean, rule, curve.m_grid):
                rows.append({'label': label, 'm': m, 'p': p, 'mean_score': mean,
                             'd': 2 ** n, 'rule': rule.name})
            logger.info(f"{label}: média {mean:.4f}, p(m={curve.m_grid[-1]}) = {rows[-1]['p']:.3e}")

        self.writer.write_csv(
            'pvalue_curves.csv', ['label', 'm', 'p', 'mean_score', 'd', 'rule'],
            [[r['label'], r['m'], r['p'], r['mean_score'], r['d'], r['rule']] for r in rows])
        return rows

    # -------------------------------------------------------------------------
    # cmd_resources
    # -------------------------------------------------------------------------

    def cmd_resources(self) -> List[Dict[str, Any]]:
        """Contagem de recursos do circuito completo e do estágio de medição"""
        rows = []
        for n in self.config.resources_n_list:
            for label in self.config.implementations:
                implementation = Implementation.from_label(label)
                if implementation is Implementation.DYNAMIC and n < 2:
                    continue
                bell = build_bell_circuit(ExperimentSpec(n, implementation, (1, 1)))
                stage = qft_circuit(n, dynamic=implementation is Implementation.DYNAMIC)
                for scope, circuit in (('bell_circuit', bell), ('measurement_stage', stage)):
                    report = count_resources(circuit, self.durations)
                    rows.append({'n': n, 'implementation': label, 'scope': scope, **report.to_dict()})

        header = ['n', 'implementation', 'scope', 'one_qubit_gates', 'two_qubit_gates',
                  'mid_circuit_measurements', 'conditioned_gates', 'depth', 'estimated_runtime']
        self.writer.write_csv('resources.csv', header, [[r[h] for h in header] for r in rows])
        return rows
