#!/usr/bin/env python3
"""
===============================================================================
HDBellSim - Teste de Bell CGLMP em Alta Dimensão
===============================================================================
Versão: 1.0.0

Descrição:
    Simulador de um teste de Bell CGLMP entre dois sistemas de dimensão
    d = 2^n codificados em n qubits por parte, com medição via QFT
    unitária ou dinâmica (medições no meio do circuito + feed-forward).

Funcionalidades:
    - Valores ideais de I_ZG por simulação exata
    - Execução completa com ruído, mitigação de leitura (EM) e DD
    - Varredura de tilt por qubit
    - Análise CHSH por pares de qubits
    - Curvas de p-valor (limite de Bentkus)
    - Contagem de recursos dos circuitos

Uso:
    python main.py [--config config.json] [--seed N] [--out DIR] <comando>
    comandos: ideal | run | tilt-scan | pairwise | pvalue | resources

===============================================================================
"""

import argparse
import importlib
import logging
import os
import signal
import sys

# ============================================================================
# CONFIGURAÇÃO DE PATH
# ============================================================================
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
if BASE_DIR not in sys.path:
    sys.path.insert(0, BASE_DIR)

from utils.constants import APP_NAME, EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUNTIME_ERROR
from utils.logging_setup import configure_logging

logger = logging.getLogger("Main")

REQUIRED_MODULES = ('numpy', 'scipy')
COMMANDS = ('ideal', 'run', 'tilt-scan', 'pairwise', 'pvalue', 'resources')


def check_dependencies() -> bool:
    """Verifica se numpy e scipy estão instalados"""
    missing = []
    for module in REQUIRED_MODULES:
        try:
            importlib.import_module(module)
        except ImportError:
            missing.append(module)

    if missing:
        print("=" * 60)
        print("ERRO: Dependências faltando!")
        print("=" * 60)
        print(f"\nInstale com: pip install {' '.join(missing)}")
        print("\nOu execute: pip install -r requirements.txt")
        print("=" * 60)
        return False

    return True


def cancel_on_interrupt(tracker):
    """
    Ctrl-C pede cancelamento cooperativo ao tracker; um segundo Ctrl-C
    interrompe de imediato. Retorna o handler anterior.
    """
    def handler(signum, frame):
        if tracker.cancelled:
            raise KeyboardInterrupt
        logger.warning("⚠️ Cancelamento solicitado; aguardando a etapa atual (Ctrl-C de novo interrompe)")
        tracker.cancel()

    return signal.signal(signal.SIGINT, handler)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdbellsim",
        description="Simulador do teste de Bell CGLMP em alta dimensão")
    parser.add_argument('--config', help="Arquivo JSON de configuração")
    parser.add_argument('--seed', type=int, help="Seed mestre (inteiro >= 0)")
    parser.add_argument('--exact', action='store_true',
                        help="Distribuições exatas quando não há ruído")
    parser.add_argument('--out', help="Diretório de saída")
    parser.add_argument('--threads', type=int, help="Workers para as combinações")
    parser.add_argument('--verbose', action='store_true', help="Log em nível DEBUG")
    parser.add_argument('--quiet', action='store_true', help="Apenas avisos e erros")
    parser.add_argument('command', choices=COMMANDS)
    return parser


def print_banner(command: str, output_dir: str):
    print("=" * 60)
    print(f"{APP_NAME} - {command}")
    print(f"Saída: {output_dir}")
    print("=" * 60)


def print_summary(command: str, result) -> int:
    """Resumo no console; retorna o código de saída"""
    if command == 'run':
        for c in result.combinations:
            if c.status == "ok":
                p = f"p = {c.p_value:.3e}" if c.p_value is not None else ""
                print(f"  d={c.d:<4} {c.row_label:<28} I_ZG = {c.izg:.4f}  {p}")
            else:
                print(f"  d={c.d:<4} {c.row_label:<28} {c.status}: {c.error}")
        if result.has_errors:
            print("❌ Houve combinações com erro (ver report.json)")
            return EXIT_RUNTIME_ERROR
    elif command == 'ideal':
        for row in result:
            print(f"  d={row['d']:<4} I_ZG = {row['izg']:.4f}  (referência {row['reference']})")
    elif command == 'pairwise':
        for n, data in result.items():
            print(f"  n={n}: {data['violating_pairs']} de {n * n} pares violam CHSH")
    else:
        print(f"  {len(result)} linhas gravadas")
    print("✅ Concluído")
    return EXIT_OK


def main(argv=None) -> int:
    """Função principal"""
    args = build_parser().parse_args(argv)
    configure_logging(verbose=args.verbose, quiet=args.quiet)

    # Verifica dependências
    if not check_dependencies():
        return EXIT_RUNTIME_ERROR

    from core.experiment import ExperimentRunner
    from core.progress_tracker import CancelledException, ProgressTracker
    from utils.config_manager import ConfigError, ConfigManager

    try:
        manager = ConfigManager(args.config)
        manager.apply_overrides(seed=args.seed, output_dir=args.out,
                                exact=args.exact, threads=args.threads)
        config = manager.to_experiment_config()
    except ConfigError as e:
        print(f"❌ Configuração inválida: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    print_banner(args.command, config.output_dir)
    manager.save(os.path.join(config.output_dir, 'config_effective.json'))

    tracker = ProgressTracker()
    runner = ExperimentRunner(config, tracker=tracker)
    previous = cancel_on_interrupt(tracker)
    try:
        result = getattr(runner, 'cmd_' + args.command.replace('-', '_'))()
    except (CancelledException, KeyboardInterrupt):
        print("⚠️ Execução cancelada", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        logger.exception(f"❌ Falha em '{args.command}': {e}")
        return EXIT_RUNTIME_ERROR
    finally:
        signal.signal(signal.SIGINT, previous)
    return print_summary(args.command, result)


if __name__ == "__main__":
    sys.exit(main())
