"""
===============================================================================
HDBellSim - Escrita de Relatórios
===============================================================================
Pasta: utils/
Arquivo: utils/report_writer.py
Descrição: Grava relatórios JSON, tabelas CSV e contagens arquivadas por
           setting no diretório de saída
===============================================================================
"""

import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger("Report")


def _to_jsonable(value: Any) -> Any:
    """Converte tipos numpy para tipos JSON nativos"""
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class ReportWriter:
    """Escreve os artefatos de um comando em output_dir"""

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    def path(self, *parts: str) -> str:
        return os.path.join(self.output_dir, *parts)

    def write_json(self, name: str, data: Mapping[str, Any]) -> str:
        path = self.path(name)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(_to_jsonable(data), f, indent=2, ensure_ascii=False)
        logger.info(f"✅ {path}")
        return path

    def write_csv(self, name: str, header: Sequence[str],
                  rows: Iterable[Sequence[Any]]) -> str:
        path = self.path(name)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_cell(v) for v in row])
        logger.info(f"✅ {path}")
        return path

    def write_counts(self, tag: str, setting: Sequence[int], counts: Dict[str, int]) -> str:
        """Contagens brutas de um par de settings: counts/{tag}_x{x}y{y}.json"""
        directory = self.path('counts')
        os.makedirs(directory, exist_ok=True)
        x, y = setting
        name = f"{tag}_x{x}y{y}.json"
        path = os.path.join(directory, name)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(dict(sorted(counts.items())), f, indent=1)
        logger.debug(f"Contagens arquivadas em {path}")
        return os.path.join('counts', name)


def _format_cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value
