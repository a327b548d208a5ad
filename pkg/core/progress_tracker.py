"""
===============================================================================
HDBellSim - Progresso e Cancelamento
===============================================================================
Pasta: core/
Arquivo: core/progress_tracker.py
Descrição: Contagem de combinações concluídas pelos workers, com callback
           e cancelamento cooperativo
===============================================================================
"""

import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

logger = logging.getLogger("Progress")


class CancelledException(Exception):
    """Execução interrompida por ProgressTracker.cancel()"""


@dataclass(frozen=True)
class ProgressInfo:
    """Retrato do progresso após uma combinação concluída"""
    done: int
    total: int
    label: str
    elapsed: float

    @property
    def fraction(self) -> float:
        return self.done / self.total if self.total else 0.0

    @property
    def remaining(self) -> Optional[float]:
        """Estimativa linear do tempo restante (None antes da primeira etapa)"""
        if self.done == 0:
            return None
        return self.elapsed / self.done * (self.total - self.done)


def log_progress(info: ProgressInfo):
    """Callback padrão: uma linha de log por combinação concluída"""
    eta = f", faltam ~{info.remaining:.0f}s" if info.remaining else ""
    logger.info(f"🔄 [{info.done}/{info.total}] {info.label} "
                f"({100 * info.fraction:.0f}%, {info.elapsed:.1f}s{eta})")


class ProgressTracker:
    """
    Progresso compartilhado entre os workers de um comando.

    `advance` pode ser chamado de várias threads; o callback roda fora do
    lock. `cancel` só é observado no próximo `check_cancelled`.
    """

    def __init__(self, callback: Optional[Callable[[ProgressInfo], None]] = log_progress):
        self.callback = callback
        self._cancel = threading.Event()
        self._lock = threading.Lock()
        self._t0 = time.perf_counter()
        self._done = 0
        self._total = 0

    def start(self, total: int):
        with self._lock:
            self._cancel.clear()
            self._total = total
            self._done = 0
            self._t0 = time.perf_counter()

    def advance(self, label: str) -> ProgressInfo:
        with self._lock:
            self._done += 1
            info = ProgressInfo(self._done, self._total, label, time.perf_counter() - self._t0)
        if self.callback is not None:
            self.callback(info)
        return info

    def cancel(self):
        self._cancel.set()

    @property
    def cancelled(self) -> bool:
        return self._cancel.is_set()

    def check_cancelled(self):
        if self._cancel.is_set():
            raise CancelledException("Execução cancelada")
