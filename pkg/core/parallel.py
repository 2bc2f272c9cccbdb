"""
Pool de trabajadores determinista
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np

from config import config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int]) -> int:
    """Número efectivo de hilos (flag > entorno > núcleos físicos)"""
    if threads is None:
        threads = config.THREADS
    return max(1, int(threads))


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    threads: Optional[int] = None
) -> list[R]:
    """
    Aplicar `fn` a cada elemento conservando el orden de entrada.
    El resultado no depende del número de hilos.
    """
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers <= 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def chunked(indices: Sequence[int] | np.ndarray, chunks: int) -> list[np.ndarray]:
    """Partir una secuencia de índices en bloques contiguos"""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        return []
    chunks = max(1, min(chunks, indices.size))
    return [part for part in np.array_split(indices, chunks) if part.size]
