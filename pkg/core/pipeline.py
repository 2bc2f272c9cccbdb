"""
Orquestación compartida por los comandos: aprendizaje de pesos,
construcción del filtro y ejecuciones sembradas
"""

from __future__ import annotations

import logging
import time
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from config import config
from core.data import GraphBundle, SplitSpec, fixed_split, random_split
from core.errors import GraphError, SupportOverlapError
from core.graph import (
    AffinityMatrix,
    NeighborSupport,
    OrderMatrix,
    affinity,
    order_matrices,
    overlapping_pairs,
    power_supports,
)
from core.lasso import (
    ProportionSchedule,
    WeightMatrix,
    assemble_filter,
    learn_order_weights,
    normalize_filter,
    unit_weights,
)
from core.model import TrainConfig, TrainResult, row_normalize, train
from core.qp import SolverConfig
from utils.helpers import format_number, format_time, memory_usage

logger = logging.getLogger(__name__)

FILTER_KINDS = ("gcn", "hwgcn", "unweighted", "mlp")
MODES = ("distance", "power")


def supports_for(bundle: GraphBundle, K: int, mode: str = "distance", threads: Optional[int] = None) -> list[NeighborSupport]:
    """Soportes de orden 1..K; en modo distancia se verifica que sean disjuntos"""
    if mode not in MODES:
        raise GraphError(f"modo desconocido: {mode}")
    if mode == "power":
        return power_supports(bundle.graph, K)

    supports = order_matrices(bundle.graph, K, threads)
    overlaps = overlapping_pairs(supports)
    if overlaps:
        raise SupportOverlapError(f"matrices de orden solapadas: {overlaps}")
    return supports


def lasso_features(bundle: GraphBundle, row_normalize_lasso: bool = True) -> np.ndarray:
    X = row_normalize(bundle.features) if row_normalize_lasso else bundle.features
    return X.toarray() if sp.issparse(X) else np.asarray(X)


def learn_weights(
    bundle: GraphBundle,
    K: int,
    *,
    mode: str = "distance",
    schedule: Optional[ProportionSchedule] = None,
    solver_cfg: Optional[SolverConfig] = None,
    refit: bool = True,
    row_normalize_lasso: bool = True,
    threads: Optional[int] = None
) -> list[WeightMatrix]:
    """W^(2)..W^(K) para el bundle"""
    if K < 2:
        raise GraphError(f"se necesita K >= 2 para aprender pesos (recibido {K})")

    started = time.perf_counter()
    logger.info(f"{config.LOADING_EMOJI} Aprendiendo pesos de orden 2..{K} (modo {mode})")
    supports = supports_for(bundle, K, mode, threads)
    X = lasso_features(bundle, row_normalize_lasso)
    S = affinity(bundle.graph)

    weights = []
    for ordk in supports[1:]:
        t0 = time.perf_counter()
        wm = learn_order_weights(bundle.graph, X, ordk, S, schedule, solver_cfg, refit=refit, threads=threads)
        weights.append(wm)
        logger.info(
            f"{config.STATS_EMOJI} k={ordk.k}: {format_number(wm.nnz)} pesos, "
            f"{format_number(wm.solved_rows)} filas resueltas en {format_time(time.perf_counter() - t0)}"
        )

    logger.info(
        f"{config.SUCCESS_EMOJI} Pesos 2..{K} aprendidos en {format_time(time.perf_counter() - started)} "
        f"(memoria {memory_usage()})"
    )
    return weights


def build_filter(
    bundle: GraphBundle,
    kind: str = "gcn",
    *,
    weights: Sequence[WeightMatrix] = (),
    max_order: Optional[int] = None,
    symmetrize: bool = True,
    mode: str = "distance",
    threads: Optional[int] = None
) -> AffinityMatrix:
    """
    gcn: S̃ de A; hwgcn: A + Σ W^(k) con k <= max_order;
    unweighted: A + Σ A^(k); mlp: identidad
    """
    if kind not in FILTER_KINDS:
        raise GraphError(f"tipo de filtro desconocido: {kind}")
    g = bundle.graph

    if kind == "gcn":
        return affinity(g)
    if kind == "mlp":
        return AffinityMatrix(values=sp.identity(g.n, dtype=np.float64, format="csr"))

    first = OrderMatrix(k=1, matrix=g.adjacency)
    if kind == "unweighted":
        if max_order is None or max_order < 2:
            return affinity(g)
        higher = [unit_weights(ordk) for ordk in supports_for(bundle, max_order, mode, threads)[1:]]
    else:
        higher = [wm for wm in weights if max_order is None or wm.k <= max_order]

    composite = assemble_filter(first, higher, mode=mode, symmetrize=symmetrize)
    return normalize_filter(composite)


def make_split(
    bundle: GraphBundle,
    kind: str,
    seed: int,
    *,
    per_class: int = 20,
    split_dir=None,
    val_size: int = 500,
    test_size: int = 1000
) -> SplitSpec:
    if kind == "fixed":
        return fixed_split(bundle, split_dir)
    return random_split(bundle, per_class, seed, val_size=val_size, test_size=test_size)


def run_trials(
    bundle: GraphBundle,
    S: AffinityMatrix,
    *,
    split: str = "fixed",
    per_class: int = 20,
    seeds: Sequence[int] = (0,),
    cfg: Optional[TrainConfig] = None,
    split_dir=None,
    val_size: int = 500,
    test_size: int = 1000,
    on_result: Optional[Callable[[TrainResult], None]] = None
) -> list[TrainResult]:
    """Una ejecución por semilla; en particiones aleatorias la partición se remuestrea con cada semilla"""
    cfg = cfg or TrainConfig()
    X = row_normalize(bundle.features)
    fixed = make_split(bundle, "fixed", 0, split_dir=split_dir) if split == "fixed" else None

    results = []
    for seed in seeds:
        partition = fixed or make_split(bundle, split, seed, per_class=per_class,
                                   val_size=val_size, test_size=test_size)
        result = train(S, X, bundle.labels, partition, cfg.with_seed(seed))
        logger.debug(f"Semilla {seed}: exactitud {result.test_accuracy:.4f} ({result.epochs_run} épocas)")
        results.append(result)
        if on_result is not None:
            on_result(result)
    return results
