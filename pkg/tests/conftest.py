"""
Fixtures compartidas: grafos pequeños, bundle SBM de juguete y CLI
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pytest
import scipy.sparse as sp

from config import config
from core.data import GraphBundle, SplitSpec, dump_bundle, dump_split, load_bundle
from core.graph import SparseGraph, build_graph


@pytest.fixture(autouse=True)
def quiet_config():
    """Sin barras de progreso; los flags globales de la CLI se restauran tras cada test"""
    threads, progress = config.THREADS, config.PROGRESS
    config.PROGRESS = False
    yield
    config.THREADS, config.PROGRESS = threads, progress


# ========== Grafos ==========

def path_graph(n: int) -> SparseGraph:
    return build_graph([(i, i + 1) for i in range(n - 1)], n)


def cycle_graph(n: int) -> SparseGraph:
    return build_graph([(i, (i + 1) % n) for i in range(n)], n)


def random_graph(n: int, p: float, seed: int) -> SparseGraph:
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    rows, cols = np.nonzero(upper)
    return build_graph(np.column_stack([rows, cols]), n)


@pytest.fixture
def p4() -> SparseGraph:
    return path_graph(4)


@pytest.fixture
def c4() -> SparseGraph:
    return cycle_graph(4)


# ========== Bundles ==========

def make_bundle(
    graph: SparseGraph,
    features: np.ndarray,
    labels: np.ndarray,
    classes: Optional[int] = None,
    name: str = "toy"
) -> GraphBundle:
    labels = np.asarray(labels, dtype=np.int64)
    return GraphBundle(
        graph=graph,
        features=sp.csr_matrix(np.asarray(features, dtype=np.float64)),
        labels=labels,
        classes=classes if classes is not None else int(labels.max()) + 1,
        name=name,
        raw_edge_lines=graph.edge_count,
    )


def sbm_bundle(per_block: int = 30, seed: int = 7) -> tuple[GraphBundle, SplitSpec]:
    """
    Dos bloques densos casi sin aristas entre sí, con características
    que también separan las clases. Un nodo de entrenamiento por clase.
    """
    rng = np.random.default_rng(seed)
    n = 2 * per_block
    labels = np.repeat([0, 1], per_block)

    same = labels[:, None] == labels[None, :]
    probability = np.where(same, 0.3, 0.005)
    upper = np.triu(rng.random((n, n)) < probability, k=1)
    rows, cols = np.nonzero(upper)
    # cadena dentro de cada bloque para que no haya nodos aislados
    chain = [(b * per_block + i, b * per_block + i + 1) for b in range(2) for i in range(per_block - 1)]
    edges = np.vstack([np.column_stack([rows, cols]), np.asarray(chain)])
    graph = build_graph(edges, n)

    dims = 16
    features = (rng.random((n, dims)) < 0.05).astype(np.float64)
    for node, label in enumerate(labels):
        block = slice(label * dims // 2, (label + 1) * dims // 2)
        features[node, block] = np.maximum(features[node, block], rng.random(dims // 2) < 0.5)
        features[node, label * dims // 2] = 1.0

    bundle = make_bundle(graph, features, labels, name="sbm")
    train = np.array([0, per_block])
    val = np.array([1, 2, per_block + 1, per_block + 2])
    test = np.setdiff1d(np.arange(n), np.concatenate([train, val]))
    return bundle, SplitSpec(train=train, val=val, test=test)


@pytest.fixture
def toy_sbm() -> tuple[GraphBundle, SplitSpec]:
    return sbm_bundle()


@pytest.fixture
def write_bundle(tmp_path: Path) -> Callable[..., Path]:
    """Escribir un bundle (y opcionalmente su partición fija) en tmp_path"""

    def write(bundle: GraphBundle, split: Optional[SplitSpec] = None, name: str = "bundle") -> Path:
        directory = dump_bundle(bundle, tmp_path / name)
        if split is not None:
            dump_split(split, directory / "split")
        return directory

    return write


@pytest.fixture
def sbm_dir(toy_sbm, write_bundle) -> Path:
    bundle, split = toy_sbm
    return write_bundle(bundle, split, name="sbm")


@pytest.fixture
def p4_dir(write_bundle) -> Path:
    features = np.eye(4)
    return write_bundle(make_bundle(path_graph(4), features, [0, 0, 1, 1]), name="p4")


@pytest.fixture
def c4_dir(write_bundle) -> Path:
    features = np.eye(4)
    return write_bundle(make_bundle(cycle_graph(4), features, [0, 1, 0, 1]), name="c4")


# ========== CLI ==========

@pytest.fixture
def cli():
    """Ejecutar la CLI sin reconfigurar el logging global"""
    from main import create_cli

    def run(*argv: str) -> int:
        return create_cli().run([str(a) for a in argv])

    return run


@pytest.fixture
def loaded_sbm(sbm_dir) -> GraphBundle:
    return load_bundle(sbm_dir)
