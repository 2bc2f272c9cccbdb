"""
Bundles de grafos en texto (TSV) y particiones train/val/test
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np
import scipy.sparse as sp

from config import config
from core.errors import BundleError, GraphError, SplitError
from core.graph import SparseGraph, build_graph

logger = logging.getLogger(__name__)

MANIFEST = "manifest.tsv"
GRAPH = "graph.tsv"
FEATURES = "features.tsv"
LABELS = "labels.tsv"
SPLIT_DIR = "split"
SPLIT_FILES = ("train", "val", "test")

REQUIRED_KEYS = ("n", "features", "classes")
OPTIONAL_KEYS = ("name", "edges", "raw_edges")


@dataclass(frozen=True, eq=False)
class GraphBundle:
    graph: SparseGraph
    features: sp.csr_matrix
    labels: np.ndarray
    classes: int
    name: str = ""
    raw_edge_lines: int = 0
    path: Optional[Path] = None

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    @property
    def X(self) -> sp.csr_matrix:
        return self.features

    def class_members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


@dataclass(frozen=True, eq=False)
class SplitSpec:
    """Índices de train/val/test disjuntos"""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    kind: str = "fixed"
    per_class: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        for name in SPLIT_FILES:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).ravel())
        if self.kind not in ("fixed", "random"):
            raise SplitError(f"tipo de partición desconocido: {self.kind}")

        train, val, test = (set(getattr(self, name).tolist()) for name in SPLIT_FILES)
        overlap = (train & val) | (train & test) | (val & test)
        if overlap:
            raise SplitError(f"conjuntos solapados en {len(overlap)} nodos (p. ej. {min(overlap)})")

    def sizes(self) -> dict[str, int]:
        return {name: int(getattr(self, name).size) for name in SPLIT_FILES}


# ========== Lectura ==========

def _read_lines(path: Path) -> Iterator[tuple[int, list[str]]]:
    if not path.is_file():
        raise BundleError("archivo no encontrado", path)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            yield line_no, line.split("\t")


def _read_manifest(path: Path) -> dict[str, str]:
    manifest: dict[str, str] = {}
    for line_no, parts in _read_lines(path):
        if len(parts) != 2:
            raise BundleError("se esperaba `clave<TAB>valor`", path, line_no)
        key, value = parts
        if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
            raise BundleError(f"clave desconocida: {key}", path, line_no)
        if key != "name":
            try:
                if int(value) < 0:
                    raise ValueError
            except ValueError:
                raise BundleError(f"valor no entero para {key}: {value!r}", path, line_no) from None
        manifest[key] = value

    missing = [key for key in REQUIRED_KEYS if key not in manifest]
    if missing:
        raise BundleError(f"faltan claves en el manifiesto: {', '.join(missing)}", path)
    return manifest


def _int_fields(parts: list[str], count: int, path: Path, line_no: int) -> list[int]:
    if len(parts) < count:
        raise BundleError(f"se esperaban {count} columnas", path, line_no)
    try:
        return [int(p) for p in parts[:count]]
    except ValueError:
        raise BundleError(f"entero malformado en {parts!r}", path, line_no) from None


def load_bundle(directory: Union[str, Path]) -> GraphBundle:
    """Leer y validar un bundle (manifest.tsv, graph.tsv, features.tsv, labels.tsv)"""
    directory = Path(directory)
    if not directory.is_dir():
        raise BundleError("directorio de bundle no encontrado", directory)

    manifest_path = directory / MANIFEST
    manifest = _read_manifest(manifest_path)
    n, c, classes = (int(manifest[key]) for key in REQUIRED_KEYS)
    if n < 1:
        raise BundleError("el manifiesto declara n < 1", manifest_path)

    # Aristas
    graph_path = directory / GRAPH
    pairs: list[tuple[int, int]] = []
    for line_no, parts in _read_lines(graph_path):
        if len(parts) != 2:
            raise BundleError("se esperaba `u<TAB>v`", graph_path, line_no)
        u, v = _int_fields(parts, 2, graph_path, line_no)
        if not (0 <= u < n and 0 <= v < n):
            raise BundleError(f"nodo fuera de rango en ({u}, {v})", graph_path, line_no)
        pairs.append((u, v))

    if "edges" in manifest and int(manifest["edges"]) != len(pairs):
        raise BundleError(
            f"el manifiesto declara {manifest['edges']} aristas y graph.tsv tiene {len(pairs)}",
            manifest_path
        )
    try:
        graph = build_graph(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), n)
    except GraphError as e:
        raise BundleError(str(e), graph_path) from e
    raw_edge_lines = len(pairs)
    if "raw_edges" in manifest:
        raw_edge_lines = int(manifest["raw_edges"])
        if raw_edge_lines < len(pairs):
            raise BundleError(
                f"raw_edges ({raw_edge_lines}) es menor que las {len(pairs)} líneas de graph.tsv", manifest_path
            )
        graph = replace(graph, dropped=graph.dropped + raw_edge_lines - len(pairs))
    if graph.dropped:
        logger.warning(f"{config.WARNING_EMOJI} {graph.dropped} aristas duplicadas o self-loops descartadas")

    # Características
    features_path = directory / FEATURES
    rows, cols, values = [], [], []
    seen: set[tuple[int, int]] = set()
    for line_no, parts in _read_lines(features_path):
        if len(parts) != 3:
            raise BundleError("se esperaba `nodo<TAB>índice<TAB>valor`", features_path, line_no)
        node, index = _int_fields(parts, 2, features_path, line_no)
        try:
            value = float(parts[2])
        except ValueError:
            raise BundleError(f"valor malformado: {parts[2]!r}", features_path, line_no) from None
        if not (0 <= node < n and 0 <= index < c) or not np.isfinite(value):
            raise BundleError(f"tripleta fuera de rango: {parts!r}", features_path, line_no)
        if (node, index) in seen:
            raise BundleError(f"tripleta repetida para ({node}, {index})", features_path, line_no)
        seen.add((node, index))
        rows.append(node)
        cols.append(index)
        values.append(value)
    features = sp.csr_matrix((np.asarray(values, dtype=np.float64), (rows, cols)), shape=(n, c))
    features.sort_indices()

    # Etiquetas
    labels_path = directory / LABELS
    labels = np.full(n, -1, dtype=np.int64)
    for line_no, parts in _read_lines(labels_path):
        if len(parts) != 2:
            raise BundleError("se esperaba `nodo<TAB>clase`", labels_path, line_no)
        node, label = _int_fields(parts, 2, labels_path, line_no)
        if not (0 <= node < n):
            raise BundleError(f"nodo fuera de rango: {node}", labels_path, line_no)
        if not (0 <= label < classes):
            raise BundleError(f"clase fuera de [0, {classes}): {label}", labels_path, line_no)
        if labels[node] >= 0:
            raise BundleError(f"etiqueta repetida para el nodo {node}", labels_path, line_no)
        labels[node] = label

    unlabeled = np.flatnonzero(labels < 0)
    if unlabeled.size:
        raise BundleError(f"{unlabeled.size} nodos sin etiqueta (p. ej. {unlabeled[0]})", labels_path)

    bundle = GraphBundle(
        graph=graph,
        features=features,
        labels=labels,
        classes=classes,
        name=manifest.get("name", directory.name),
        raw_edge_lines=raw_edge_lines,
        path=directory,
    )
    logger.info(
        f"{config.BUNDLE_EMOJI} {bundle.name}: {n} nodos, {graph.edge_count} aristas, "
        f"{classes} clases, {c} características"
    )
    return bundle


# ========== Escritura ==========

def dump_bundle(bundle: GraphBundle, directory: Union[str, Path]) -> Path:
    """
    Escribir el bundle en forma canónica (aristas u<v ordenadas, tripletas ordenadas).
    Si se descartaron líneas al leerlo, `raw_edges` conserva el recuento original.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    edges = bundle.graph.edges
    fmt = config.FLOAT_FORMAT

    manifest = []
    if bundle.name:
        manifest.append(f"name\t{bundle.name}\n")
    manifest += [
        f"n\t{bundle.n}\n",
        f"features\t{bundle.feature_count}\n",
        f"classes\t{bundle.classes}\n",
        f"edges\t{edges.shape[0]}\n",
    ]
    if bundle.raw_edge_lines > edges.shape[0]:
        manifest.append(f"raw_edges\t{bundle.raw_edge_lines}\n")
    (directory / MANIFEST).write_text("".join(manifest), encoding="utf-8", newline="\n")

    with (directory / GRAPH).open("w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{u}\t{v}\n" for u, v in edges.tolist())

    coo = bundle.features.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with (directory / FEATURES).open("w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(
            f"{i}\t{j}\t{value:{fmt}}\n"
            for i, j, value in zip(coo.row[order].tolist(), coo.col[order].tolist(), coo.data[order].tolist())
        )

    with (directory / LABELS).open("w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{i}\t{label}\n" for i, label in enumerate(bundle.labels.tolist()))

    return directory


# ========== Particiones ==========

def fixed_split(bundle: GraphBundle, split_dir: Optional[Union[str, Path]] = None) -> SplitSpec:
    """Cargar train/val/test tal cual (el orden de los archivos se conserva)"""
    if split_dir is None:
        if bundle.path is None:
            raise SplitError("el bundle no tiene directorio asociado para la partición fija")
        split_dir = bundle.path / SPLIT_DIR
    split_dir = Path(split_dir)

    sets = {}
    for name in SPLIT_FILES:
        path = split_dir / f"{name}.txt"
        ids = []
        for line_no, parts in _read_lines(path):
            try:
                ids.append(int(parts[0]))
            except ValueError:
                raise BundleError(f"id malformado: {parts[0]!r}", path, line_no) from None
            if not 0 <= ids[-1] < bundle.n:
                raise SplitError(f"{path}:{line_no}: id fuera de rango: {ids[-1]}")
        sets[name] = np.asarray(ids, dtype=np.int64)

    return SplitSpec(train=sets["train"], val=sets["val"], test=sets["test"], kind="fixed")


def dump_split(split: SplitSpec, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in SPLIT_FILES:
        ids = getattr(split, name).tolist()
        (directory / f"{name}.txt").write_text("".join(f"{i}\n" for i in ids), encoding="utf-8", newline="\n")
    return directory


def _draw_order(rng: np.random.Generator, nodes: np.ndarray) -> np.ndarray:
    keys = rng.random(nodes.size)
    return nodes[np.argsort(keys, kind="stable")]


def random_split(
    bundle: GraphBundle,
    per_class: int,
    seed: int,
    *,
    val_size: int = 500,
    test_size: int = 1000
) -> SplitSpec:
    """
    `per_class` nodos de entrenamiento por clase sin reemplazo; val y test
    se extraen uniformemente de los nodos restantes.

    Generador PCG64(seed). Cada clase, en orden creciente, sortea una clave
    `rng.random()` por miembro y se queda con las `per_class` menores; luego
    los nodos restantes (ordenados) sortean sus claves y se reparten en ese
    orden entre val y test. Solo depende del flujo de dobles del generador.
    """
    if per_class < 1 or val_size < 0 or test_size < 0:
        raise SplitError("per_class debe ser >= 1 y los tamaños no negativos")

    rng = np.random.Generator(np.random.PCG64(seed))
    train_parts = []
    for c in range(bundle.classes):
        members = bundle.class_members(c)
        if members.size < per_class:
            raise SplitError(f"la clase {c} tiene {members.size} nodos, se necesitan {per_class}")
        train_parts.append(_draw_order(rng, members)[:per_class])
    train = np.sort(np.concatenate(train_parts))

    remaining = np.setdiff1d(np.arange(bundle.n), train, assume_unique=True)
    if remaining.size < val_size + test_size:
        raise SplitError(
            f"quedan {remaining.size} nodos, se necesitan {val_size + test_size} para validación y test"
        )
    shuffled = _draw_order(rng, remaining)
    val = np.sort(shuffled[:val_size])
    test = np.sort(shuffled[val_size:val_size + test_size])

    return SplitSpec(train=train, val=val, test=test, kind="random", per_class=per_class, seed=seed)


# ========== Estadísticas ==========

def bundle_statistics(bundle: GraphBundle) -> dict[str, Union[int, str]]:
    return {
        "name": bundle.name,
        "nodes": bundle.n,
        "edges": bundle.graph.edge_count,
        "raw_edge_lines": bundle.raw_edge_lines,
        "dropped": bundle.graph.dropped,
        "classes": bundle.classes,
        "features": bundle.feature_count,
    }
