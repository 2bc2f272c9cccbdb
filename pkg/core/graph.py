"""
Núcleo de grafos: adyacencia CSR, normalización simétrica,
matrices de orden k (distancia exacta) y soportes de potencias de A
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from tqdm import tqdm

from config import config
from core.errors import GraphError
from core.parallel import chunked, parallel_map, resolve_threads

logger = logging.getLogger(__name__)

EdgeList = Union[Sequence[tuple[int, int]], np.ndarray, Iterable[tuple[int, int]]]


def _csr_from_pairs(
    rows: np.ndarray,
    cols: np.ndarray,
    n: int,
    values: Optional[np.ndarray] = None
) -> sp.csr_matrix:
    """CSR canónica (índices ordenados, sin duplicados) a partir de pares"""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if values is None:
        data = np.ones(rows.size, dtype=np.float64)
    else:
        data = np.asarray(values, dtype=np.float64)
    matrix = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


def _structure(matrix: sp.spmatrix) -> sp.csr_matrix:
    """Copia con todos los valores almacenados a 1 (ceros explícitos incluidos)"""
    structure = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
    structure.data[:] = 1.0
    return structure


# ========== Tipos ==========

@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Grafo no dirigido sin pesos; `adjacency` es la A simétrica en CSR"""

    n: int
    adjacency: sp.csr_matrix
    dropped: int = 0

    @property
    def csr(self) -> sp.csr_matrix:
        return self.adjacency

    @property
    def indptr(self) -> np.ndarray:
        return self.adjacency.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.adjacency.indices

    @property
    def edge_count(self) -> int:
        """Aristas no dirigidas"""
        return self.adjacency.nnz // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    @property
    def edges(self) -> np.ndarray:
        """Pares (u, v) con u < v, en orden lexicográfico"""
        coo = self.adjacency.tocoo()
        upper = coo.row < coo.col
        pairs = np.column_stack([coo.row[upper], coo.col[upper]]).astype(np.int64)
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        return pairs[order]

    def neighbors(self, i: int) -> np.ndarray:
        return self.adjacency.indices[self.adjacency.indptr[i]:self.adjacency.indptr[i + 1]]

    def support(self) -> sp.csr_matrix:
        return _structure(self.adjacency)


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    """Matriz simétrica normalizada D̃^(-1/2)(M+I)D̃^(-1/2)"""

    values: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.values.toarray()


@dataclass(frozen=True, eq=False)
class NeighborSupport:
    """Conjunto disperso de pares (i, j) asociado a un orden k"""

    k: int
    matrix: sp.csr_matrix

    mode = "distance"

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def entries(self) -> np.ndarray:
        """Pares (i, j) en orden fila-columna"""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.matrix.indptr))
        return np.column_stack([rows, self.matrix.indices.astype(np.int64)])

    def neighbors(self, i: int) -> np.ndarray:
        return self.matrix.indices[self.matrix.indptr[i]:self.matrix.indptr[i + 1]]

    def row_sizes(self) -> np.ndarray:
        return np.diff(self.matrix.indptr)

    def support(self) -> sp.csr_matrix:
        return _structure(self.matrix)


class OrderMatrix(NeighborSupport):
    """A^(k): pares a distancia de camino más corto exactamente k"""

    mode = "distance"


class PowerSupport(NeighborSupport):
    """Soporte fuera de la diagonal de la potencia A^k"""

    mode = "power"


# ========== Construcción ==========

def build_graph(edge_list: EdgeList, n: int) -> SparseGraph:
    """
    Construir el grafo no dirigido.
    Los duplicados y los self-loops se descartan y se cuentan en `dropped`.
    """
    if n <= 0:
        raise GraphError("el grafo necesita al menos un nodo")

    pairs = np.asarray(edge_list if isinstance(edge_list, np.ndarray) else list(edge_list))
    if pairs.size and not np.issubdtype(pairs.dtype, np.integer):
        raise GraphError(f"los índices de nodo deben ser enteros (dtype {pairs.dtype})")
    pairs = pairs.astype(np.int64, copy=False)
    if pairs.size == 0:
        pairs = pairs.reshape(0, 2)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise GraphError(f"se esperaban pares (u, v), forma recibida {pairs.shape}")

    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        bad = pairs[(pairs < 0).any(axis=1) | (pairs >= n).any(axis=1)][0]
        raise GraphError(f"arista ({bad[0]}, {bad[1]}) fuera de rango para n={n}")

    kept = pairs[pairs[:, 0] != pairs[:, 1]]
    if kept.size:
        unique = np.unique(np.sort(kept, axis=1), axis=0)
    else:
        unique = kept.reshape(0, 2)
    dropped = int(pairs.shape[0] - unique.shape[0])

    rows = np.concatenate([unique[:, 0], unique[:, 1]])
    cols = np.concatenate([unique[:, 1], unique[:, 0]])
    adjacency = _csr_from_pairs(rows, cols, n)

    if dropped:
        logger.debug(f"{config.WARNING_EMOJI} {dropped} aristas duplicadas o self-loops descartadas")
    return SparseGraph(n=n, adjacency=adjacency, dropped=dropped)


# ========== Normalización ==========

def normalize_adjacency(matrix: sp.spmatrix) -> AffinityMatrix:
    """D̃^(-1/2)(M+I)D̃^(-1/2) con D̃ la suma por filas de M+I"""
    matrix = sp.csr_matrix(matrix, dtype=np.float64)
    n, m = matrix.shape
    if n != m:
        raise GraphError(f"matriz no cuadrada: {matrix.shape}")
    if matrix.data.size and matrix.data.min() < 0:
        raise GraphError("la matriz de filtro no puede tener entradas negativas")

    tilde = (matrix + sp.identity(n, dtype=np.float64, format="csr")).tocoo()
    degree = np.zeros(n, dtype=np.float64)
    np.add.at(degree, tilde.row, tilde.data)

    values = tilde.data / np.sqrt(degree[tilde.row] * degree[tilde.col])
    normalized = sp.csr_matrix((values, (tilde.row, tilde.col)), shape=(n, n))
    normalized.sort_indices()
    return AffinityMatrix(values=normalized)


def affinity(g: SparseGraph) -> AffinityMatrix:
    """S̃ = D̃^(-1/2)(A+I)D̃^(-1/2), el operador de propagación de GCN"""
    return normalize_adjacency(g.adjacency)


# ========== Matrices de orden k ==========

def _gather_neighbors(indptr: np.ndarray, indices: np.ndarray, frontier: np.ndarray) -> np.ndarray:
    starts = indptr[frontier]
    counts = indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=indices.dtype)
    offsets = np.repeat(starts - np.cumsum(counts) + counts, counts)
    return indices[offsets + np.arange(total)]


def _bfs_block(
    g: SparseGraph,
    sources: np.ndarray,
    max_order: int
) -> tuple[list[list[np.ndarray]], list[list[np.ndarray]]]:
    """BFS truncado en profundidad `max_order` desde cada nodo del bloque"""
    indptr, indices = g.indptr, g.indices
    rows: list[list[np.ndarray]] = [[] for _ in range(max_order)]
    cols: list[list[np.ndarray]] = [[] for _ in range(max_order)]
    seen = np.zeros(g.n, dtype=bool)

    for source in sources:
        frontier = np.array([source], dtype=np.int64)
        seen[source] = True
        touched = [frontier]

        for level in range(max_order):
            candidates = _gather_neighbors(indptr, indices, frontier)
            reached = np.unique(candidates[~seen[candidates]])
            if reached.size == 0:
                break
            seen[reached] = True
            touched.append(reached)
            rows[level].append(np.full(reached.size, source, dtype=np.int64))
            cols[level].append(reached.astype(np.int64))
            frontier = reached

        for nodes in touched:
            seen[nodes] = False

    return rows, cols


def order_matrices(
    g: SparseGraph,
    K: int,
    threads: Optional[int] = None
) -> list[OrderMatrix]:
    """
    A^(1)..A^(K) por BFS truncado desde cada nodo.
    Cada par alcanzable (i, j) cae en exactamente un orden k = d_ij;
    los pares no alcanzables no aparecen en ninguno.
    """
    if K < 1:
        raise GraphError(f"el orden máximo debe ser >= 1 (recibido {K})")

    threads = resolve_threads(threads)
    blocks = chunked(np.arange(g.n), threads * 8)

    with tqdm(total=g.n, desc="BFS", unit="nodo", disable=not config.PROGRESS, leave=False) as bar:
        def run(block: np.ndarray):
            result = _bfs_block(g, block, K)
            bar.update(block.size)
            return result

        results = parallel_map(run, blocks, threads)

    orders: list[OrderMatrix] = []
    for level in range(K):
        row_parts = [part for rows, _ in results for part in rows[level]]
        col_parts = [part for _, cols in results for part in cols[level]]
        if row_parts:
            matrix = _csr_from_pairs(np.concatenate(row_parts), np.concatenate(col_parts), g.n)
        else:
            matrix = sp.csr_matrix((g.n, g.n), dtype=np.float64)
        orders.append(OrderMatrix(k=level + 1, matrix=matrix))

    logger.debug(f"{config.STATS_EMOJI} órdenes 1..{K}: {[o.nnz for o in orders]}")
    return orders


# ========== Potencias de A ==========

def power_support(g: SparseGraph, k: int) -> PowerSupport:
    """
    Soporte booleano de A^k (existencia de un camino de longitud k), sin diagonal.
    Tras cada producto los valores se reducen a 1, así los conteos nunca crecen.
    """
    if k < 1:
        raise GraphError(f"el exponente debe ser >= 1 (recibido {k})")

    base = g.support()
    walk = base.copy()
    for _ in range(k - 1):
        walk = walk @ base
        walk.data[:] = 1.0

    coo = walk.tocoo()
    off_diagonal = coo.row != coo.col
    matrix = _csr_from_pairs(coo.row[off_diagonal], coo.col[off_diagonal], g.n)
    return PowerSupport(k=k, matrix=matrix)


def power_supports(g: SparseGraph, K: int) -> list[PowerSupport]:
    """Soportes de A^1..A^K reutilizando cada producto"""
    if K < 1:
        raise GraphError(f"el orden máximo debe ser >= 1 (recibido {K})")

    base = g.support()
    walk = base.copy()
    supports: list[PowerSupport] = []
    for k in range(1, K + 1):
        if k > 1:
            walk = walk @ base
            walk.data[:] = 1.0
        coo = walk.tocoo()
        off_diagonal = coo.row != coo.col
        matrix = _csr_from_pairs(coo.row[off_diagonal], coo.col[off_diagonal], g.n)
        supports.append(PowerSupport(k=k, matrix=matrix))
    return supports


# ========== Ortogonalidad de Hadamard ==========

def support_matrix(obj) -> sp.csr_matrix:
    """Estructura 0/1 de cualquier tipo con soporte disperso"""
    if hasattr(obj, "support"):
        return obj.support()
    if sp.issparse(obj):
        return _structure(obj)
    raise GraphError(f"no se puede obtener el soporte de {type(obj).__name__}")


def hadamard_disjoint(m1, m2) -> bool:
    """True si m1 ∘ m2 = 0, es decir, si no comparten ningún par (i, j)"""
    a = support_matrix(m1)
    b = support_matrix(m2)
    if a.shape != b.shape:
        raise GraphError(f"dimensiones distintas: {a.shape} vs {b.shape}")
    if a.nnz == 0 or b.nnz == 0:
        return True
    return a.multiply(b).count_nonzero() == 0


def overlapping_pairs(supports: Sequence) -> list[tuple[int, int]]:
    """Pares de órdenes (p, q), p < q, cuyos soportes se solapan"""
    overlaps: list[tuple[int, int]] = []
    for a in range(len(supports)):
        for b in range(a + 1, len(supports)):
            if not hadamard_disjoint(supports[a], supports[b]):
                overlaps.append((supports[a].k, supports[b].k))
    return overlaps
