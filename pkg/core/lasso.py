"""
Aprendizaje de pesos de vecinos de orden k (Lasso como QP con suma fija)
y ensamblado del filtro compuesto W = A + Σ_{k>=2} W^(k)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from tqdm import tqdm

from config import config
from core.errors import FormatError, GraphError, LassoError, QpError, SupportOverlapError
from core.graph import (
    AffinityMatrix,
    NeighborSupport,
    OrderMatrix,
    SparseGraph,
    _csr_from_pairs,
    _structure,
    normalize_adjacency,
    overlapping_pairs,
)
from core.parallel import chunked, parallel_map, resolve_threads
from core.qp import QpProblem, SolverConfig, SolverStatus, solve

logger = logging.getLogger(__name__)

MAGNITUDE_EDGES = (0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, math.inf)
MAGNITUDE_LABELS = (
    "(0, 1e-5)",
    "(1e-5, 1e-4)",
    "(1e-4, 1e-3)",
    "(1e-3, 1e-2)",
    "(1e-2, 1e-1)",
    "(1e-1, inf)",
)

FeatureMatrix = Union[np.ndarray, sp.spmatrix]


def _dense(X: FeatureMatrix) -> np.ndarray:
    if sp.issparse(X):
        return X.toarray().astype(np.float64, copy=False)
    return np.asarray(X, dtype=np.float64)


# ========== Tipos ==========

@dataclass(frozen=True, eq=False)
class ScaleCoefficients:
    """α_i^(k) por nodo"""

    k: int
    alpha: np.ndarray


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Tripletas (i, j, w) con w >= 0; k = 0 para el filtro compuesto"""

    k: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    solved_rows: int = 0
    failed_rows: int = 0
    max_iter_rows: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.int64))
        object.__setattr__(self, "cols", np.asarray(self.cols, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise GraphError("tripletas de pesos con longitudes distintas")
        if self.values.size and self.values.min() < 0:
            raise LassoError(f"pesos negativos en W^({self.k})")

    @classmethod
    def empty(cls, k: int, n: int) -> WeightMatrix:
        return cls(k=k, n=n, rows=np.empty(0), cols=np.empty(0), values=np.empty(0))

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def triplets(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    def to_csr(self) -> sp.csr_matrix:
        """CSR con los ceros explícitos conservados"""
        return _csr_from_pairs(self.rows, self.cols, self.n, self.values)

    def support(self) -> sp.csr_matrix:
        return _structure(self.to_csr())

    def row_sums(self) -> np.ndarray:
        sums = np.zeros(self.n)
        np.add.at(sums, self.rows, self.values)
        return sums


@dataclass(frozen=True)
class ProportionSchedule:
    """Fracción de vecinos retenidos por fila para cada orden k >= 2"""

    fractions: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for k, fraction in self.fractions.items():
            if k < 2:
                raise LassoError(f"el calendario solo admite órdenes >= 2 (recibido {k})")
            if not 0 < fraction <= 1:
                raise LassoError(f"fracción fuera de (0, 1] para k={k}: {fraction}")

    def get(self, k: int) -> Optional[float]:
        return self.fractions.get(k)

    @staticmethod
    def retained(fraction: float, size: int) -> int:
        # 1e-9 evita que productos como 0.1·30 redondeen hacia arriba
        return max(1, min(size, math.ceil(fraction * size - 1e-9)))


PUBMED_SCHEDULE = ProportionSchedule({2: 0.20, 3: 0.10, 4: 0.05, 5: 0.05})


def load_schedule(source: Union[str, Path]) -> ProportionSchedule:
    """Leer un calendario `k<TAB>fracción` o el preset `pubmed`"""
    if str(source).lower() == "pubmed":
        return PUBMED_SCHEDULE

    path = Path(source)
    if not path.is_file():
        raise FormatError("archivo de proporciones no encontrado", path)

    fractions: dict[int, float] = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        try:
            k, fraction = int(parts[0]), float(parts[1])
        except (IndexError, ValueError):
            raise FormatError(f"línea malformada: {line!r}", path, line_no) from None
        fractions[k] = fraction

    try:
        return ProportionSchedule(fractions)
    except LassoError as e:
        raise FormatError(str(e), path) from e


# ========== Coeficientes de escala ==========

def scale_coefficients(
    g: SparseGraph,
    X: FeatureMatrix,
    ordk: NeighborSupport,
    S: AffinityMatrix
) -> ScaleCoefficients:
    """
    α_i = ⟨Σ_{j∈N_k(i)} x_j, (S̃X)_i⟩ / ‖Σ_{j∈N_k(i)} x_j‖²
    Denominador nulo → 0; valores negativos se recortan a 0.
    """
    X = _dense(X)
    if X.shape[0] != g.n or ordk.n != g.n or S.n != g.n:
        raise GraphError(f"dimensiones incompatibles: n={g.n}, X={X.shape}, A^(k)={ordk.n}, S={S.n}")

    aggregated = ordk.matrix @ X
    target = S.values @ X
    numerator = np.einsum("ij,ij->i", aggregated, target)
    denominator = np.einsum("ij,ij->i", aggregated, aggregated)

    alpha = np.zeros(g.n)
    valid = denominator > 0
    alpha[valid] = numerator[valid] / denominator[valid]
    alpha[~np.isfinite(alpha)] = 0.0
    alpha = np.maximum(alpha, 0.0)
    return ScaleCoefficients(k=ordk.k, alpha=alpha)


# ========== Problemas por fila ==========

def build_row_problem(
    i: int,
    ordk: NeighborSupport,
    X: FeatureMatrix,
    S: AffinityMatrix,
    alpha: ScaleCoefficients,
    *,
    candidates: Optional[np.ndarray] = None,
    target: Optional[np.ndarray] = None
) -> QpProblem:
    """
    Columnas de F = x_j − (S̃X)_i para j ∈ N_k(i) en orden ascendente, y = 0,
    s = α_i·|N_k(i)|. `candidates` restringe las columnas sin cambiar s.
    """
    neighbors = ordk.neighbors(i)
    if neighbors.size == 0:
        raise LassoError(f"el nodo {i} no tiene vecinos de orden {ordk.k}")
    a = float(alpha.alpha[i])
    if a <= 0:
        raise LassoError(f"α_{i}^({ordk.k}) = 0, la fila no se resuelve")

    columns = neighbors if candidates is None else np.asarray(candidates, dtype=np.int64)
    X = _dense(X)
    if target is None:
        target = np.asarray(S.values[i] @ X).ravel()

    F = (X[columns] - target).T
    return QpProblem(F=F, y=np.zeros(F.shape[0]), s=a * neighbors.size)


def learn_order_weights(
    g: SparseGraph,
    X: FeatureMatrix,
    ordk: NeighborSupport,
    S: AffinityMatrix,
    schedule: Optional[ProportionSchedule] = None,
    cfg: Optional[SolverConfig] = None,
    *,
    refit: bool = True,
    threads: Optional[int] = None
) -> WeightMatrix:
    """
    Resolver el QP de cada fila con vecinos de orden k y α_i > 0.
    Con calendario, se retienen los ⌈fracción·|N_k(i)|⌉ vecinos de mayor peso
    y se vuelve a resolver sobre ellos (o solo se truncan si refit=False).
    Un fallo del solver anula la fila y se cuenta, nunca aborta el orden.
    """
    cfg = cfg or SolverConfig()
    X = _dense(X)
    alpha = scale_coefficients(g, X, ordk, S)
    target = S.values @ X
    fraction = schedule.get(ordk.k) if schedule else None

    sizes = ordk.row_sizes()
    solvable = np.flatnonzero((sizes > 0) & (alpha.alpha > 0))
    zero_rows = np.flatnonzero((sizes > 0) & (alpha.alpha <= 0))

    threads = resolve_threads(threads)
    blocks = chunked(solvable, threads * 8)

    with tqdm(total=solvable.size, desc=f"QP k={ordk.k}", unit="fila",
              disable=not config.PROGRESS, leave=False) as bar:
        def run(block: np.ndarray) -> list[tuple]:
            out = []
            for i in block:
                out.append(_solve_row(int(i), ordk, X, S, alpha, target[i], fraction, cfg, refit))
            bar.update(block.size)
            return out

        results = [row for block in parallel_map(run, blocks, threads) for row in block]

    rows, cols, values = [], [], []
    solved = failed = max_iter = 0
    for i, columns, weights, status in results:
        if status is None:
            failed += 1
            if fraction is None:
                columns = ordk.neighbors(i)
                weights = np.zeros(columns.size)
            else:
                continue
        else:
            solved += 1
            if status is SolverStatus.MAX_ITER:
                max_iter += 1
        rows.append(np.full(columns.size, i, dtype=np.int64))
        cols.append(columns)
        values.append(weights)

    # Filas con α_i = 0: soporte completo a cero
    if fraction is None:
        for i in zero_rows:
            columns = ordk.neighbors(i)
            rows.append(np.full(columns.size, i, dtype=np.int64))
            cols.append(columns)
            values.append(np.zeros(columns.size))

    if failed:
        logger.warning(f"{config.WARNING_EMOJI} k={ordk.k}: {failed} filas con fallo del solver, anuladas")

    rows_arr = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    cols_arr = np.concatenate(cols).astype(np.int64) if cols else np.empty(0, dtype=np.int64)
    values_arr = np.concatenate(values) if values else np.empty(0)
    order = np.lexsort((cols_arr, rows_arr))
    return WeightMatrix(
        k=ordk.k,
        n=g.n,
        rows=rows_arr[order],
        cols=cols_arr[order],
        values=values_arr[order],
        solved_rows=solved,
        failed_rows=failed,
        max_iter_rows=max_iter,
    )


def _solve_row(
    i: int,
    ordk: NeighborSupport,
    X: np.ndarray,
    S: AffinityMatrix,
    alpha: ScaleCoefficients,
    target: np.ndarray,
    fraction: Optional[float],
    cfg: SolverConfig,
    refit: bool
) -> tuple[int, np.ndarray, np.ndarray, Optional[SolverStatus]]:
    neighbors = ordk.neighbors(i)
    try:
        problem = build_row_problem(i, ordk, X, S, alpha, target=target)
        solution = solve(problem, cfg)
        columns, weights, status = neighbors, solution.w, solution.status

        if fraction is not None:
            keep = ProportionSchedule.retained(fraction, neighbors.size)
            if keep < neighbors.size:
                chosen = np.sort(np.argsort(-weights, kind="stable")[:keep])
                columns = neighbors[chosen]
                if refit:
                    problem = build_row_problem(i, ordk, X, S, alpha, candidates=columns, target=target)
                    solution = solve(problem, cfg)
                    weights, status = solution.w, solution.status
                else:
                    weights = weights[chosen]
        return i, columns, weights, status
    except (QpError, LassoError) as e:
        logger.debug(f"Fila {i} (k={ordk.k}) anulada: {e}")
        return i, neighbors, np.zeros(neighbors.size), None


def unit_weights(ordk: NeighborSupport) -> WeightMatrix:
    """Pesos 1 sobre todo el soporte de A^(k) (filtro A + Σ A^(k) sin pesos)"""
    entries = ordk.entries
    return WeightMatrix(k=ordk.k, n=ordk.n, rows=entries[:, 0], cols=entries[:, 1],
                        values=np.ones(entries.shape[0]))


# ========== Filtro compuesto ==========

def assemble_filter(
    A: OrderMatrix,
    weights: Sequence[WeightMatrix],
    *,
    mode: str = "distance",
    symmetrize: bool = True
) -> WeightMatrix:
    """
    W = A + Σ W^(k). Los pesos de primer orden valen exactamente 1.
    En modo distancia los soportes deben ser disjuntos; en modo potencia
    las entradas coincidentes se suman. Con `symmetrize`, W ← (W + Wᵀ)/2.
    """
    n = A.n
    for wm in weights:
        if wm.n != n:
            raise GraphError(f"W^({wm.k}) tiene dimensión {wm.n}, se esperaba {n}")

    if mode == "distance":
        overlaps = overlapping_pairs([A, *weights])
        if overlaps:
            raise SupportOverlapError(f"soportes solapados en modo distancia: {overlaps}")

    first = A.entries
    rows = np.concatenate([first[:, 0], *[wm.rows for wm in weights]])
    cols = np.concatenate([first[:, 1], *[wm.cols for wm in weights]])
    values = np.concatenate([np.ones(first.shape[0]), *[wm.values for wm in weights]])

    if symmetrize:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
        values = np.concatenate([values, values]) * 0.5

    composite = _csr_from_pairs(rows, cols, n, values).tocoo()
    return WeightMatrix(k=0, n=n, rows=composite.row, cols=composite.col, values=composite.data)


def normalize_filter(W: WeightMatrix) -> AffinityMatrix:
    """S̃_w = D̃_w^(-1/2)(W+I)D̃_w^(-1/2)"""
    return normalize_adjacency(W.to_csr())


# ========== Estadísticas de magnitud ==========

def weight_statistics(wm: WeightMatrix) -> dict[str, float]:
    """Porcentaje de entradas almacenadas en cada intervalo de |w|"""
    if wm.nnz == 0:
        return {label: 0.0 for label in MAGNITUDE_LABELS}
    buckets = np.searchsorted(np.asarray(MAGNITUDE_EDGES[1:-1]), np.abs(wm.values), side="right")
    counts = np.bincount(buckets, minlength=len(MAGNITUDE_LABELS))
    percentages = 100.0 * counts / wm.nnz
    return {label: float(p) for label, p in zip(MAGNITUDE_LABELS, percentages)}


# ========== Volcado TSV ==========

@dataclass(frozen=True, eq=False)
class WeightsDump:
    n: int
    K: int
    mode: str
    weights: list[WeightMatrix]


def dump_weights(
    path: Union[str, Path],
    weights: Sequence[WeightMatrix],
    n: int,
    K: int,
    mode: str = "distance"
) -> Path:
    """Escribir `k<TAB>i<TAB>j<TAB>w` con w en 17 cifras significativas"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = config.FLOAT_FORMAT
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{config.WEIGHTS_HEADER} n={n} K={K} mode={mode}\n")
        for wm in sorted(weights, key=lambda w: w.k):
            fh.writelines(
                f"{wm.k}\t{i}\t{j}\t{w:{fmt}}\n"
                for i, j, w in zip(wm.rows.tolist(), wm.cols.tolist(), wm.values.tolist())
            )
    return path


def _parse_header(line: str, path: Path) -> tuple[int, int, str]:
    if not line.startswith(config.WEIGHTS_HEADER):
        raise FormatError("cabecera ausente o de otra versión", path, 1)
    fields: dict[str, str] = {}
    for token in line[len(config.WEIGHTS_HEADER):].split():
        key, _, value = token.partition("=")
        fields[key] = value
    try:
        n, K, mode = int(fields["n"]), int(fields["K"]), fields["mode"]
    except (KeyError, ValueError):
        raise FormatError(f"cabecera malformada: {line!r}", path, 1) from None
    if mode not in ("distance", "power"):
        raise FormatError(f"modo desconocido: {mode}", path, 1)
    return n, K, mode


def load_weights(path: Union[str, Path]) -> WeightsDump:
    """Leer un volcado de pesos; los valores se recuperan bit a bit"""
    path = Path(path)
    if not path.is_file():
        raise FormatError("archivo de pesos no encontrado", path)

    with path.open("r", encoding="utf-8") as fh:
        n, K, mode = _parse_header(fh.readline().rstrip("\n"), path)
        buckets: dict[int, tuple[list[int], list[int], list[float]]] = {
            k: ([], [], []) for k in range(2, K + 1)
        }
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            try:
                k, i, j, w = int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])
            except (IndexError, ValueError):
                raise FormatError(f"línea malformada: {line!r}", path, line_no) from None
            if k not in buckets or not (0 <= i < n and 0 <= j < n) or w < 0 or not math.isfinite(w):
                raise FormatError(f"tripleta inválida: {line!r}", path, line_no)
            rows, cols, values = buckets[k]
            rows.append(i)
            cols.append(j)
            values.append(w)

    weights = [
        WeightMatrix(k=k, n=n, rows=np.array(r, dtype=np.int64), cols=np.array(c, dtype=np.int64),
                     values=np.array(v, dtype=np.float64))
        for k, (r, c, v) in sorted(buckets.items())
    ]
    return WeightsDump(n=n, K=K, mode=mode, weights=weights)
