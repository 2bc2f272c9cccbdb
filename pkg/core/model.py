"""
GCN multicapa desde cero: propagación, gradientes analíticos, Adam,
dropout, regularización L2 y bucle de entrenamiento
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from config import config
from core.errors import FormatError, TrainingError
from core.graph import AffinityMatrix

if TYPE_CHECKING:
    from core.data import SplitSpec

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

SELECTIONS = ("final", "best_val")

Filter = Union[AffinityMatrix, sp.spmatrix, np.ndarray]


# ========== Configuración y tipos ==========

@dataclass(frozen=True)
class TrainConfig:
    layers: int = 2
    hidden: int = 16
    lr: float = 0.01
    l2: float = 5e-4
    dropout: float = 0.5
    max_epochs: int = 200
    early_stop_window: int = 10
    early_stopping: bool = True
    selection: str = "final"
    seed: int = 0

    def __post_init__(self):
        if self.layers < 1 or self.hidden < 1 or self.max_epochs < 1 or self.early_stop_window < 1:
            raise TrainingError("layers, hidden, max_epochs y early_stop_window deben ser positivos")
        if self.lr <= 0 or self.l2 < 0:
            raise TrainingError("lr debe ser positivo y l2 no negativo")
        if not 0 <= self.dropout < 1:
            raise TrainingError(f"dropout fuera de [0, 1): {self.dropout}")
        if self.selection not in SELECTIONS:
            raise TrainingError(f"criterio de selección desconocido: {self.selection}")
        if self.seed < 0:
            raise TrainingError("la semilla debe ser un entero sin signo")

    def with_seed(self, seed: int) -> TrainConfig:
        return replace(self, seed=seed)


@dataclass(eq=False)
class ModelParams:
    """Θ^(1)..Θ^(l) con formas encadenadas c_0 → ocultas → clases"""

    weights: list[np.ndarray]

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        if not self.weights:
            raise TrainingError("el modelo necesita al menos una capa")
        for index, (a, b) in enumerate(zip(self.weights, self.weights[1:]), start=1):
            if a.shape[1] != b.shape[0]:
                raise TrainingError(f"formas no encadenadas: {a.shape} → {b.shape}", layer=index + 1)

    @property
    def layers(self) -> int:
        return len(self.weights)

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [w.shape for w in self.weights]

    def copy(self) -> ModelParams:
        return ModelParams([w.copy() for w in self.weights])


@dataclass(eq=False)
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def zeros(cls, params: ModelParams) -> AdamState:
        return cls(m=[np.zeros_like(w) for w in params.weights],
                   v=[np.zeros_like(w) for w in params.weights])


@dataclass(eq=False)
class ForwardCache:
    """Activaciones guardadas para la retropropagación"""

    S: Union[sp.csr_matrix, np.ndarray]
    params: ModelParams
    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    masks: Optional[list[np.ndarray]]
    logits: np.ndarray
    probs: np.ndarray


@dataclass(eq=False)
class TrainResult:
    test_accuracy: float
    val_accuracy: list[float]
    loss: list[float]
    val_loss: list[float]
    epochs_run: int
    params: ModelParams
    best_epoch: int
    best_val_test_accuracy: float
    seed: int = 0
    extra: dict = field(default_factory=dict)


# ========== Utilidades ==========

def _operator(S: Filter) -> Union[sp.csr_matrix, np.ndarray]:
    if isinstance(S, AffinityMatrix):
        return S.values
    if sp.issparse(S):
        return sp.csr_matrix(S)
    return np.asarray(S, dtype=np.float64)


def _dense(X) -> np.ndarray:
    if sp.issparse(X):
        return X.toarray().astype(np.float64, copy=False)
    return np.asarray(X, dtype=np.float64)


def row_normalize(X):
    """Filas con suma 1; las filas nulas quedan igual"""
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        sums = np.asarray(X.sum(axis=1)).ravel()
        inverse = np.zeros_like(sums)
        np.divide(1.0, sums, out=inverse, where=sums != 0)
        return sp.diags(inverse) @ X
    X = np.asarray(X, dtype=np.float64)
    sums = X.sum(axis=1, keepdims=True)
    return np.divide(X, sums, out=X.copy(), where=sums != 0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def init_params(
    c0: int,
    hidden: int,
    classes: int,
    layers: int,
    rng: np.random.Generator
) -> ModelParams:
    """Inicialización Glorot uniforme"""
    dims = [c0] + [hidden] * (layers - 1) + [classes]
    weights = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
    return ModelParams(weights)


def dropout_masks(
    params: ModelParams,
    n: int,
    rate: float,
    rng: np.random.Generator
) -> Optional[list[np.ndarray]]:
    """Máscaras invertidas para la entrada de cada capa"""
    if rate <= 0:
        return None
    keep = 1.0 - rate
    return [(rng.random((n, w.shape[0])) < keep) / keep for w in params.weights]


def cross_entropy(probs: np.ndarray, labels: np.ndarray, idx: np.ndarray) -> float:
    """Media de −log p sobre idx (los índices repetidos cuentan varias veces)"""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise TrainingError("máscara vacía en la pérdida")
    picked = probs[idx, labels[idx]]
    return float(-np.mean(np.log(np.maximum(picked, np.finfo(np.float64).tiny))))


def l2_penalty(params: ModelParams, l2: float) -> float:
    return 0.5 * l2 * float(np.sum(params.weights[0] ** 2))


# ========== Propagación ==========

def forward(
    S: Filter,
    X,
    params: ModelParams,
    masks: Optional[Sequence[np.ndarray]] = None
) -> ForwardCache:
    """
    H^(i) = ReLU(S H^(i−1) Θ^(i)) en las capas ocultas y
    Z = softmax(S H^(l−1) Θ^(l)) en la última
    """
    S = _operator(S)
    H = _dense(X)
    if S.shape[0] != S.shape[1] or S.shape[1] != H.shape[0]:
        raise TrainingError(f"filtro {S.shape} incompatible con X {H.shape}")
    if H.shape[1] != params.weights[0].shape[0]:
        raise TrainingError(f"X tiene {H.shape[1]} columnas, Θ^(1) espera {params.weights[0].shape[0]}", layer=1)

    inputs, pre_activations = [], []
    for layer, W in enumerate(params.weights, start=1):
        if masks is not None:
            H = H * masks[layer - 1]
        inputs.append(H)
        Z = np.asarray(S @ (H @ W))
        if not np.all(np.isfinite(Z)):
            raise TrainingError("valores no finitos en la propagación", layer=layer)
        pre_activations.append(Z)
        H = np.maximum(Z, 0.0) if layer < params.layers else Z

    logits = pre_activations[-1]
    return ForwardCache(
        S=S,
        params=params,
        inputs=inputs,
        pre_activations=pre_activations,
        masks=list(masks) if masks is not None else None,
        logits=logits,
        probs=softmax(logits),
    )


def backward(
    cache: ForwardCache,
    labels: np.ndarray,
    train_idx: np.ndarray,
    l2: float = 0.0
) -> list[np.ndarray]:
    """Gradientes exactos de la entropía cruzada media + (l2/2)‖Θ^(1)‖²"""
    train_idx = np.asarray(train_idx, dtype=np.int64)
    if train_idx.size == 0:
        raise TrainingError("máscara de entrenamiento vacía")

    labels = np.asarray(labels, dtype=np.int64)
    delta = np.zeros_like(cache.probs)
    residual = cache.probs[train_idx].copy()
    residual[np.arange(train_idx.size), labels[train_idx]] -= 1.0
    np.add.at(delta, train_idx, residual / train_idx.size)

    S_t = cache.S.T
    grads: list[Optional[np.ndarray]] = [None] * cache.params.layers
    for layer in range(cache.params.layers - 1, -1, -1):
        if layer < cache.params.layers - 1:
            delta = delta * (cache.pre_activations[layer] > 0)
        propagated = np.asarray(S_t @ delta)
        grads[layer] = cache.inputs[layer].T @ propagated
        if layer > 0:
            delta = propagated @ cache.params.weights[layer].T
            if cache.masks is not None:
                delta = delta * cache.masks[layer]

    grads[0] = grads[0] + l2 * cache.params.weights[0]
    return grads


def adam_step(
    params: ModelParams,
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    t: int
) -> tuple[ModelParams, AdamState]:
    """Paso de Adam con corrección de sesgo (t empieza en 1)"""
    correction1 = 1.0 - ADAM_BETA1 ** t
    correction2 = 1.0 - ADAM_BETA2 ** t

    weights, m_next, v_next = [], [], []
    for W, g, m, v in zip(params.weights, grads, state.m, state.v):
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        weights.append(W - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON))
        m_next.append(m)
        v_next.append(v)

    return ModelParams(weights), AdamState(m=m_next, v=v_next)


# ========== Evaluación ==========

def accuracy(probs: np.ndarray, labels: np.ndarray, idx: np.ndarray) -> float:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise TrainingError("máscara de evaluación vacía")
    # argmax devuelve el primer índice en caso de empate
    predictions = np.argmax(probs[idx], axis=1)
    return float(np.mean(predictions == np.asarray(labels)[idx]))


def evaluate(params: ModelParams, S: Filter, X, labels: np.ndarray, idx: np.ndarray) -> float:
    """Exactitud sobre idx sin dropout"""
    return accuracy(forward(S, X, params).probs, labels, idx)


# ========== Entrenamiento ==========

def _check_split(split: SplitSpec, labels: np.ndarray, n: int) -> None:
    for name in ("train", "val", "test"):
        indices = getattr(split, name)
        if len(indices) == 0:
            raise TrainingError(f"partición degenerada: conjunto {name} vacío")
        if np.min(indices) < 0 or np.max(indices) >= n:
            raise TrainingError(f"partición degenerada: índices de {name} fuera de rango")

    train, val, test = (set(np.asarray(s).tolist()) for s in (split.train, split.val, split.test))
    if train & val or train & test or val & test:
        raise TrainingError("partición degenerada: conjuntos solapados")

    classes = int(labels.max()) + 1
    missing = sorted(set(range(classes)) - set(labels[np.asarray(split.train)].tolist()))
    if missing:
        logger.warning(f"{config.WARNING_EMOJI} clases sin nodos de entrenamiento: {missing}")


def train(
    S: Filter,
    X,
    labels: np.ndarray,
    split: SplitSpec,
    cfg: Optional[TrainConfig] = None
) -> TrainResult:
    """
    Entrenamiento full-batch con Adam.
    La pérdida de validación incluye el término L2; con parada temprana se
    corta cuando supera la media de las `early_stop_window` épocas previas.
    """
    cfg = cfg or TrainConfig()
    S = _operator(S)
    X = _dense(X)
    labels = np.asarray(labels, dtype=np.int64)
    n = X.shape[0]
    _check_split(split, labels, n)

    train_idx = np.asarray(split.train, dtype=np.int64)
    val_idx = np.asarray(split.val, dtype=np.int64)
    test_idx = np.asarray(split.test, dtype=np.int64)
    classes = int(labels.max()) + 1

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    params = init_params(X.shape[1], cfg.hidden, classes, cfg.layers, rng)
    state = AdamState.zeros(params)

    losses: list[float] = []
    val_losses: list[float] = []
    val_accuracies: list[float] = []
    best = (-1.0, math.inf)
    best_epoch, best_test, best_params = 0, 0.0, params
    test_accuracy = 0.0

    for epoch in range(1, cfg.max_epochs + 1):
        masks = dropout_masks(params, n, cfg.dropout, rng)
        cache = forward(S, X, params, masks)
        losses.append(cross_entropy(cache.probs, labels, train_idx) + l2_penalty(params, cfg.l2))
        grads = backward(cache, labels, train_idx, cfg.l2)
        params, state = adam_step(params, grads, state, cfg.lr, epoch)

        probs = forward(S, X, params).probs
        val_loss = cross_entropy(probs, labels, val_idx) + l2_penalty(params, cfg.l2)
        val_acc = accuracy(probs, labels, val_idx)
        test_accuracy = accuracy(probs, labels, test_idx)
        val_losses.append(val_loss)
        val_accuracies.append(val_acc)

        if (val_acc, -val_loss) > (best[0], -best[1]):
            best = (val_acc, val_loss)
            best_epoch, best_test = epoch, test_accuracy
            if cfg.selection == "best_val":
                best_params = params.copy()

        window = cfg.early_stop_window
        if cfg.early_stopping and len(val_losses) > window + 1 and \
                val_loss > np.mean(val_losses[-(window + 1):-1]):
            logger.debug(f"Parada temprana en la época {epoch}")
            break

    if cfg.selection == "best_val":
        params, test_accuracy = best_params, best_test

    return TrainResult(
        test_accuracy=test_accuracy,
        val_accuracy=val_accuracies,
        loss=losses,
        val_loss=val_losses,
        epochs_run=len(losses),
        params=params,
        best_epoch=best_epoch,
        best_val_test_accuracy=best_test,
        seed=cfg.seed,
    )


# ========== Checkpoints ==========

def save_params(path: Union[str, Path], params: ModelParams) -> Path:
    """Volcado TSV: cabecera, `shape<TAB>r<TAB>c` y r filas por capa"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = config.FLOAT_FORMAT
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{config.PARAMS_HEADER} layers={params.layers}\n")
        for W in params.weights:
            fh.write(f"shape\t{W.shape[0]}\t{W.shape[1]}\n")
            fh.writelines("\t".join(f"{value:{fmt}}" for value in row) + "\n" for row in W.tolist())
    return path


def load_params(path: Union[str, Path]) -> ModelParams:
    path = Path(path)
    if not path.is_file():
        raise FormatError("checkpoint no encontrado", path)

    lines = path.read_text(encoding="utf-8").split("\n")
    header = lines[0]
    if not header.startswith(config.PARAMS_HEADER):
        raise FormatError("cabecera ausente o de otra versión", path, 1)
    try:
        layers = int(header.split("layers=")[1])
    except (IndexError, ValueError):
        raise FormatError(f"cabecera malformada: {header!r}", path, 1) from None

    weights = []
    cursor = 1
    for _ in range(layers):
        line_no = cursor + 1
        parts = lines[cursor].split("\t") if cursor < len(lines) else []
        if len(parts) != 3 or parts[0] != "shape":
            raise FormatError("se esperaba una línea `shape`", path, line_no)
        try:
            rows, cols = int(parts[1]), int(parts[2])
        except ValueError:
            raise FormatError(f"forma malformada: {lines[cursor]!r}", path, line_no) from None
        cursor += 1

        W = np.empty((rows, cols))
        for r in range(rows):
            line_no = cursor + 1
            try:
                values = [float(v) for v in lines[cursor].split("\t")]
            except (IndexError, ValueError):
                raise FormatError("fila de valores malformada", path, line_no) from None
            if len(values) != cols:
                raise FormatError(f"se esperaban {cols} valores, hay {len(values)}", path, line_no)
            W[r] = values
            cursor += 1
        weights.append(W)

    if any(line.strip() for line in lines[cursor:]):
        raise FormatError("contenido sobrante tras la última capa", path, cursor + 1)
    return ModelParams(weights)
