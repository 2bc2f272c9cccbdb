"""
Excepciones de HWGCN
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union


class HWGCNError(Exception):
    """Error base de la librería"""


class GraphError(HWGCNError):
    """Grafo inválido o dimensiones incompatibles"""


class SupportOverlapError(HWGCNError, AssertionError):
    """Soportes de distintos órdenes que se solapan en modo distancia"""


class QpError(HWGCNError):
    """Problema cuadrático inválido"""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        if index is not None:
            message = f"problema #{index}: {message}"
        super().__init__(message)


class LassoError(HWGCNError):
    """Precondición violada al construir un problema de fila"""


class TrainingError(HWGCNError):
    """Fallo durante el entrenamiento o la evaluación"""

    def __init__(self, message: str, layer: Optional[int] = None):
        self.layer = layer
        if layer is not None:
            message = f"capa {layer}: {message}"
        super().__init__(message)


class BundleError(HWGCNError):
    """Bundle de datos ausente, malformado o inconsistente"""

    def __init__(
        self,
        message: str,
        path: Optional[Union[str, Path]] = None,
        line_no: Optional[int] = None
    ):
        self.path = Path(path) if path is not None else None
        self.line_no = line_no
        location = ""
        if path is not None:
            location = f"{path}"
            if line_no is not None:
                location += f":{line_no}"
            location += ": "
        super().__init__(f"{location}{message}")


class SplitError(HWGCNError):
    """Partición train/val/test inválida"""


class FormatError(BundleError):
    """Volcado de pesos o de parámetros ilegible"""
