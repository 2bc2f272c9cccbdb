"""
Utilidades de formato, parseo y escritura de resultados
"""

from __future__ import annotations

import datetime as dt
import math
import re
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import humanize
import orjson
import psutil

from config import config


# ========== Formateo de texto ==========

def format_number(number: int) -> str:
    """Formatear número con separadores de miles"""
    return humanize.intcomma(number)


def plural(count: int, singular: str, plural_form: Optional[str] = None) -> str:
    """Retornar forma singular o plural según el conteo"""
    if plural_form is None:
        plural_form = singular + "s"
    return singular if count == 1 else plural_form


def format_time(seconds: float) -> str:
    """Formatear segundos a string legible"""
    if seconds < 1:
        return f"{seconds * 1000:.0f} ms"
    return humanize.precisedelta(dt.timedelta(seconds=seconds), minimum_unit="seconds", format="%0.1f")


def format_percent(fraction: float) -> str:
    return f"{100.0 * fraction:.2f}%"


def memory_usage() -> str:
    """Memoria residente del proceso actual"""
    return humanize.naturalsize(psutil.Process().memory_info().rss, binary=True)


# ========== Parseo ==========

RANGE_PATTERN = re.compile(r"^\s*(\d+)\s*(?:\.\.|-)\s*(\d+)\s*$")


def parse_range(text: str) -> list[int]:
    """
    Parsear un rango inclusivo de enteros
    Ejemplos: 2..8, 1-4, 3
    """
    text = text.strip()
    if text.isdigit():
        return [int(text)]

    match = RANGE_PATTERN.match(text)
    if not match:
        raise ValueError(f"rango inválido: {text!r} (formato a..b)")
    low, high = int(match.group(1)), int(match.group(2))
    if low > high:
        raise ValueError(f"rango vacío: {text!r}")
    return list(range(low, high + 1))


# ========== Estadística ==========

def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Media y desviación típica poblacional; (nan, nan) si no hay valores"""
    if not values:
        return math.nan, math.nan
    mean = math.fsum(values) / len(values)
    variance = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(variance)


# ========== Escritura ==========

def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:{config.FLOAT_FORMAT}}"
    return str(value)


def format_tsv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """TSV con cabecera; los floats se escriben a precisión completa"""
    lines = ["\t".join(header)] + ["\t".join(_cell(value) for value in row) for row in rows]
    return "\n".join(lines) + "\n"


def dump_json(data: Any) -> bytes:
    """JSON indentado con claves ordenadas (bytes estables entre ejecuciones)"""
    return orjson.dumps(
        data,
        option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_APPEND_NEWLINE,
    )


def write_json(path: Union[str, Path], data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dump_json(data))
    return path
