"""
Configuración centralizada de HWGCN
"""

import os

import psutil
from dotenv import load_dotenv

load_dotenv()


def _env_bool(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


def _default_threads() -> int:
    return max(1, psutil.cpu_count(logical=False) or 1)


class Config:
    """Clase de configuración de HWGCN"""

    # Ejecución
    THREADS: int = max(1, int(os.getenv("HWGCN_THREADS") or _default_threads()))
    PROGRESS: bool = _env_bool("HWGCN_PROGRESS", True)
    DEFAULT_MAX_ORDER: int = int(os.getenv("HWGCN_DEFAULT_MAX_ORDER", "8"))

    # Logging
    LOG_LEVEL: str = os.getenv("HWGCN_LOG_LEVEL", "INFO").upper()
    LOG_FILE: str = os.getenv("HWGCN_LOG_FILE", "")

    # Rutas de bundles para las pruebas lentas
    CORA_DIR: str = os.getenv("HWGCN_CORA_DIR", "")
    CITESEER_DIR: str = os.getenv("HWGCN_CITESEER_DIR", "")
    PUBMED_DIR: str = os.getenv("HWGCN_PUBMED_DIR", "")

    # Emojis
    SUCCESS_EMOJI: str = "✅"
    ERROR_EMOJI: str = "❌"
    WARNING_EMOJI: str = "⚠️"
    LOADING_EMOJI: str = "⏳"
    SETUP_EMOJI: str = "🔧"
    STATS_EMOJI: str = "📊"
    BUNDLE_EMOJI: str = "📦"

    # Formato de volcados
    WEIGHTS_HEADER: str = "#hwgcn-weights v1"
    PARAMS_HEADER: str = "#hwgcn-params v1"
    FLOAT_FORMAT: str = ".17g"


config = Config()
