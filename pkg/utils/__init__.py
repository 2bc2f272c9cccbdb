"""
Utils module - Utilidades de formato y reportes
"""

from utils.helpers import (
    format_number,
    plural,
    format_time,
    format_percent,
    memory_usage,
    parse_range,
    mean_std,
    format_tsv,
    dump_json,
    write_json,
)

from utils.reports import RunReport

__all__ = [
    # Helpers
    "format_number",
    "plural",
    "format_time",
    "format_percent",
    "memory_usage",
    "parse_range",
    "mean_std",
    "format_tsv",
    "dump_json",
    "write_json",
    # Reportes
    "RunReport",
]
