"""
Comando orders - Entradas por orden k (distancia exacta o potencias de A)
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from commands import Command, add_bundle_argument, add_mode_argument, emit_text, open_bundle, positive_int
from config import config
from core.graph import overlapping_pairs
from core.pipeline import supports_for
from utils.helpers import format_number, format_tsv

logger = logging.getLogger(__name__)


class Orders(Command):
    """📐 Conteo de entradas de A^(k) por orden"""

    name = "orders"
    help = "Tabla k → entradas de las matrices de orden k"
    emoji = "📐"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        add_bundle_argument(parser)
        parser.add_argument("--max-order", "-K", type=positive_int, default=config.DEFAULT_MAX_ORDER)
        add_mode_argument(parser)
        parser.add_argument("--output", "-o", default=None, type=Path,
                            help="TSV de salida (por defecto stdout)")

    def run(self, args: argparse.Namespace) -> int:
        bundle = open_bundle(args)
        supports = supports_for(bundle, args.max_order, args.mode)

        # En modo distancia supports_for ya exige soportes disjuntos
        overlaps = overlapping_pairs(supports) if args.mode == "power" else []
        if overlaps:
            logger.warning(f"{config.WARNING_EMOJI} Soportes solapados: {overlaps}")

        rows = []
        for support in supports:
            partners = sorted({q if p == support.k else p for p, q in overlaps if support.k in (p, q)})
            rows.append([support.k, support.nnz, ",".join(map(str, partners)) or "-"])
            logger.info(f"{config.STATS_EMOJI} k={support.k}: {format_number(support.nnz)} entradas")

        emit_text(format_tsv(["k", "nnz", "overlaps"], rows), args.output)
        return 0


def setup(cli) -> None:
    cli.add_command(Orders(cli))
