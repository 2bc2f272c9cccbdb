"""
Comando stats - Estadísticas del bundle y de un volcado de pesos
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from commands import Command, add_bundle_argument, emit_text, open_bundle
from core.data import bundle_statistics
from core.lasso import MAGNITUDE_LABELS, load_weights, weight_statistics
from utils.helpers import format_tsv

logger = logging.getLogger(__name__)


class Stats(Command):
    """📊 Tabla del dataset y distribución de magnitudes de los pesos"""

    name = "stats"
    help = "Estadísticas del dataset y, con --weights, porcentajes por intervalo de magnitud"
    emoji = "📊"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        add_bundle_argument(parser)
        parser.add_argument("--weights", type=Path, default=None)
        parser.add_argument("--output", "-o", type=Path, default=None)

    def run(self, args: argparse.Namespace) -> int:
        bundle = open_bundle(args)
        stats = bundle_statistics(bundle)
        text = format_tsv(["key", "value"], [[key, value] for key, value in stats.items()])

        if args.weights is not None:
            dump = load_weights(args.weights)
            rows = []
            for wm in dump.weights:
                buckets = weight_statistics(wm)
                rows.append([wm.k, wm.nnz] + [buckets[label] for label in MAGNITUDE_LABELS])
            text += "\n" + format_tsv(["k", "entries", *MAGNITUDE_LABELS], rows)

        emit_text(text, args.output)
        return 0


def setup(cli) -> None:
    cli.add_command(Stats(cli))
