"""
Comando weights - Aprendizaje de W^(2)..W^(K) y estadísticas de magnitud
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from commands import (
    Command,
    add_bundle_argument,
    add_mode_argument,
    add_output_arguments,
    add_solver_arguments,
    config_echo,
    emit_report,
    open_bundle,
    positive_int,
    schedule_from,
    solver_config_from,
)
from config import config
from core.lasso import dump_weights, weight_statistics
from core.pipeline import learn_weights
from utils.helpers import format_number
from utils.reports import RunReport

logger = logging.getLogger(__name__)


class Weights(Command):
    """⚖️ Pesos de vecinos de orden superior por QP"""

    name = "weights"
    help = "Aprender las matrices de pesos de orden 2..K y volcarlas en TSV"
    emoji = "⚖️"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        add_bundle_argument(parser)
        parser.add_argument("--max-order", "-K", type=positive_int, default=config.DEFAULT_MAX_ORDER)
        add_mode_argument(parser)
        parser.add_argument("--output", "-o", type=Path, required=True, help="Volcado TSV de pesos")
        add_solver_arguments(parser)
        add_output_arguments(parser)

    def run(self, args: argparse.Namespace) -> int:
        if args.max_order < 2:
            self.fail("--max-order debe ser >= 2 para aprender pesos")

        bundle = open_bundle(args)
        weights = learn_weights(
            bundle,
            args.max_order,
            mode=args.mode,
            schedule=schedule_from(args),
            solver_cfg=solver_config_from(args),
            refit=not args.truncate_only,
            row_normalize_lasso=args.row_normalize_features_for_lasso,
        )
        dump_weights(args.output, weights, bundle.n, args.max_order, args.mode)
        logger.info(f"{config.SUCCESS_EMOJI} Pesos en {args.output}")

        report = RunReport(command=self.name, config=config_echo(args))
        orders = []
        for wm in weights:
            buckets = weight_statistics(wm)
            orders.append({
                "k": wm.k,
                "entries": wm.nnz,
                "above_1e-5": int((wm.values > 1e-5).sum()),
                "solved_rows": wm.solved_rows,
                "failed_rows": wm.failed_rows,
                "max_iter_rows": wm.max_iter_rows,
                "buckets": buckets,
            })
            if wm.failed_rows:
                report.add_failure(k=wm.k, failed_rows=wm.failed_rows)
            logger.info(
                f"{config.STATS_EMOJI} k={wm.k}: "
                + ", ".join(f"{label} {value:.2f}%" for label, value in buckets.items())
            )
        report.extra["orders"] = orders
        report.extra["weights_file"] = str(args.output)
        emit_report(report, args)

        solved = sum(wm.solved_rows for wm in weights)
        failed = sum(wm.failed_rows for wm in weights)
        if failed and not solved:
            logger.error(f"{config.ERROR_EMOJI} El solver falló en las {format_number(failed)} filas")
            return 1
        return 0


def setup(cli) -> None:
    cli.add_command(Weights(cli))
