"""
Comando depth - Exactitud de GCN según el número de capas
"""

from __future__ import annotations

import argparse
import logging

from commands import (
    Command,
    add_bundle_argument,
    add_output_arguments,
    add_split_arguments,
    add_train_arguments,
    config_echo,
    emit_report,
    emit_text,
    open_bundle,
    order_range,
    seeds_from,
    train_config_from,
)
from config import config
from core.pipeline import build_filter, run_trials
from utils.helpers import format_percent, format_tsv, mean_std
from utils.reports import RunReport

logger = logging.getLogger(__name__)


class Depth(Command):
    """🧱 Estudio de profundidad con el filtro de GCN"""

    name = "depth"
    help = "Tabla (capas, media, desviación) con el filtro S̃ de GCN"
    emoji = "🧱"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        add_bundle_argument(parser)
        parser.add_argument("--layers", type=order_range, default=order_range("1..4"),
                            help="Rango de profundidades, p. ej. 1..4")
        add_split_arguments(parser, runs=20)
        add_train_arguments(parser, layers=False)
        add_output_arguments(parser, tsv=True)

    def run(self, args: argparse.Namespace) -> int:
        bundle = open_bundle(args)
        S = build_filter(bundle, "gcn")
        seeds = seeds_from(args)
        report = RunReport(command=self.name, config=config_echo(args))

        rows, table = [], []
        for layers in sorted(set(args.layers)):
            cfg = train_config_from(args, layers=layers)
            results = run_trials(bundle, S, split=args.split, per_class=args.per_class,
                                 seeds=seeds, cfg=cfg, split_dir=args.split_dir)
            accuracies = [r.test_accuracy for r in results]
            mean, std = mean_std(accuracies)
            rows.append([layers, mean, std, len(accuracies)])
            table.append({"layers": layers, "mean": mean, "std": std, "accuracies": accuracies})
            logger.info(f"{config.STATS_EMOJI} {layers} capas: {format_percent(mean)} ± {format_percent(std)}")

        report.extra["depths"] = table
        emit_text(format_tsv(["layers", "mean", "std", "runs"], rows), args.output)
        if args.report is not None:
            emit_report(report, args)
        return 0


def setup(cli) -> None:
    cli.add_command(Depth(cli))
