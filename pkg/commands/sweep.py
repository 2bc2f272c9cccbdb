"""
Comando sweep - Exactitud en función del orden máximo k
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
    add_split_arguments,
    add_train_arguments,
    config_echo,
    emit_report,
    emit_text,
    open_bundle,
    order_range,
    schedule_from,
    seeds_from,
    solver_config_from,
    train_config_from,
)
from config import config
from core.errors import HWGCNError
from core.lasso import load_weights
from core.pipeline import build_filter, learn_weights, run_trials
from utils.helpers import format_percent, format_tsv, mean_std
from utils.reports import RunReport

logger = logging.getLogger(__name__)


class Sweep(Command):
    """📈 Barrido de A + Σ_{j=2}^{k} W^(j) para cada k del rango"""

    name = "sweep"
    help = "Serie TSV (k, media, desviación) de la exactitud frente al orden máximo"
    emoji = "📈"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        add_bundle_argument(parser)
        parser.add_argument("--orders", type=order_range, default=order_range(f"1..{config.DEFAULT_MAX_ORDER}"),
                            help="Rango de órdenes, p. ej. 2..8")
        parser.add_argument("--weights", type=Path, default=None,
                            help="Reutilizar un volcado de pesos en lugar de aprenderlos")
        parser.add_argument("--symmetrize", action=argparse.BooleanOptionalAction, default=True)
        add_mode_argument(parser)
        add_solver_arguments(parser)
        add_split_arguments(parser, runs=10)
        add_train_arguments(parser)
        add_output_arguments(parser, tsv=True)

    def run(self, args: argparse.Namespace) -> int:
        orders = sorted(set(args.orders))
        highest = orders[-1]
        bundle = open_bundle(args)

        mode = args.mode
        if args.weights is not None:
            dump = load_weights(args.weights)
            weights, available, mode = dump.weights, dump.K, dump.mode
        elif highest >= 2:
            weights = learn_weights(
                bundle,
                highest,
                mode=mode,
                schedule=schedule_from(args),
                solver_cfg=solver_config_from(args),
                refit=not args.truncate_only,
                row_normalize_lasso=args.row_normalize_features_for_lasso,
            )
            available = highest
        else:
            weights, available = [], 1

        cfg = train_config_from(args)
        seeds = seeds_from(args)
        report = RunReport(command=self.name, config=config_echo(args))

        rows, series = [], []
        for k in orders:
            try:
                if k > available:
                    raise HWGCNError(f"no hay pesos aprendidos para k={k} (máximo {available})")
                S = build_filter(bundle, "hwgcn", weights=weights, max_order=k,
                                 symmetrize=args.symmetrize, mode=mode)
                results = run_trials(bundle, S, split=args.split, per_class=args.per_class,
                                     seeds=seeds, cfg=cfg, split_dir=args.split_dir)
            except HWGCNError as e:
                logger.warning(f"{config.WARNING_EMOJI} k={k}: {e}")
                report.add_failure(k=k, error=str(e))
                continue

            accuracies = [r.test_accuracy for r in results]
            mean, std = mean_std(accuracies)
            rows.append([k, mean, std, len(accuracies)])
            series.append({"k": k, "mean": mean, "std": std, "accuracies": accuracies})
            logger.info(f"{config.STATS_EMOJI} k={k}: {format_percent(mean)} ± {format_percent(std)}")

        report.extra["series"] = series
        report.extra["best_k"] = max(series, key=lambda point: point["mean"])["k"] if series else None

        emit_text(format_tsv(["k", "mean", "std", "runs"], rows), args.output)
        if args.report is not None:
            emit_report(report, args)
        return 0


def setup(cli) -> None:
    cli.add_command(Sweep(cli))
