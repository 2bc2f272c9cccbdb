"""
Comando train - Ejecuciones sembradas de GCN / HWGCN
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from commands import (
    Command,
    add_bundle_argument,
    add_output_arguments,
    add_split_arguments,
    add_train_arguments,
    config_echo,
    emit_report,
    open_bundle,
    positive_int,
    seeds_from,
    train_config_from,
)
from config import config
from core.data import GraphBundle
from core.errors import GraphError
from core.graph import AffinityMatrix
from core.lasso import load_weights
from core.model import save_params
from core.pipeline import build_filter, run_trials
from utils.helpers import format_percent, plural
from utils.reports import RunReport

logger = logging.getLogger(__name__)


def filter_from_args(bundle: GraphBundle, args: argparse.Namespace) -> tuple[str, AffinityMatrix]:
    """Filtro de propagación según --weights / --mlp / --unweighted-orders / --plain-gcn"""
    if args.weights is not None:
        dump = load_weights(args.weights)
        if dump.n != bundle.n:
            raise GraphError(f"el volcado de pesos es para n={dump.n}, el bundle tiene n={bundle.n}")
        S = build_filter(bundle, "hwgcn", weights=dump.weights, max_order=args.max_order,
                         symmetrize=args.symmetrize, mode=dump.mode)
        return "hwgcn", S
    if args.mlp:
        return "mlp", build_filter(bundle, "mlp")
    if args.unweighted_orders is not None:
        S = build_filter(bundle, "unweighted", max_order=args.unweighted_orders,
                         symmetrize=args.symmetrize, mode=args.mode)
        return "unweighted", S
    return "gcn", build_filter(bundle, "gcn")


class Train(Command):
    """🎯 Entrenamiento y evaluación sobre particiones fijas o aleatorias"""

    name = "train"
    help = "Entrenar R ejecuciones sembradas y reportar la exactitud media en test"
    emoji = "🎯"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        add_bundle_argument(parser)

        source = parser.add_mutually_exclusive_group()
        source.add_argument("--weights", type=Path, default=None, help="Volcado de pesos (HWGCN)")
        source.add_argument("--plain-gcn", action="store_true", help="Filtro S̃ de GCN (por defecto)")
        source.add_argument("--mlp", action="store_true", help="Sin propagación (filtro identidad)")
        source.add_argument("--unweighted-orders", type=positive_int, default=None, metavar="K",
                            help="Filtro A + Σ A^(k) sin pesos hasta K")

        parser.add_argument("--max-order", type=positive_int, default=None,
                            help="Usar solo W^(k) con k <= max-order")
        parser.add_argument("--mode", choices=["distance", "power"], default="distance",
                            help="Modo de soportes para --unweighted-orders")
        parser.add_argument("--symmetrize", action=argparse.BooleanOptionalAction, default=True,
                            help="W ← (W + Wᵀ)/2 antes de normalizar")
        parser.add_argument("--checkpoint", type=Path, default=None,
                            help="Guardar los parámetros de la última ejecución")

        add_split_arguments(parser)
        add_train_arguments(parser)
        add_output_arguments(parser)

    def run(self, args: argparse.Namespace) -> int:
        if args.max_order is not None and args.weights is None:
            self.fail("--max-order solo se aplica junto con --weights")

        bundle = open_bundle(args)
        kind, S = filter_from_args(bundle, args)
        cfg = train_config_from(args)
        seeds = seeds_from(args)

        logger.info(
            f"{self.emoji} {kind}: {len(seeds)} {plural(len(seeds), 'ejecución', 'ejecuciones')}, "
            f"partición {args.split}"
        )
        results = run_trials(
            bundle,
            S,
            split=args.split,
            per_class=args.per_class,
            seeds=seeds,
            cfg=cfg,
            split_dir=args.split_dir,
        )

        report = RunReport(command=self.name, config=config_echo(args))
        for result in results:
            report.add_run(result.seed, result.test_accuracy)
        report.extra["filter"] = kind
        report.extra["epochs"] = [r.epochs_run for r in results]
        report.extra["best_epochs"] = [r.best_epoch for r in results]
        report.extra["best_val_test_accuracies"] = [r.best_val_test_accuracy for r in results]

        logger.info(
            f"{config.STATS_EMOJI} Exactitud media {format_percent(report.mean)} "
            f"± {format_percent(report.std)} ({len(results)} ejecuciones)"
        )

        if args.checkpoint is not None:
            save_params(args.checkpoint, results[-1].params)
            logger.info(f"{config.SUCCESS_EMOJI} Checkpoint en {args.checkpoint}")

        emit_report(report, args)
        return 0


def setup(cli) -> None:
    cli.add_command(Train(cli))
