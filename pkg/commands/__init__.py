"""
Paquete de comandos de la CLI
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional

from config import config
from core.data import GraphBundle, load_bundle
from core.lasso import ProportionSchedule, load_schedule
from core.model import TrainConfig
from core.qp import SolverConfig
from utils.helpers import parse_range
from utils.reports import RunReport

logger = logging.getLogger(__name__)

# Flags que no cambian el resultado
ECHO_SKIP = ("handler", "no_timing", "report", "output", "threads", "log_level", "quiet")

# Comandos cargados por main.py
COMMANDS = [
    "orders",
    "weights",
    "train",
    "sweep",
    "depth",
    "stats",
]


class Command:
    """Base de los comandos (un módulo por comando con `setup(cli)`)"""

    name: str = ""
    help: str = ""
    emoji: str = ""

    def __init__(self, cli):
        self.cli = cli
        self.parser: Optional[argparse.ArgumentParser] = None

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        self.parser = parser

    def run(self, args: argparse.Namespace) -> int:
        raise NotImplementedError

    def fail(self, message: str) -> None:
        """Conflicto de configuración: mensaje de uso y código 2"""
        self.parser.error(message)


# ========== Argumentos compartidos ==========

def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"se esperaba un entero >= 1: {text}")
    return value


def order_range(text: str) -> list[int]:
    try:
        return parse_range(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def add_bundle_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("bundle", type=Path, help="Directorio del bundle")


def add_output_arguments(parser: argparse.ArgumentParser, *, tsv: bool = False) -> None:
    if tsv:
        parser.add_argument("--output", "-o", type=Path, default=None,
                            help="Serie TSV (por defecto stdout)")
    parser.add_argument("--report", type=Path, default=None,
                        help="Reporte JSON (por defecto stdout)" if not tsv else "Reporte JSON")
    parser.add_argument("--no-timing", action="store_true",
                        help="Omitir marcas de tiempo del reporte")


def add_mode_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=["distance", "power"], default="distance",
                        help="Matrices de distancia exacta o soportes de potencias de A")


def add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver QP")
    group.add_argument("--proportions", default=None,
                       help="Calendario de proporciones (archivo k<TAB>fracción o `pubmed`)")
    group.add_argument("--truncate-only", action="store_true",
                       help="Truncar al top por peso sin volver a resolver")
    group.add_argument("--row-normalize-features-for-lasso", action=argparse.BooleanOptionalAction,
                       default=True, help="Normalizar por filas las características del Lasso")
    group.add_argument("--rho", type=float, default=SolverConfig.rho)
    group.add_argument("--max-iter", type=int, default=SolverConfig.max_iter)
    group.add_argument("--eps-abs", type=float, default=SolverConfig.eps_abs)
    group.add_argument("--eps-rel", type=float, default=SolverConfig.eps_rel)
    group.add_argument("--no-adaptive-rho", action="store_true")
    group.add_argument("--no-polish", action="store_true")


def add_split_arguments(parser: argparse.ArgumentParser, *, runs: int = 1) -> None:
    group = parser.add_argument_group("particiones")
    group.add_argument("--split", choices=["fixed", "random"], default="fixed")
    group.add_argument("--per-class", type=int, choices=[5, 10, 20], default=20)
    group.add_argument("--split-dir", type=Path, default=None,
                       help="Directorio de la partición fija (por defecto <bundle>/split)")
    group.add_argument("--runs", type=positive_int, default=runs)
    group.add_argument("--seed", type=int, default=0, help="Semilla de la primera ejecución")


def add_train_arguments(parser: argparse.ArgumentParser, *, layers: bool = True) -> None:
    group = parser.add_argument_group("entrenamiento")
    if layers:
        group.add_argument("--layers", type=int, default=TrainConfig.layers)
    group.add_argument("--hidden", type=int, default=TrainConfig.hidden)
    group.add_argument("--lr", type=float, default=TrainConfig.lr)
    group.add_argument("--l2", type=float, default=TrainConfig.l2)
    group.add_argument("--dropout", type=float, default=TrainConfig.dropout)
    group.add_argument("--epochs", type=int, default=TrainConfig.max_epochs)
    group.add_argument("--early-stop-window", type=int, default=TrainConfig.early_stop_window)
    group.add_argument("--no-early-stop", action="store_true")
    group.add_argument("--select", choices=["final", "best-val"], default="final",
                       help="Exactitud de test del modelo final o de la mejor época en validación")


# ========== Construcción de configuraciones ==========

def solver_config_from(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        rho=args.rho,
        max_iter=args.max_iter,
        eps_abs=args.eps_abs,
        eps_rel=args.eps_rel,
        adaptive_rho=not args.no_adaptive_rho,
        polish=not args.no_polish,
    )


def schedule_from(args: argparse.Namespace) -> Optional[ProportionSchedule]:
    return load_schedule(args.proportions) if args.proportions else None


def train_config_from(args: argparse.Namespace, **overrides: Any) -> TrainConfig:
    values = dict(
        layers=getattr(args, "layers", TrainConfig.layers),
        hidden=args.hidden,
        lr=args.lr,
        l2=args.l2,
        dropout=args.dropout,
        max_epochs=args.epochs,
        early_stop_window=args.early_stop_window,
        early_stopping=not args.no_early_stop,
        selection=args.select.replace("-", "_"),
        seed=args.seed,
    )
    values.update(overrides)
    return TrainConfig(**values)


def seeds_from(args: argparse.Namespace) -> list[int]:
    return [args.seed + r for r in range(args.runs)]


def config_echo(args: argparse.Namespace) -> dict[str, Any]:
    """Argumentos del comando en forma serializable"""
    echo = {}
    for key, value in sorted(vars(args).items()):
        if key in ECHO_SKIP:
            continue
        echo[key] = str(value) if isinstance(value, Path) else value
    return echo


def open_bundle(args: argparse.Namespace) -> GraphBundle:
    return load_bundle(args.bundle)


# ========== Salida ==========

def emit_text(text: str, path: Optional[Path]) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    logger.info(f"{config.SUCCESS_EMOJI} Escrito {path}")


def emit_report(report: RunReport, args: argparse.Namespace) -> None:
    report.finish()
    timing = not args.no_timing
    if args.report is None:
        emit_text(report.to_json(timing=timing).decode("utf-8"), None)
        return
    report.write(args.report, timing=timing)
    logger.info(f"{config.SUCCESS_EMOJI} Reporte en {args.report}")
