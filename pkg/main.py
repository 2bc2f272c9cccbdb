"""
HWGCN - Main Entry Point
GCN con matrices de pesos de vecinos de orden superior: construcción de
órdenes, aprendizaje de pesos por QP, entrenamiento y experimentos.

Python 3.10+ | numpy + scipy
"""

from __future__ import annotations

import argparse
import importlib
import logging
import sys
import time
from typing import Optional, Sequence

from colorama import Fore, init as colorama_init

from commands import COMMANDS
from config import config
from core.errors import HWGCNError
from utils.helpers import format_time, memory_usage

# Inicializar colorama para Windows
colorama_init()

LOG_FORMAT = (
    f"{Fore.LIGHTRED_EX}[{Fore.RESET}{Fore.BLUE}%(asctime)s{Fore.RESET}{Fore.LIGHTRED_EX}]{Fore.RESET} "
    f"{Fore.GREEN}→{Fore.RESET} {Fore.LIGHTCYAN_EX}%(message)s{Fore.RESET}"
)


def setup_logging(level: str = config.LOG_LEVEL, log_file: str = config.LOG_FILE) -> None:
    """Logging a stderr con colores y, opcionalmente, a un archivo UTF-8"""
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        datefmt="%H:%M:%S",
        handlers=handlers,
        force=True,
    )


logger = logging.getLogger(__name__)


class HWGCNCli:
    """Aplicación de línea de comandos"""

    def __init__(self):
        self.parser = argparse.ArgumentParser(
            prog="hwgcn",
            description="Clasificación de nodos con GCN y pesos de vecinos de orden k",
        )
        self.parser.add_argument("--threads", type=int, default=None,
                                 help="Hilos de trabajo (por defecto HWGCN_THREADS o núcleos físicos)")
        self.parser.add_argument("--log-level", default=None,
                                 choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                                 help="Nivel de logging (por defecto HWGCN_LOG_LEVEL)")
        self.parser.add_argument("--quiet", action="store_true",
                                 help="Desactivar las barras de progreso")
        self.subparsers = self.parser.add_subparsers(dest="command", required=True, metavar="COMANDO")

        self.start_time: float = time.time()
        self.commands: dict = {}

    def add_command(self, command) -> None:
        """Registrar un comando (equivalente a add_cog)"""
        parser = self.subparsers.add_parser(command.name, help=command.help, description=command.help)
        command.add_arguments(parser)
        parser.set_defaults(handler=command)
        self.commands[command.name] = command

    def load_commands(self) -> None:
        """Cargar los módulos listados en `commands.COMMANDS`"""
        for name in COMMANDS:
            module = importlib.import_module(f"commands.{name}")
            module.setup(self)
            logger.debug(f"{Fore.LIGHTGREEN_EX}✓ Cargado: commands.{name}{Fore.RESET}")

        logger.debug(f"📦 Comandos: {len(self.commands)} cargados")

    def configure(self, args: argparse.Namespace) -> None:
        """Aplicar los flags globales sobre la configuración (flag > entorno > defecto)"""
        if args.log_level:
            logging.getLogger().setLevel(args.log_level)
        if args.threads is not None:
            if args.threads < 1:
                self.parser.error("--threads debe ser >= 1")
            config.THREADS = args.threads
        if args.quiet:
            config.PROGRESS = False

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        args = self.parser.parse_args(argv)
        self.configure(args)

        command = args.handler
        logger.debug(f"{config.SETUP_EMOJI} {command.name} con {config.THREADS} hilos")
        try:
            code = command.run(args) or 0
        except Exception as error:
            return self.on_command_error(command.name, error)

        logger.debug(
            f"{config.SUCCESS_EMOJI} {command.name} completado en {format_time(time.time() - self.start_time)} "
            f"(memoria {memory_usage()})"
        )
        return code

    def on_command_error(self, command: str, error: Exception) -> int:
        """Manejador global de errores de comandos"""
        if isinstance(error, HWGCNError):
            logger.error(f"{config.ERROR_EMOJI} {command}: {error}")
            return 2

        # Error no manejado - log
        logger.error(f"Error en comando {command}: {error}", exc_info=error)
        return 1


def create_cli() -> HWGCNCli:
    cli = HWGCNCli()
    cli.load_commands()
    return cli


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Función principal"""
    setup_logging()
    return create_cli().run(argv)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("⚠️ Detenido por el usuario")
        sys.exit(130)
