"""
Reportes JSON de los comandos
"""

from __future__ import annotations

import datetime as dt
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from utils.helpers import dump_json, mean_std, write_json


@dataclass
class RunReport:
    """
    Resultado de un comando: eco de la configuración, exactitudes por
    ejecución y sus semillas. Las marcas de tiempo van aparte en `timing`
    para que el resto del reporte sea reproducible byte a byte.
    """

    command: str
    config: dict[str, Any]
    accuracies: list[float] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    failures: list[dict[str, Any]] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)
    started_at: float = field(default_factory=time.time)
    finished_at: Optional[float] = None

    def add_run(self, seed: int, accuracy: float) -> None:
        self.seeds.append(int(seed))
        self.accuracies.append(float(accuracy))

    def add_failure(self, **details: Any) -> None:
        self.failures.append(details)

    @property
    def mean(self) -> float:
        return mean_std(self.accuracies)[0]

    @property
    def std(self) -> float:
        return mean_std(self.accuracies)[1]

    def finish(self) -> RunReport:
        self.finished_at = time.time()
        return self

    @property
    def wall_clock(self) -> float:
        end = self.finished_at if self.finished_at is not None else time.time()
        return end - self.started_at

    def to_dict(self, *, timing: bool = True) -> dict[str, Any]:
        mean, std = mean_std(self.accuracies)
        data: dict[str, Any] = {
            "command": self.command,
            "config": self.config,
            "runs": len(self.accuracies),
            "seeds": self.seeds,
            "accuracies": self.accuracies,
            "mean": mean,
            "std": std,
            "failures": self.failures,
        }
        data.update(self.extra)
        if timing:
            data["timing"] = {
                "started_at": dt.datetime.fromtimestamp(self.started_at, tz=dt.timezone.utc).isoformat(),
                "wall_clock_s": round(self.wall_clock, 3),
            }
        return data

    def to_json(self, *, timing: bool = True) -> bytes:
        return dump_json(self.to_dict(timing=timing))

    def write(self, path: Union[str, Path], *, timing: bool = True) -> Path:
        return write_json(path, self.to_dict(timing=timing))
