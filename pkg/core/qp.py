"""
Solver ADMM (familia OSQP) para el subproblema por nodo

    minimizar ‖Fw − y‖²   sujeto a   w ≥ 0,  1ᵀw = s

Se resuelve como QP con P = FᵀF, q = −Fᵀy y restricciones C = [1ᵀ; I],
l = [s; 0], u = [s; +∞].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from core.errors import QpError
from core.parallel import parallel_map

logger = logging.getLogger(__name__)

RHO_MIN = 1e-6
RHO_MAX = 1e6
RHO_EQ_SCALE = 1e3


class SolverStatus(str, Enum):
    SOLVED = "solved"
    MAX_ITER = "max_iter"
    DEGENERATE = "infeasible-degenerate"


@dataclass(frozen=True)
class SolverConfig:
    """Parámetros ADMM (valores por defecto de OSQP)"""

    rho: float = 1.0
    sigma: float = 1e-6
    alpha: float = 1.6
    max_iter: int = 4000
    eps_abs: float = 1e-5
    eps_rel: float = 1e-5
    adaptive_rho: bool = True
    adaptive_rho_interval: int = 25
    check_interval: int = 5
    polish: bool = True

    def __post_init__(self):
        if self.rho <= 0 or self.sigma <= 0:
            raise QpError("rho y sigma deben ser positivos")
        if not 0 < self.alpha < 2:
            raise QpError(f"alpha de relajación fuera de (0, 2): {self.alpha}")
        if self.max_iter < 1:
            raise QpError("max_iter debe ser >= 1")
        if self.eps_abs < 0 or self.eps_rel < 0:
            raise QpError("las tolerancias no pueden ser negativas")
        if self.adaptive_rho_interval < 1 or self.check_interval < 1:
            raise QpError("los intervalos deben ser >= 1")


@dataclass(frozen=True, eq=False)
class QpProblem:
    """F (c × m): columnas candidatas; y (c): objetivo; s: suma requerida"""

    F: np.ndarray
    y: np.ndarray
    s: float

    def __post_init__(self):
        object.__setattr__(self, "F", np.atleast_2d(np.asarray(self.F, dtype=np.float64)))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.float64).ravel())
        object.__setattr__(self, "s", float(self.s))
        self.validate()

    @property
    def c(self) -> int:
        return self.F.shape[0]

    @property
    def m(self) -> int:
        return self.F.shape[1]

    def validate(self) -> None:
        if self.F.ndim != 2 or self.m < 1 or self.c < 1:
            raise QpError(f"F debe ser c × m con c, m >= 1 (forma {self.F.shape})")
        if self.y.shape[0] != self.c:
            raise QpError(f"y tiene longitud {self.y.shape[0]}, se esperaba {self.c}")
        if not (np.all(np.isfinite(self.F)) and np.all(np.isfinite(self.y)) and np.isfinite(self.s)):
            raise QpError("entradas no finitas (NaN/inf) en el problema")
        if self.s < 0:
            raise QpError(f"la suma requerida s debe ser >= 0 (recibido {self.s})")

    def objective(self, w: np.ndarray) -> float:
        residual = self.F @ w - self.y
        return float(residual @ residual)


@dataclass(frozen=True, eq=False)
class QpSolution:
    w: np.ndarray
    objective: float
    iterations: int
    status: SolverStatus


def _finalize(w: np.ndarray, s: float) -> np.ndarray:
    """Recortar negativos y reescalar a suma exacta s"""
    w = np.maximum(w, 0.0)
    total = w.sum()
    if total > 0:
        return w * (s / total)
    return np.full(w.shape[0], s / w.shape[0])


def _norm_inf(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


class _AdmmState:
    """Iteración ADMM sobre la forma reducida del sistema KKT"""

    def __init__(self, p: QpProblem, cfg: SolverConfig):
        m = p.m
        self.cfg = cfg
        self.P = p.F.T @ p.F
        self.q = -(p.F.T @ p.y)
        self.lower = np.concatenate([[p.s], np.zeros(m)])
        self.upper = np.concatenate([[p.s], np.full(m, np.inf)])

        self.x = np.full(m, p.s / m)
        self.z = self._C(self.x)
        self.dual = np.zeros(m + 1)

        self.rho = cfg.rho
        self._factorize()

    @staticmethod
    def _C(x: np.ndarray) -> np.ndarray:
        return np.concatenate([[x.sum()], x])

    @staticmethod
    def _Ct(v: np.ndarray) -> np.ndarray:
        return v[0] + v[1:]

    def _rho_vector(self) -> np.ndarray:
        rho = np.full(self.x.shape[0] + 1, self.rho)
        rho[0] = self.rho * RHO_EQ_SCALE
        return rho

    def _factorize(self) -> None:
        m = self.x.shape[0]
        self.rho_vec = self._rho_vector()
        kkt = self.P + (self.cfg.sigma + self.rho_vec[1]) * np.eye(m) + self.rho_vec[0] * np.ones((m, m))
        self.factor = cho_factor(kkt, lower=True, check_finite=False)

    def step(self) -> None:
        cfg = self.cfg
        rhs = cfg.sigma * self.x - self.q + self._Ct(self.rho_vec * self.z - self.dual)
        x_tilde = cho_solve(self.factor, rhs, check_finite=False)
        z_tilde = self._C(x_tilde)

        x_next = cfg.alpha * x_tilde + (1.0 - cfg.alpha) * self.x
        z_relax = cfg.alpha * z_tilde + (1.0 - cfg.alpha) * self.z
        z_next = np.clip(z_relax + self.dual / self.rho_vec, self.lower, self.upper)
        self.dual = self.dual + self.rho_vec * (z_relax - z_next)
        self.x, self.z = x_next, z_next

    def residuals(self) -> tuple[float, float, float, float]:
        Cx = self._C(self.x)
        Px = self.P @ self.x
        Cty = self._Ct(self.dual)
        r_prim = _norm_inf(Cx - self.z)
        r_dual = _norm_inf(Px + self.q + Cty)
        prim_scale = max(_norm_inf(Cx), _norm_inf(self.z))
        dual_scale = max(_norm_inf(Px), _norm_inf(Cty), _norm_inf(self.q))
        return r_prim, r_dual, prim_scale, dual_scale

    def adapt_rho(self, r_prim: float, r_dual: float, prim_scale: float, dual_scale: float) -> None:
        prim = r_prim / (prim_scale + 1e-10)
        dual = r_dual / (dual_scale + 1e-10)
        if dual <= 0:
            return
        new_rho = float(np.clip(self.rho * np.sqrt(prim / dual), RHO_MIN, RHO_MAX))
        if new_rho > 5.0 * self.rho or new_rho < 0.2 * self.rho:
            self.rho = new_rho
            self._factorize()


def solve(p: QpProblem, cfg: Optional[SolverConfig] = None) -> QpSolution:
    """
    Resolver el QP por ADMM.
    La salida se proyecta a w >= 0 exacto y se reescala a 1ᵀw = s.
    """
    cfg = cfg or SolverConfig()
    p.validate()
    m = p.m

    if p.s == 0:
        w = np.zeros(m)
        return QpSolution(w=w, objective=p.objective(w), iterations=0, status=SolverStatus.SOLVED)
    if m == 1:
        w = np.array([p.s])
        return QpSolution(w=w, objective=p.objective(w), iterations=0, status=SolverStatus.SOLVED)

    uniform = np.full(m, p.s / m)
    uniform_objective = p.objective(uniform)

    try:
        state = _AdmmState(p, cfg)
    except LinAlgError:
        logger.debug("Factorización de Cholesky fallida, se devuelve el punto uniforme")
        return QpSolution(w=uniform, objective=uniform_objective, iterations=0,
                          status=SolverStatus.DEGENERATE)

    status = SolverStatus.MAX_ITER
    best_w, best_objective = uniform, uniform_objective
    iterations = 0

    for iterations in range(1, cfg.max_iter + 1):
        state.step()

        check = iterations % cfg.check_interval == 0
        adapt = cfg.adaptive_rho and iterations % cfg.adaptive_rho_interval == 0
        if not (check or adapt or iterations == cfg.max_iter):
            continue

        r_prim, r_dual, prim_scale, dual_scale = state.residuals()
        if not (np.isfinite(r_prim) and np.isfinite(r_dual)):
            status = SolverStatus.DEGENERATE
            break

        candidate = _finalize(state.z[1:], p.s)
        candidate_objective = p.objective(candidate)
        if candidate_objective < best_objective:
            best_w, best_objective = candidate, candidate_objective

        eps_prim = cfg.eps_abs + cfg.eps_rel * prim_scale
        eps_dual = cfg.eps_abs + cfg.eps_rel * dual_scale
        if r_prim <= eps_prim and r_dual <= eps_dual:
            status = SolverStatus.SOLVED
            break

        if adapt:
            try:
                state.adapt_rho(r_prim, r_dual, prim_scale, dual_scale)
            except LinAlgError:
                status = SolverStatus.DEGENERATE
                break

    if cfg.polish and status is not SolverStatus.DEGENERATE:
        polished = _polish(p, best_w)
        if polished is not None:
            polished_objective = p.objective(polished)
            if polished_objective <= best_objective:
                best_w, best_objective = polished, polished_objective

    return QpSolution(w=best_w, objective=best_objective, iterations=iterations, status=status)


def _polish(p: QpProblem, w: np.ndarray) -> Optional[np.ndarray]:
    """
    Refinar sobre el conjunto activo {j : w_j > 0} resolviendo el
    mínimo cuadrado con la restricción de igualdad (sistema KKT).
    Devuelve None si la solución refinada no es factible.
    """
    active = np.flatnonzero(w > 0)
    if active.size == 0:
        return None

    F_active = p.F[:, active]
    size = active.size
    kkt = np.zeros((size + 1, size + 1))
    kkt[:size, :size] = 2.0 * (F_active.T @ F_active)
    kkt[:size, size] = 1.0
    kkt[size, :size] = 1.0
    rhs = np.concatenate([2.0 * (F_active.T @ p.y), [p.s]])

    solution, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    w_active = solution[:size]
    if not np.all(np.isfinite(w_active)) or np.any(w_active < 0):
        return None

    polished = np.zeros_like(w)
    polished[active] = w_active
    return _finalize(polished, p.s)


def solve_batch(
    problems: Sequence[QpProblem],
    cfg: Optional[SolverConfig] = None,
    threads: Optional[int] = None
) -> list[QpSolution]:
    """Resolver varios problemas; el orden se conserva y cada resultado es idéntico a solve()"""
    cfg = cfg or SolverConfig()

    def run(item: tuple[int, QpProblem]) -> QpSolution:
        index, problem = item
        try:
            return solve(problem, cfg)
        except QpError as e:
            raise QpError(str(e), index=index) from e

    return parallel_map(run, list(enumerate(problems)), threads)
