from itertools import combinations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.errors import QpError
from core.qp import QpProblem, SolverConfig, SolverStatus, solve, solve_batch


def active_set_oracle(F: np.ndarray, y: np.ndarray, s: float) -> np.ndarray:
    """Mínimo exacto enumerando todos los conjuntos activos"""
    m = F.shape[1]
    best, best_value = None, np.inf
    for size in range(1, m + 1):
        for active in combinations(range(m), size):
            cols = list(active)
            Fa = F[:, cols]
            kkt = np.zeros((size + 1, size + 1))
            kkt[:size, :size] = 2.0 * Fa.T @ Fa
            kkt[:size, size] = 1.0
            kkt[size, :size] = 1.0
            rhs = np.concatenate([2.0 * Fa.T @ y, [s]])
            try:
                solution = np.linalg.solve(kkt, rhs)[:size]
            except np.linalg.LinAlgError:
                continue
            if np.any(solution < -1e-12):
                continue
            w = np.zeros(m)
            w[cols] = np.maximum(solution, 0.0)
            value = np.sum((F @ w - y) ** 2)
            if value < best_value:
                best, best_value = w, value
    return best


def test_single_variable_forced_by_constraint():
    solution = solve(QpProblem(F=np.array([[1.0], [2.0]]), y=np.zeros(2), s=3.5))
    assert solution.w.tolist() == [3.5]
    assert solution.status is SolverStatus.SOLVED


def test_zero_sum_gives_zero_weights():
    solution = solve(QpProblem(F=np.eye(3), y=np.ones(3), s=0.0))
    assert solution.w.tolist() == [0.0, 0.0, 0.0]


def test_interior_optimum():
    solution = solve(QpProblem(F=np.eye(2), y=np.array([3.0, 1.0]), s=4.0))
    assert_allclose(solution.w, [3.0, 1.0], atol=1e-6)
    assert solution.objective == pytest.approx(0.0, abs=1e-10)


def test_nonnegativity_becomes_active():
    solution = solve(QpProblem(F=np.eye(2), y=np.array([5.0, -1.0]), s=2.0))
    assert_allclose(solution.w, [2.0, 0.0], atol=1e-6)
    assert solution.w.min() >= 0.0


def test_zero_columns_return_uniform_point():
    solution = solve(QpProblem(F=np.zeros((3, 4)), y=np.zeros(3), s=2.0))
    assert_allclose(solution.w, np.full(4, 0.5), atol=1e-12)


def test_invalid_inputs():
    with pytest.raises(QpError):
        QpProblem(F=np.array([[np.nan, 1.0]]), y=np.zeros(1), s=1.0)
    with pytest.raises(QpError):
        QpProblem(F=np.eye(2), y=np.zeros(2), s=-1.0)
    with pytest.raises(QpError):
        QpProblem(F=np.eye(2), y=np.zeros(3), s=1.0)


def test_solver_config_validation():
    with pytest.raises(QpError):
        SolverConfig(alpha=2.0)
    with pytest.raises(QpError):
        SolverConfig(rho=0.0)


def test_matches_active_set_oracle_on_random_problems():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        m = int(rng.integers(1, 4))
        F = rng.normal(size=(4, m))
        y = rng.normal(size=4)
        s = float(rng.uniform(0.1, 3.0))

        expected = active_set_oracle(F, y, s)
        solution = solve(QpProblem(F=F, y=y, s=s))
        assert_allclose(solution.w, expected, atol=1e-3)


def test_feasibility_always_holds():
    rng = np.random.default_rng(9)
    for _ in range(100):
        m = int(rng.integers(2, 12))
        F = rng.normal(size=(6, m))
        y = rng.normal(size=6)
        s = float(rng.uniform(0.0, 5.0))
        w = solve(QpProblem(F=F, y=y, s=s), SolverConfig(max_iter=200)).w
        assert w.min() >= 0.0
        assert w.sum() == pytest.approx(s, abs=1e-9)


def test_never_worse_than_uniform_start():
    rng = np.random.default_rng(4)
    for _ in range(50):
        F = rng.normal(size=(5, 6))
        y = rng.normal(size=5)
        p = QpProblem(F=F, y=y, s=1.0)
        solution = solve(p, SolverConfig(max_iter=10))
        assert solution.objective <= p.objective(np.full(6, 1.0 / 6)) + 1e-12


def test_solve_batch_matches_solve_and_keeps_order():
    rng = np.random.default_rng(1)
    problems = [QpProblem(F=rng.normal(size=(3, 3)), y=rng.normal(size=3), s=1.0) for _ in range(12)]
    batch = solve_batch(problems, threads=4)
    for problem, solution in zip(problems, batch):
        assert np.array_equal(solution.w, solve(problem).w)


def test_solve_batch_reports_problem_index():
    problems = [QpProblem(F=np.eye(2), y=np.ones(2), s=1.0) for _ in range(3)]
    problems[1].F[0, 0] = np.nan
    with pytest.raises(QpError) as info:
        solve_batch(problems, threads=1)
    assert info.value.index == 1
