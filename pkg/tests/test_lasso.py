import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import path_graph, random_graph
from core.errors import FormatError, LassoError, SupportOverlapError
from core.graph import OrderMatrix, affinity, build_graph, order_matrices, power_supports
from core.lasso import (
    MAGNITUDE_LABELS,
    PUBMED_SCHEDULE,
    ProportionSchedule,
    ScaleCoefficients,
    WeightMatrix,
    assemble_filter,
    build_row_problem,
    dump_weights,
    learn_order_weights,
    load_schedule,
    load_weights,
    normalize_filter,
    scale_coefficients,
    unit_weights,
    weight_statistics,
)
from core.qp import solve


def first_order(g) -> OrderMatrix:
    return OrderMatrix(k=1, matrix=g.adjacency)


def random_problem(seed: int, n: int = 40, p: float = 0.1, dims: int = 6):
    g = random_graph(n, p, seed=seed)
    X = np.random.default_rng(seed).random((n, dims))
    return g, X, affinity(g), order_matrices(g, 3)


# ========== Coeficientes de escala ==========

def test_scale_coefficients_on_path():
    g = path_graph(3)
    X = np.array([[1.0], [0.0], [1.0]])
    second = order_matrices(g, 2)[1]
    alpha = scale_coefficients(g, X, second, affinity(g)).alpha
    # (S̃X)_0 = x_0 / 2, agregado de orden 2 = x_2
    assert_allclose(alpha, [0.5, 0.0, 0.5], atol=1e-15)


def test_scale_coefficients_clip_negative():
    g = path_graph(3)
    X = np.array([[1.0], [0.0], [-1.0]])
    second = order_matrices(g, 2)[1]
    alpha = scale_coefficients(g, X, second, affinity(g)).alpha
    assert alpha.tolist() == [0.0, 0.0, 0.0]


def test_scale_coefficients_minimize_residual():
    g, X, S, orders = random_problem(seed=3)
    second = orders[1]
    alpha = scale_coefficients(g, X, second, S).alpha
    aggregated = second.matrix @ X
    target = S.values @ X
    for i in np.flatnonzero(alpha > 0):
        gradient = (alpha[i] * aggregated[i] - target[i]) @ aggregated[i]
        assert abs(gradient) < 1e-9


# ========== Problemas por fila ==========

def test_row_problem_requires_positive_alpha(p4):
    second = order_matrices(p4, 2)[1]
    X = np.eye(4)
    alpha = ScaleCoefficients(k=2, alpha=np.zeros(4))
    with pytest.raises(LassoError):
        build_row_problem(0, second, X, affinity(p4), alpha)


def test_row_problem_without_neighbors():
    g = build_graph([(0, 1)], 3)
    second = order_matrices(g, 2)[1]
    alpha = ScaleCoefficients(k=2, alpha=np.ones(3))
    with pytest.raises(LassoError):
        build_row_problem(0, second, np.eye(3), affinity(g), alpha)


def test_row_problem_prefers_matching_neighbor():
    # N_2(0) = {2, 3}; x_2 coincide con el objetivo, x_3 es ortogonal
    g = build_graph([(0, 1), (1, 2), (1, 3)], 4)
    second = order_matrices(g, 2)[1]
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    alpha = ScaleCoefficients(k=2, alpha=np.array([0.75, 0.0, 0.0, 0.0]))

    problem = build_row_problem(0, second, X, affinity(g), alpha, target=X[2])
    assert problem.s == pytest.approx(1.5)
    assert_allclose(solve(problem).w, [1.5, 0.0], atol=1e-6)


# ========== Aprendizaje por orden ==========

def test_single_neighbor_row_gets_full_sum():
    g = path_graph(3)
    X = np.array([[1.0, 0.2], [0.1, 0.3], [0.8, 0.1]])
    S = affinity(g)
    second = order_matrices(g, 2)[1]
    alpha = scale_coefficients(g, X, second, S).alpha

    wm = learn_order_weights(g, X, second, S)
    assert wm.triplets == [(0, 2, alpha[0]), (2, 0, alpha[2])]
    assert wm.solved_rows == 2


@pytest.mark.parametrize("seed", range(5))
def test_row_sums_and_support(seed):
    g, X, S, orders = random_problem(seed)
    for ordk in orders[1:]:
        alpha = scale_coefficients(g, X, ordk, S).alpha
        wm = learn_order_weights(g, X, ordk, S)

        assert wm.failed_rows == 0
        assert wm.values.min(initial=0.0) >= 0.0
        assert_allclose(wm.row_sums(), alpha * ordk.row_sizes(), atol=1e-8)
        assert (wm.support() - wm.support().multiply(ordk.support())).nnz == 0


def test_zero_alpha_rows_keep_explicit_zeros():
    g = path_graph(3)
    X = np.array([[1.0], [0.0], [-1.0]])
    second = order_matrices(g, 2)[1]
    wm = learn_order_weights(g, X, second, affinity(g))
    assert wm.nnz == 2
    assert wm.values.tolist() == [0.0, 0.0]
    assert wm.solved_rows == 0


def test_empty_order_gives_empty_matrix():
    g = path_graph(3)
    third = order_matrices(g, 3)[2]
    wm = learn_order_weights(g, np.eye(3), third, affinity(g))
    assert wm.nnz == 0
    assert wm.k == 3


def test_learning_independent_of_threads():
    g, X, S, orders = random_problem(seed=8, n=60)
    serial = learn_order_weights(g, X, orders[1], S, threads=1)
    parallel = learn_order_weights(g, X, orders[1], S, threads=4)
    assert np.array_equal(serial.rows, parallel.rows)
    assert np.array_equal(serial.cols, parallel.cols)
    assert np.array_equal(serial.values, parallel.values)


def test_unit_weights(p4):
    second = order_matrices(p4, 2)[1]
    wm = unit_weights(second)
    assert wm.triplets == [(0, 2, 1.0), (1, 3, 1.0), (2, 0, 1.0), (3, 1, 1.0)]


def test_negative_weights_rejected():
    with pytest.raises(LassoError):
        WeightMatrix(k=2, n=2, rows=[0], cols=[1], values=[-0.1])


# ========== Calendario de proporciones ==========

@pytest.mark.parametrize(
    ("fraction", "size", "expected"),
    [(0.1, 30, 3), (0.2, 7, 2), (0.05, 5, 1), (1.0, 4, 4)],
)
def test_retained_counts(fraction, size, expected):
    assert ProportionSchedule.retained(fraction, size) == expected


def test_schedule_limits_row_sizes():
    g, X, S, orders = random_problem(seed=2, n=50, p=0.12)
    second = orders[1]
    schedule = ProportionSchedule({2: 0.5})
    alpha = scale_coefficients(g, X, second, S).alpha
    wm = learn_order_weights(g, X, second, S, schedule)

    counts = np.bincount(wm.rows, minlength=g.n)
    for i, size in enumerate(second.row_sizes()):
        expected = ProportionSchedule.retained(0.5, size) if size and alpha[i] > 0 else 0
        assert counts[i] == expected
    # el refit conserva la suma de cada fila
    assert_allclose(wm.row_sums(), alpha * second.row_sizes(), atol=1e-8)


def test_truncate_only_keeps_largest_weights():
    g, X, S, orders = random_problem(seed=6, n=50, p=0.12)
    second = orders[1]
    full = learn_order_weights(g, X, second, S).to_csr()
    truncated = learn_order_weights(g, X, second, S, ProportionSchedule({2: 0.5}), refit=False)

    for i, j, w in truncated.triplets:
        assert w == full[i, j]
    for i in np.unique(truncated.rows):
        kept = truncated.values[truncated.rows == i]
        row = full.getrow(i).toarray().ravel()
        dropped = np.sort(row[second.neighbors(i)])[: second.neighbors(i).size - kept.size]
        if dropped.size:
            assert dropped.max() <= kept.min()


def test_schedule_validation():
    with pytest.raises(LassoError):
        ProportionSchedule({1: 0.5})
    with pytest.raises(LassoError):
        ProportionSchedule({2: 0.0})
    with pytest.raises(LassoError):
        ProportionSchedule({2: 1.5})


def test_load_schedule(tmp_path):
    assert load_schedule("pubmed") is PUBMED_SCHEDULE
    assert PUBMED_SCHEDULE.get(2) == 0.20
    assert PUBMED_SCHEDULE.get(6) is None

    path = tmp_path / "schedule.tsv"
    path.write_text("# k\tfracción\n2\t0.3\n3\t0.1\n", encoding="utf-8")
    assert load_schedule(path).fractions == {2: 0.3, 3: 0.1}

    path.write_text("2\t0.3\n3\n", encoding="utf-8")
    with pytest.raises(FormatError) as info:
        load_schedule(path)
    assert info.value.line_no == 2


# ========== Filtro compuesto ==========

def test_assemble_symmetrizes_one_sided_weight():
    g = path_graph(3)
    W = assemble_filter(first_order(g), [WeightMatrix(k=2, n=3, rows=[0], cols=[2], values=[1.0])])
    dense = W.to_csr().toarray()
    assert dense[0, 2] == 0.5
    assert dense[2, 0] == 0.5
    assert dense[0, 1] == 1.0
    assert (dense == dense.T).all()


def test_assemble_rejects_overlap_in_distance_mode(c4):
    third = power_supports(c4, 3)[2]
    with pytest.raises(SupportOverlapError):
        assemble_filter(first_order(c4), [unit_weights(third)])
    with pytest.raises(AssertionError):
        assemble_filter(first_order(c4), [unit_weights(third)])


def test_assemble_sums_overlap_in_power_mode(c4):
    third = power_supports(c4, 3)[2]
    W = assemble_filter(first_order(c4), [unit_weights(third)], mode="power", symmetrize=False)
    assert W.to_csr()[0, 1] == 2.0


def test_composite_keeps_explicit_zeros():
    g = path_graph(3)
    zeros = WeightMatrix(k=2, n=3, rows=[0, 2], cols=[2, 0], values=[0.0, 0.0])
    W = assemble_filter(first_order(g), [zeros])
    assert W.nnz == g.adjacency.nnz + zeros.nnz


def test_empty_weights_reduce_to_gcn_affinity():
    g = random_graph(30, 0.1, seed=4)
    S = normalize_filter(assemble_filter(first_order(g), []))
    expected = affinity(g)
    assert np.array_equal(S.values.indptr, expected.values.indptr)
    assert np.array_equal(S.values.indices, expected.values.indices)
    assert np.array_equal(S.values.data, expected.values.data)


def test_normalized_filter_by_hand():
    g = path_graph(3)
    W = assemble_filter(first_order(g), [WeightMatrix(k=2, n=3, rows=[0, 2], cols=[2, 0], values=[0.5, 0.5])])
    S = normalize_filter(W).to_dense()
    assert S[0, 2] == pytest.approx(0.2)
    assert S[0, 0] == pytest.approx(0.4)
    assert S[1, 1] == pytest.approx(1 / 3)
    assert S[0, 1] == pytest.approx(1 / np.sqrt(7.5))
    assert_allclose(S, S.T, atol=1e-15)


def test_zero_row_normalizes_to_unit_vector():
    W = WeightMatrix(k=0, n=2, rows=[0, 1], cols=[1, 0], values=[0.0, 0.0])
    assert_allclose(normalize_filter(W).to_dense(), np.eye(2), atol=0.0)


# ========== Estadísticas y volcado ==========

def test_weight_statistics_buckets():
    wm = WeightMatrix(k=2, n=4, rows=[0, 1, 2, 3], cols=[1, 2, 3, 0], values=[1e-6, 5e-5, 0.5, 0.5])
    stats = weight_statistics(wm)
    assert list(stats) == list(MAGNITUDE_LABELS)
    assert stats["(0, 1e-5)"] == 25.0
    assert stats["(1e-5, 1e-4)"] == 25.0
    assert stats["(1e-1, inf)"] == 50.0
    assert sum(stats.values()) == pytest.approx(100.0)


def test_weight_statistics_empty():
    assert set(weight_statistics(WeightMatrix.empty(2, 3)).values()) == {0.0}


def test_dump_and_load_are_bit_exact(tmp_path):
    g, X, S, orders = random_problem(seed=12)
    weights = [learn_order_weights(g, X, ordk, S) for ordk in orders[1:]]
    path = dump_weights(tmp_path / "w.tsv", weights, g.n, 3)

    dump = load_weights(path)
    assert (dump.n, dump.K, dump.mode) == (g.n, 3, "distance")
    assert [wm.k for wm in dump.weights] == [2, 3]
    for original, loaded in zip(weights, dump.weights):
        assert np.array_equal(original.rows, loaded.rows)
        assert np.array_equal(original.cols, loaded.cols)
        assert np.array_equal(original.values, loaded.values)


def test_load_weights_reports_line(tmp_path):
    path = tmp_path / "w.tsv"
    path.write_text("#hwgcn-weights v1 n=3 K=2 mode=distance\n2\t0\t2\t0.5\n2\t0\tx\t0.5\n", encoding="utf-8")
    with pytest.raises(FormatError) as info:
        load_weights(path)
    assert info.value.line_no == 3

    path.write_text("#hwgcn-weights v1 n=3 K=2 mode=distance\n3\t0\t2\t0.5\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_weights(path)

    path.write_text("2\t0\t2\t0.5\n", encoding="utf-8")
    with pytest.raises(FormatError) as info:
        load_weights(path)
    assert info.value.line_no == 1


def test_load_weights_empty_orders(tmp_path):
    path = dump_weights(tmp_path / "w.tsv", [], n=5, K=3)
    dump = load_weights(path)
    assert [wm.nnz for wm in dump.weights] == [0, 0]
