import numpy as np
import pytest

from conftest import box_disturbance
from ddinv import platoon
from ddinv.dataset import (ConsistencySet, DisturbanceSet, ExperimentData,
                           IntervalDisturbanceSet, assemble_W0,
                           build_consistency_set, consistency_bounded,
                           consistency_rows, random_box_disturbances,
                           random_inputs, random_vertex_disturbances,
                           richness_check, simulate_experiment)
from ddinv.errors import DimensionError, UnboundedSetError
from ddinv.polyhedra import is_bounded_general


# ----------------------------------------------------------------- simulation

def test_zero_system_gives_zero_data():
    data = simulate_experiment(np.eye(2), np.zeros((2, 1)), np.zeros(2),
                               np.zeros((1, 6)), np.zeros((2, 6)))
    assert not data.X0.any() and not data.X1.any()


def test_data_relation_holds_exactly():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 2))
    U = rng.standard_normal((2, 20))
    D = rng.standard_normal((3, 20))
    data = simulate_experiment(A, B, rng.standard_normal(3), U, D)
    # recomputing with the construction's own column arithmetic is bit-exact
    for k in range(data.T):
        step = A @ data.X0[:, k] + B @ data.U0[:, k] + data.D0[:, k]
        assert np.array_equal(data.X1[:, k], step)
    # matrix-form evaluation only reassociates the same sums
    residual = data.X1 - A @ data.X0 - B @ data.U0 - data.D0
    assert np.max(np.abs(residual)) < 1e-12
    # shift structure: states chain through time
    assert np.array_equal(data.X0[:, 1:], data.X1[:, :-1])


def test_platoon_dataset_matches_experiment_recipe():
    data = platoon.generate_dataset(T=1600, delta=0.05, seed=1)
    assert (data.n, data.m, data.T) == (3, 2, 1600)
    assert np.max(np.abs(data.U0)) <= 5.0
    assert np.max(np.abs(data.D0)) <= 0.05
    A, B = platoon.discrete_matrices()
    residual = data.X1 - A @ data.X0 - B @ data.U0 - data.D0
    assert np.max(np.abs(residual)) < 1e-12


# ------------------------------------------------------------------ stacking

def test_stacked_data_matrix_layout():
    data = ExperimentData(U0=[[3.0, 4.0]], X0=[[1.0, 2.0]], X1=[[0.0, 0.0]])
    assert np.array_equal(assemble_W0(data), [[1.0, 2.0], [3.0, 4.0]])


def test_stacked_zero_data():
    data = ExperimentData(U0=np.zeros((1, 3)), X0=np.zeros((2, 3)),
                          X1=np.zeros((2, 3)))
    assert not assemble_W0(data).any()


def test_platoon_stacked_shape():
    data = platoon.generate_dataset(T=1600, delta=0.05, seed=2)
    assert assemble_W0(data).shape == (5, 1600)  # n + m rows


# ------------------------------------------------------------------- richness

def test_rank_limited_by_short_experiments():
    data = platoon.generate_dataset(T=3, delta=0.01, seed=3)  # T < n + m
    rich, rank = richness_check(data)
    assert not rich and rank <= 3


def test_platoon_data_is_rich():
    data = platoon.generate_dataset(T=1600, delta=0.05, seed=4)
    rich, rank = richness_check(data)
    assert rich and rank == 5


def test_degenerate_experiment_is_not_rich():
    data = simulate_experiment(np.eye(2), np.zeros((2, 1)), np.zeros(2),
                               np.zeros((1, 8)), np.zeros((2, 8)))
    rich, rank = richness_check(data)
    assert not rich and rank == 0


# ----------------------------------------------------------- consistency set

def test_noiseless_consistency_set_is_least_squares_singleton():
    a, b = 0.8, 1.2
    U = random_inputs(1, 5, 1.0, seed=5)
    data = simulate_experiment([[a]], [[b]], [0.4], U, np.zeros((1, 5)))
    dist = DisturbanceSet(np.array([[1.0], [-1.0]]), 0.0)
    vt = build_consistency_set(data, dist)
    verts = vt.vertices()
    assert verts.num_vertices == 1
    W0 = assemble_W0(data)
    lstsq = np.linalg.lstsq(W0.T, data.X1.ravel(), rcond=None)[0]
    assert np.allclose(verts.vertices[0], lstsq, atol=1e-9)
    assert np.allclose(verts.vertices[0], [a, b], atol=1e-9)


def test_true_model_is_always_consistent():
    rng = np.random.default_rng(6)
    for _ in range(10):
        n, m, T = 2, 1, int(rng.integers(3, 8))
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        delta = float(rng.uniform(0.01, 0.3))
        U = random_inputs(m, T, 1.0, seed=int(rng.integers(2**31)))
        D0 = random_box_disturbances(n, delta, T, seed=int(rng.integers(2**31)))
        data = simulate_experiment(A, B, rng.standard_normal(n), U, D0)
        vt = build_consistency_set(data, box_disturbance(n, delta))
        assert vt.contains_model(np.hstack([A, B]), tol=1e-9)


def test_extra_column_shrinks_the_set():
    # the longer experiment's set is a subset: every sampled member of the
    # T+1 set satisfies the T set exactly (shared leading rows)
    rng = np.random.default_rng(7)
    A = np.array([[0.9]])
    B = np.array([[1.0]])
    delta = 0.1
    U = random_inputs(1, 9, 1.0, seed=70)
    D0 = random_box_disturbances(1, delta, 9, seed=71)
    data_long = simulate_experiment(A, B, [0.3], U, D0)
    data_short = data_long.truncated(8)
    dist = DisturbanceSet(np.array([[1.0], [-1.0]]), delta)
    vt_long = build_consistency_set(data_long, dist)
    vt_short = build_consistency_set(data_short, dist)
    pts = rng.uniform(-1, 2, (1000, 2))
    in_long = vt_long.H.contains_points(pts, tol=0.0)
    in_short = vt_short.H.contains_points(pts, tol=0.0)
    assert np.all(~in_long | in_short)  # membership in long implies short


def test_stacked_rows_match_columnwise_evaluation():
    # the Kronecker-stacked constraints evaluate exactly like the direct
    # column-by-column residual test
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(1, 3))
        m = int(rng.integers(1, 3))
        T = int(rng.integers(1, 5))
        data = simulate_experiment(
            rng.standard_normal((n, n)), rng.standard_normal((n, m)),
            rng.standard_normal(n), rng.standard_normal((m, T)),
            rng.standard_normal((n, T)))
        D = np.vstack([np.eye(n), -np.eye(n)])
        dist = DisturbanceSet(D, float(rng.uniform(0, 0.5)))
        H, h = consistency_rows(data, dist)
        V = rng.standard_normal((n, n + m))
        lhs = H @ V.flatten(order="F")
        W0 = assemble_W0(data)
        direct = -(D @ V @ W0).flatten(order="F")
        assert np.max(np.abs(lhs - direct)) < 1e-12
        rhs_direct = (dist.delta - D @ data.X1).flatten(order="F")
        assert np.max(np.abs(h - rhs_direct)) < 1e-12


def test_row_block_ordering_is_by_data_column():
    data = ExperimentData(U0=[[1.0, 2.0]], X0=[[3.0, 4.0]], X1=[[5.0, 6.0]])
    dist = DisturbanceSet(np.array([[1.0], [-1.0]]), 0.5)
    H, h = consistency_rows(data, dist)
    # block 0 rows come from data column 0: -(w_0' kron D)
    w0 = np.array([3.0, 1.0])
    assert np.allclose(H[:2], -np.kron(w0, dist.D.reshape(2, 1)).reshape(2, 2))
    assert np.allclose(h[:2], 0.5 - dist.D.ravel() * 5.0)


def test_minimized_set_has_same_membership():
    data = platoon.generate_dataset(T=30, delta=0.05, seed=9)
    dist = platoon.disturbance_set(0.05)
    vt_full = build_consistency_set(data, dist, minimize=False)
    vt_min = build_consistency_set(data, dist, minimize=True)
    assert vt_min.kept_rows is not None
    assert vt_min.H.num_rows < vt_full.H.num_rows
    rng = np.random.default_rng(10)
    A, B = platoon.discrete_matrices()
    center = np.hstack([A, B]).flatten(order="F")
    pts = center + rng.uniform(-0.5, 0.5, (10_000, 15))
    assert np.array_equal(vt_full.H.contains_points(pts),
                          vt_min.H.contains_points(pts))


# ---------------------------------------------------------------- boundedness

def test_interval_rewrite_matches_two_sided_membership():
    rng = np.random.default_rng(11)
    ival = IntervalDisturbanceSet(Dhat=rng.standard_normal((3, 2)),
                                  d_lower=-rng.uniform(0.5, 2, 3),
                                  d_upper=rng.uniform(0.5, 2, 3), delta=0.7)
    one_sided = ival.to_disturbance_set().to_halfspaces()
    two_sided = ival.to_two_sided().to_halfspaces()
    pts = rng.uniform(-3, 3, (500, 2))
    assert np.array_equal(one_sided.contains_points(pts),
                          two_sided.contains_points(pts))


def test_rich_data_and_full_rank_bound_gives_bounded_set():
    data = platoon.generate_dataset(T=30, delta=0.05, seed=12)
    ival = IntervalDisturbanceSet.box(3, 0.05)
    assert consistency_bounded(data, ival)


def test_single_column_experiment_unbounded():
    data = platoon.generate_dataset(T=1, delta=0.05, seed=13)
    assert not consistency_bounded(data, IntervalDisturbanceSet.box(3, 0.05))


def test_rank_test_agrees_with_recession_cone_lp():
    # tiny instances where the assembled polyhedron can be probed directly
    rng = np.random.default_rng(14)
    seen = {True: 0, False: 0}
    for trial in range(12):
        n, m = 1, 1
        T = int(rng.integers(1, 5))
        U = random_inputs(m, T, 1.0, seed=int(rng.integers(2**31)))
        if trial % 3 == 0:
            U = np.zeros((m, T))  # kill input excitation -> rank deficit
        data = simulate_experiment([[0.9]], [[1.0]], [0.5], U,
                                   random_box_disturbances(n, 0.1, T,
                                                           int(rng.integers(2**31))))
        ival = IntervalDisturbanceSet.box(n, 0.1)
        by_rank = consistency_bounded(data, ival)
        vt = build_consistency_set(data, ival.to_disturbance_set())
        by_lp = is_bounded_general(vt.H)
        assert by_rank == by_lp
        seen[by_rank] += 1
    assert seen[True] > 0 and seen[False] > 0


# ------------------------------------------------------------------ generators

def test_zero_range_inputs_are_zero():
    assert not random_inputs(2, 5, (0.0, 0.0), seed=0).any()


def test_same_seed_reproduces():
    a = random_inputs(2, 50, 5.0, seed=42)
    b = random_inputs(2, 50, 5.0, seed=42)
    assert np.array_equal(a, b)
    da = random_box_disturbances(3, 0.05, 50, seed=42)
    db = random_box_disturbances(3, 0.05, 50, seed=42)
    assert np.array_equal(da, db)


def test_box_disturbances_respect_bound():
    D = random_box_disturbances(3, 0.05, 200, seed=1)
    assert np.max(np.abs(D)) <= 0.05


def test_vertex_disturbances_live_on_vertices():
    dist = platoon.disturbance_set(0.05)
    cols = random_vertex_disturbances(dist, 64, seed=2)
    assert np.allclose(np.abs(cols), 0.05)


def test_vertex_disturbances_reject_unbounded_set():
    dist = DisturbanceSet(np.array([[1.0, 0.0]]), 0.1)  # a slab, unbounded
    with pytest.raises(UnboundedSetError):
        random_vertex_disturbances(dist, 4, seed=0)


def test_dimension_guards():
    with pytest.raises(DimensionError):
        ExperimentData(U0=np.zeros((1, 4)), X0=np.zeros((2, 3)),
                       X1=np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        simulate_experiment(np.eye(2), np.zeros((2, 1)), np.zeros(3),
                            np.zeros((1, 4)), np.zeros((2, 4)))
    vt = ConsistencySet(H=build_consistency_set(
        ExperimentData(U0=np.ones((1, 2)), X0=np.ones((1, 2)),
                       X1=np.ones((1, 2))),
        DisturbanceSet(np.array([[1.0], [-1.0]]), 0.1)).H, n=1, m=1, T=2,
        delta=0.1)
    with pytest.raises(DimensionError):
        vt.contains_model(np.ones((2, 2)))
