import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from conftest import random_bounded_polytope
from ddinv import platoon
from ddinv.dataset import (DisturbanceSet, build_consistency_set,
                           simulate_experiment)
from ddinv.errors import DimensionError, EmptySetError, UnboundedSetError
from ddinv.polyhedra import (HPolyhedron, TwoSidedPolyhedron, VPolytope,
                             check_nonempty, chebyshev_center, contains,
                             enumerate_vertices, is_bounded_general,
                             is_bounded_two_sided, remove_redundant,
                             sample_hit_and_run, sample_vertex_mixture)

UNIT_BOX_2D = HPolyhedron.unit_box(2)


# ---------------------------------------------------------------- membership

def test_contains_interior_point():
    assert contains(UNIT_BOX_2D, [0.0, 0.0], tol=0.0)


def test_contains_rejects_violated_row():
    assert not contains(UNIT_BOX_2D, [1.0 + 1e-3, 0.0], tol=1e-9)


def test_platoon_set_contains_origin(platoon_state_set):
    # the benchmark target set has the origin strictly inside
    assert contains(platoon_state_set, np.zeros(3))
    assert np.all(platoon_state_set.A @ np.zeros(3) < platoon_state_set.b)


def test_contains_dimension_mismatch():
    with pytest.raises(DimensionError):
        contains(UNIT_BOX_2D, [0.0, 0.0, 0.0])


# ------------------------------------------------------- two-sided rank test

def test_two_sided_identity_bounded():
    P = TwoSidedPolyhedron(np.eye(3), -np.ones(3), np.ones(3))
    assert is_bounded_two_sided(P)


def test_two_sided_wide_matrix_unbounded():
    P = TwoSidedPolyhedron(np.array([[1.0, 0.0]]), [-1.0], [1.0])
    assert not is_bounded_two_sided(P)


def test_two_sided_tall_full_rank_bounded():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    P = TwoSidedPolyhedron(A, -np.ones(3), np.ones(3))
    assert is_bounded_two_sided(P)


def test_two_sided_rank_agrees_with_recession_cone():
    # both directions of the boundedness lemma, randomized
    rng = np.random.default_rng(11)
    checked = {True: 0, False: 0}
    for _ in range(50):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(n, n + 3))
        A = rng.standard_normal((m, n))
        if rng.random() < 0.5 and n > 1:
            A[:, -1] = A[:, 0]  # force a kernel direction
        bound = np.abs(rng.uniform(0.5, 2.0, m))
        P = TwoSidedPolyhedron(A, -bound, bound)  # 0 is always a member
        by_rank = is_bounded_two_sided(P)
        by_lp = is_bounded_general(P.to_halfspaces())
        assert by_rank == by_lp
        checked[by_rank] += 1
    assert checked[True] > 0 and checked[False] > 0


# ------------------------------------------------------ general boundedness

def test_unit_box_bounded():
    assert is_bounded_general(UNIT_BOX_2D)


def test_half_plane_unbounded():
    P = HPolyhedron(np.array([[1.0, 0.0]]), np.array([1.0]))
    assert not is_bounded_general(P)


def test_platoon_set_bounded_cross_checked(platoon_state_set):
    assert is_bounded_general(platoon_state_set)
    # independent evidence: the vertex hull reproduces the set on samples
    V = enumerate_vertices(platoon_state_set)
    hull = ConvexHull(V.vertices)
    rng = np.random.default_rng(0)
    pts = sample_vertex_mixture(V, 500, seed=1)
    pts = np.vstack([pts, rng.uniform(-15, 15, (500, 3))])
    in_hull = np.all(pts @ hull.equations[:, :3].T
                     + hull.equations[:, 3] <= 1e-7, axis=1)
    in_set = platoon_state_set.contains_points(pts, tol=1e-7)
    assert np.array_equal(in_hull, in_set)


# --------------------------------------------------------- vertex enumeration

def test_unit_box_vertices():
    V = enumerate_vertices(UNIT_BOX_2D)
    expect = {(sx, sy) for sx in (-1, 1) for sy in (-1, 1)}
    got = {tuple(np.round(v).astype(int)) for v in V.vertices}
    assert V.num_vertices == 4 and got == expect


def test_simplex_vertices():
    P = HPolyhedron(np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]),
                    np.array([0.0, 0.0, 1.0]))
    V = enumerate_vertices(P)
    got = sorted(tuple(np.round(v, 9)) for v in V.vertices)
    assert got == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]


def test_platoon_vertices_match_analytic_corners(platoon_state_set):
    # S stacks a row block R over -R, so the set is {|Rx| <= 1} and the
    # vertices are the preimages of the 8 sign patterns under R.
    V = enumerate_vertices(platoon_state_set)
    R = platoon.S_MATRIX[:3]
    corners = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1)
                        for sz in (-1, 1)], dtype=float)
    expect = np.linalg.solve(R, corners.T).T
    assert V.num_vertices == 8
    for v in V.vertices:
        assert min(np.max(np.abs(v - e)) for e in expect) < 1e-9


def test_enumeration_rejects_unbounded():
    P = HPolyhedron(np.array([[1.0, 0.0]]), np.array([1.0]))
    with pytest.raises(UnboundedSetError):
        enumerate_vertices(P)


def test_enumeration_dimension_cap_message():
    n = 12
    with pytest.raises(DimensionError, match="capped at dimension"):
        enumerate_vertices(HPolyhedron.unit_box(n))


def test_hull_membership_reproduces_contains():
    rng = np.random.default_rng(7)
    for trial in range(5):
        n = int(rng.integers(2, 4))
        P = random_bounded_polytope(rng, n)
        V = enumerate_vertices(P)
        hull = ConvexHull(V.vertices)
        pts = rng.uniform(-2.0, 2.0, (1000, n))
        in_hull = np.all(pts @ hull.equations[:, :n].T
                         + hull.equations[:, n] <= 1e-8, axis=1)
        in_set = P.contains_points(pts, tol=1e-8)
        # agreement except within a hair of the boundary
        disagree = in_hull != in_set
        if disagree.any():
            margin = np.max(np.abs(P.A @ pts[disagree].T - P.b[:, None]))
            assert margin < 1e-6
        assert disagree.mean() < 0.01


def test_vertices_activate_enough_minimal_rows():
    rng = np.random.default_rng(19)
    for _ in range(5):
        n = int(rng.integers(2, 4))
        P = random_bounded_polytope(rng, n)
        reduced, _ = remove_redundant(P)
        V = enumerate_vertices(P)
        for v in V.vertices:
            active = np.sum(np.abs(reduced.A @ v - reduced.b) <= 1e-7)
            assert active >= n


# ---------------------------------------------------------------- redundancy

def test_remove_redundant_drops_looser_copy():
    P = HPolyhedron(np.array([[1.0], [1.0]]), np.array([1.0, 2.0]))
    reduced, kept = remove_redundant(P)
    assert list(kept) == [0]
    assert reduced.num_rows == 1


def test_remove_redundant_keeps_minimal_box():
    reduced, kept = remove_redundant(UNIT_BOX_2D)
    assert list(kept) == [0, 1, 2, 3]


def test_remove_redundant_duplicate_consistency_rows():
    # noiseless scalar experiment with a repeated data column produces
    # duplicated constraint blocks; exactly one copy must survive
    a, b = 0.7, 1.0
    U = np.array([[1.0, 1.0, -0.5]])
    X0 = np.array([[2.0, 2.0, 0.3]])
    X1 = a * X0 + b * U
    from ddinv.dataset import ExperimentData
    data = ExperimentData(U0=U, X0=X0, X1=X1)
    dist = DisturbanceSet(np.array([[1.0], [-1.0]]), 0.05)
    vt_full = build_consistency_set(data, dist, minimize=False)
    vt_min = build_consistency_set(data, dist, minimize=True)
    assert vt_min.H.num_rows < vt_full.H.num_rows
    # identical membership on random samples
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2, 2, (4000, 2)) + np.array([a, b])
    assert np.array_equal(vt_full.H.contains_points(pts),
                          vt_min.H.contains_points(pts))


def test_remove_redundant_output_strictly_irredundant():
    rng = np.random.default_rng(23)
    for method in ("sequential", "clarkson"):
        P = random_bounded_polytope(rng, 3, extra_rows=12)
        reduced, kept = remove_redundant(P, method=method)
        # per-row LP: dropping any kept row must enlarge the reachable max
        for i in range(reduced.num_rows):
            others = np.delete(np.arange(reduced.num_rows), i)
            from ddinv.lp import LinearProgram, solve_lp
            cap = np.vstack([reduced.A[others], reduced.A[i][None, :]])
            rhs = np.concatenate([reduced.b[others], [reduced.b[i] + 1.0]])
            sol = solve_lp(LinearProgram(num_vars=3,
                                         objective=-reduced.A[i],
                                         inequalities=(cap, rhs)))
            assert -sol.objective_value > reduced.b[i] + 1e-9
        # same set
        pts = rng.uniform(-2, 2, (2000, 3))
        assert np.array_equal(P.contains_points(pts),
                              reduced.contains_points(pts))


# --------------------------------------------------------------- nonemptiness

def test_nonempty_detects_contradiction():
    P = HPolyhedron(np.array([[1.0], [-1.0]]), np.array([1.0, -2.0]))
    ok, witness = check_nonempty(P)
    assert not ok and witness is None


def test_disturbance_set_nonempty_at_any_delta():
    for delta in (0.0, 0.05, 1.0):
        P = platoon.disturbance_set(delta).to_halfspaces()
        ok, witness = check_nonempty(P)
        assert ok
        assert contains(P, witness)
        assert contains(P, np.zeros(3))  # 0 is always admissible


def test_platoon_consistency_set_nonempty(platoon_system):
    # the generating model is always a consistent witness
    data = platoon.generate_dataset(T=40, delta=0.03, seed=9)
    vt = build_consistency_set(data, platoon.disturbance_set(0.03))
    ok, witness = check_nonempty(vt.H)
    assert ok
    A, B = platoon_system
    assert vt.contains_model(np.hstack([A, B]))


def test_chebyshev_center_radius():
    c, r = chebyshev_center(UNIT_BOX_2D)
    assert r == pytest.approx(1.0, abs=1e-7)
    assert np.allclose(c, 0.0, atol=1e-7)


# ------------------------------------------------------------------ sampling

def test_hit_and_run_stays_inside():
    rng = np.random.default_rng(4)
    P = random_bounded_polytope(rng, 3)
    pts = sample_hit_and_run(P, 200, seed=5)
    assert np.all(P.contains_points(pts, tol=1e-9))


def test_vertex_mixture_stays_inside():
    V = enumerate_vertices(UNIT_BOX_2D)
    pts = sample_vertex_mixture(V, 100, seed=6)
    assert np.all(UNIT_BOX_2D.contains_points(pts, tol=1e-12))
