import numpy as np
import pytest

from pdsplit import instances as I
from pdsplit import operators as ops
from pdsplit import sets as S
from pdsplit import oracle as O
from pdsplit.problem import Triple


def test_grid_spec_cap_and_shape():
    g = O.GridSpec.uniform(-1.0, 1.0, 5, 3)
    assert g.size == 125 and g.points().shape == (125, 3)
    assert np.allclose(g.pitch, 0.5)
    with pytest.raises(ValueError, match="cap"):
        O.GridSpec.uniform(0.0, 1.0, 1000, 3)
    with pytest.raises(ValueError):
        O.GridSpec((0.0,), (1.0,), (1,))
    with pytest.raises(ValueError, match="cap"):
        O.grid_saddle_scan(I.skew().triple, O.GridSpec.uniform(0, 1, 2000, 2), O.GridSpec.uniform(0, 1, 2000, 2))


def test_grid_scan_skew_hits_graph():
    inst = I.skew()
    R = inst.extra["A"]
    g = O.GridSpec.uniform(-2.0, 2.0, 41, 2)
    found = O.grid_saddle_scan(inst.triple, g, g, tol=1e-9)
    assert found
    # grid points lie exactly on gra(-A) when y = -Ax; every such point is found
    expected = sum(1 for x in g.points() if np.all(np.abs(-R @ x) <= 2.0 + 1e-12))
    assert len(found) == expected
    for c in found:
        assert np.linalg.norm(c.y + R @ c.x) <= 1e-9
    assert [c.residual for c in found] == sorted(c.residual for c in found)


def test_grid_scan_zero_triple():
    t = Triple(ops.Zero(1), np.eye(1), ops.Zero(1), 0.5, 0.5)
    g = O.GridSpec.uniform(-1.0, 1.0, 11, 1)
    found = O.grid_saddle_scan(t, g, g, tol=1e-12)
    # saddle set is R x {0}
    assert len(found) == 11 and all(c.y[0] == 0.0 for c in found)


def test_grid_scan_dimension_check():
    g = O.GridSpec.uniform(-1.0, 1.0, 3, 3)
    with pytest.raises(ValueError, match="dimensions"):
        O.grid_saddle_scan(I.skew().triple, g, g)


def test_cluster_points():
    pts = [np.array([0.0, 0.0]), np.array([1e-8, 0.0]), np.array([1.0, 1.0])]
    c = O.cluster_points(pts, 1e-6)
    assert c.count == 2 and c.counts == [2, 1]
    assert np.allclose(c.representatives[0], [5e-9, 0.0])
    assert O.cluster_points([], 1.0).count == 0
    assert O.cluster_points(pts[:1], 1.0).counts == [1]
    assert set(c.to_json()) == {"representatives", "counts", "radius"}


def test_multistart_strongly_monotone_unique():
    rng = np.random.default_rng(0)
    L = rng.standard_normal((2, 3))
    t = Triple(ops.ScaledIdentity(3, 1.0), L, ops.ScaledIdentity(2, 2.0), 0.5 / np.linalg.norm(L, 2), 0.5 / np.linalg.norm(L, 2))
    res = O.multistart_limits(t, n_starts=6, seed=1, tol=1e-12, radius=1e-8)
    assert res.failed == 0 and res.primal.count == 1 and res.dual.count == 1
    # unique zero of Id + L^T (2 Id) L is 0
    assert np.linalg.norm(res.primal.representatives[0]) <= 1e-10


def test_multistart_lasso_deterministic():
    t = I.lasso_desk().triple
    a = O.multistart_limits(t, n_starts=4, seed=9, tol=1e-11, radius=1e-6)
    b = O.multistart_limits(t, n_starts=4, seed=9, tol=1e-11, radius=1e-6)
    assert a.dual.count == 1
    for (xa, ya), (xb, yb) in zip(a.limits, b.limits):
        assert np.array_equal(xa, xb) and np.array_equal(ya, yb)


def test_multistart_counts_failures():
    res = O.multistart_limits(I.lasso_desk().triple, n_starts=2, seed=0, tol=1e-14, max_iter=3)
    assert res.failed == 2 and res.limits == []
    with pytest.raises(ValueError):
        O.multistart_limits(I.skew().triple, n_starts=0)


def test_dykstra_box_and_hyperplane(rng):
    C = np.vstack([np.eye(3), -np.eye(3)])
    d = np.ones(6)
    E, f = np.ones((1, 3)), np.array([0.5])
    P = O.polyhedron_projectors(C, d, E, f)
    for _ in range(20):
        x = 4 * rng.standard_normal(3)
        p = O.dykstra(P, x)
        q = S.Polyhedron(C, d, E, f).project(x)
        assert np.allclose(p, q, atol=1e-7)


def test_qp_minkowski_matches_point_sets():
    Z, K = S.Point(np.array([1.0, 2.0])), S.Point(np.array([3.0]))
    L = np.array([[1.0, -1.0]])
    p = O.qp_minkowski_projection(np.zeros(2), Z, K, L, 0.5)
    assert np.allclose(p, [1.0 - 1.5, 2.0 + 1.5], atol=1e-7)


def test_same_set():
    a = S.Box([0.0, 0.0], [1.0, 1.0])
    b = S.Polyhedron(np.vstack([np.eye(2), -np.eye(2)]), np.array([1.0, 1.0, 0.0, 0.0]))
    assert O.same_set(a, b, n_samples=50)[0]
    assert not O.same_set(a, S.Box([0.0, 0.0], [1.0, 2.0]), n_samples=50)[0]
    assert not O.same_set(a, S.Whole(3))[0]
    assert O.same_set(S.Empty(2), S.Empty(2))[0]


@pytest.mark.parametrize("inst", [I.subspace_feasibility(), I.kernel_example(), I.box_interior(),
                                  I.dr_subspaces(), I.box_feasibility(), I.lasso_segment()],
                         ids=lambda i: i.name)
def test_theorem_suite_never_fails(inst):
    reps = O.conditional_theorem_suite(inst.triple, inst.Z, inst.K)
    assert reps and all(r.status != "failed" for r in reps)
    for r in reps:
        assert set(r.to_json()) == {"theorem_id", "hypothesis_holds", "conclusion_verified", "witnesses"}


def test_theorem_suite_applies_somewhere():
    applied = {r.theorem_id for inst in (I.subspace_feasibility(), I.box_interior(), I.kernel_example())
               for r in O.conditional_theorem_suite(inst.triple, inst.Z, inst.K) if r.hypothesis_holds}
    assert len(applied) >= 3
