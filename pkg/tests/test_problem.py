import numpy as np
import pytest

from pdsplit import instances as I
from pdsplit import operators as ops
from pdsplit.problem import (
    SaddleCandidate,
    Triple,
    dual,
    product_triple,
    saddle_residual,
    triple_from_json,
    triple_to_json,
)
from pdsplit.splitting import cp_step, iterate

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def zero_triple():
    return Triple(ops.Zero(2), np.eye(2), ops.Zero(2), 1.0, 1.0)


def test_step_size_invariant():
    with pytest.raises(ValueError, match="step sizes"):
        Triple(ops.Zero(2), 2 * np.eye(2), ops.Zero(2), 1.0, 1.0)
    with pytest.raises(ValueError, match="dimension mismatch"):
        Triple(ops.Zero(3), np.eye(2), ops.Zero(2), 1.0, 1.0)
    with pytest.raises(ValueError):
        Triple(ops.Zero(2), np.eye(2), ops.Zero(2), 0.0, 1.0)
    # equality is allowed
    Triple(ops.Zero(2), 2 * np.eye(2), ops.Zero(2), 0.5, 0.5)


def test_dual_structure():
    t = I.subspace_feasibility().triple
    d = dual(t)
    assert np.array_equal(d.L, -t.L.T)
    assert (d.sigma, d.tau) == (t.tau, t.sigma)
    assert d.sigma * d.tau * d.norm_L ** 2 <= 1 + 1e-12


def test_dual_of_zero_triple():
    d = dual(zero_triple())
    # primal solutions of the dual are {0}
    assert saddle_residual(d, np.zeros(2), np.zeros(2)) == 0.0
    assert saddle_residual(d, np.array([1.0, 0.0]), np.zeros(2)) > 0


def test_dual_of_skew_example(rng):
    t = I.skew().triple
    d = dual(t)
    assert np.array_equal(d.L, -np.eye(2))
    # B^{-1} = A and A^{-1} = B as operators
    A, B = ops.LinearMonotone(ROT), ops.LinearMonotone(-ROT)
    for _ in range(20):
        x = rng.standard_normal(2)
        assert np.allclose(d.A.resolve(0.5, x), A.resolve(0.5, x), atol=1e-12)
        assert np.allclose(d.B.resolve(0.5, x), B.resolve(0.5, x), atol=1e-12)


@pytest.mark.parametrize("build", [I.skew, I.subspace_feasibility, I.lasso_desk, I.box_feasibility, I.three_boxes])
def test_biduality(build, rng):
    t = build().triple
    dd = dual(dual(t))
    X = rng.standard_normal((100, t.n))
    Y = rng.standard_normal((100, t.m))
    assert np.abs(saddle_residual(dd, X, Y) - saddle_residual(t, X, Y)).max() <= 1e-10


def test_residual_examples():
    assert saddle_residual(zero_triple(), np.zeros(2), np.zeros(2)) == 0.0
    t = I.skew().triple
    x = np.array([1.0, 2.0])
    assert saddle_residual(t, x, -ROT @ x) <= 1e-12
    assert saddle_residual(t, x, -ROT @ x + np.array([0.5, 0.0])) > 0.1


def test_residual_zero_on_lasso_limit():
    t = I.lasso_desk().triple
    tr = iterate(t, "full", tol=1e-12, keep_iterates=False)
    assert saddle_residual(t, tr.x, tr.y) <= 1e-8


@pytest.mark.parametrize("build", [I.skew, I.subspace_feasibility, I.box_feasibility, I.lasso_segment])
def test_residual_swap_symmetry(build):
    t = build().triple
    tr = iterate(t, "full", start=(np.ones(t.n), np.ones(t.m)), tol=1e-13, keep_iterates=False)
    assert saddle_residual(t, tr.x, tr.y) <= 1e-9
    assert saddle_residual(dual(t), tr.y, tr.x) <= 1e-9


def test_saddle_candidate():
    t = I.skew().triple
    c = SaddleCandidate.evaluate(t, [1.0, 0.0], [1.0, 0.0])
    assert c.residual == pytest.approx(saddle_residual(t, c.x, c.y))


def test_product_single_part_matches_plain_trajectory():
    inst = I.three_boxes()
    A = inst.triple.A
    Lj, Bj = inst.extra["parts"][1]
    s = 0.5 / np.linalg.norm(Lj, 2)
    prod = product_triple(A, [(Lj, Bj)], s, s)
    plain = Triple(A, Lj, Bj, s, s)
    x, y = np.full(3, 1.5), np.full(2, -0.5)
    u, v = x.copy(), y.copy()
    for _ in range(300):
        x, y = cp_step(prod, x, y)
        u, v = cp_step(plain, u, v)
        assert np.array_equal(x, u) and np.array_equal(y, v)


def test_product_two_subspaces_gives_triple_intersection(rng):
    from pdsplit import sets as S

    U = S.subspace(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    V1 = S.subspace(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))
    V2 = S.subspace(np.array([[1.0], [1.0], [2.0]]))
    t = product_triple(ops.NormalConeAffine(U), [(np.eye(3), ops.NormalConeAffine(V1)),
                                                  (np.eye(3), ops.NormalConeAffine(V2))], 0.5, 0.5)
    Z = S.intersect(U, V1, V2)
    for _ in range(5):
        tr = iterate(t, "full", start=(rng.standard_normal(3), rng.standard_normal(6)), tol=1e-12)
        assert Z.contains(tr.x, 1e-7)


def test_product_blockwise_resolvent(rng):
    inst = I.three_boxes()
    t = inst.triple
    y = rng.standard_normal(6)
    joint = t.Binv.resolve(0.7, y)
    blocks = [Bj.inverse().resolve(0.7, yj) for (_, Bj), yj in zip(inst.extra["parts"], np.split(y, 3))]
    assert np.array_equal(joint, np.concatenate(blocks))


def test_product_errors():
    with pytest.raises(ValueError):
        product_triple(ops.Zero(3), [], 1.0, 1.0)
    with pytest.raises(ValueError):
        product_triple(ops.Zero(3), [(np.eye(2), ops.Zero(2))], 0.1, 0.1)


@pytest.mark.parametrize("build", [I.skew, I.subspace_feasibility, I.three_boxes, I.lasso_segment])
def test_json_round_trip(build, rng):
    t = build().triple
    u = triple_from_json(triple_to_json(t))
    X, Y = rng.standard_normal((10, t.n)), rng.standard_normal((10, t.m))
    assert np.allclose(saddle_residual(u, X, Y), saddle_residual(t, X, Y), atol=1e-12)


def test_json_missing_field():
    with pytest.raises(KeyError, match="sigma"):
        triple_from_json({"A": {"kind": "zero"}, "L": [[1.0]], "B": {"kind": "zero"}, "tau": 1.0})
