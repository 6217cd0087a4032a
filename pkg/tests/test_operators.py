import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdsplit import operators as ops
from pdsplit import sets as S

from strategies import gammas, seeds

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def catalogue():
    """One instance of every variant on R^3."""
    skew3 = np.array([[0.0, -2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    plane = S.Affine(np.array([0.0, 0.0, 1.0]), np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    return {
        "zero": ops.Zero(3),
        "scaled_identity": ops.ScaledIdentity(3, 2.5),
        "linear": ops.LinearMonotone(skew3),
        "normal_cone_affine": ops.NormalConeAffine(plane),
        "normal_cone_box": ops.NormalConeBox([-1.0, 0.0, -np.inf], [1.0, 2.0, 0.5]),
        "projection": ops.ProjectionOp(np.array([[1.0], [1.0], [0.0]])),
        "constant": ops.ConstantOp([1.0, -2.0, 0.5]),
        "shifted_l1": ops.ShiftedL1Subdiff(0.7, [0.3, -1.0, 0.0]),
        "product": ops.ProductOp((ops.ScaledIdentity(1, 1.0), ops.NormalConeBox([0.0, 0.0], [1.0, 1.0]))),
    }


CAT = catalogue()


def test_zero_resolvent_is_identity():
    assert np.array_equal(ops.Zero(2).resolve(1.0, np.array([3.0, -2.0])), [3.0, -2.0])


def test_shifted_l1_resolvent_by_subgradient_membership():
    A = ops.ShiftedL1Subdiff(1.0, np.zeros(2))
    x = np.array([2.0, -0.5])
    p = A.resolve(1.0, x)
    assert np.allclose(p, [1.0, 0.0])
    # oracle: x - p must be a subgradient of ||.||_1 at p
    g = x - p
    assert g[0] == pytest.approx(1.0) and abs(g[1]) <= 1.0


def test_projection_op_resolvent_by_block_decomposition():
    A = ops.ProjectionOp(np.array([1.0, 0.0]))
    p = A.resolve(1.0, np.array([2.0, 2.0]))
    # (I + P_U) p = x: on U the map is 2 Id, on U^perp it is Id
    assert np.allclose(p, [1.0, 2.0])
    assert np.allclose(p + np.array([p[0], 0.0]), [2.0, 2.0])


def test_closed_forms(rng):
    x = rng.standard_normal(3)
    g = 0.8
    assert np.allclose(CAT["scaled_identity"].resolve(g, x), x / (1 + g * 2.5))
    M = CAT["linear"].M
    assert np.allclose((np.eye(3) + g * M) @ CAT["linear"].resolve(g, x), x)
    assert np.allclose(CAT["constant"].resolve(g, x), x - g * np.array([1.0, -2.0, 0.5]))
    assert np.allclose(CAT["normal_cone_box"].resolve(g, x), np.clip(x, [-1, 0, -np.inf], [1, 2, 0.5]))


@pytest.mark.parametrize("name", list(CAT))
def test_firm_nonexpansiveness(name, rng):
    A = CAT[name]
    for gamma in (0.5, 1.0, 2.0):
        X1 = 3 * rng.standard_normal((1000, 3))
        X2 = 3 * rng.standard_normal((1000, 3))
        J1 = np.array([A.resolve(gamma, x) for x in X1])
        J2 = np.array([A.resolve(gamma, x) for x in X2])
        d = J1 - J2
        lhs = np.einsum("ij,ij->i", d, X1 - X2)
        assert np.all(lhs >= np.einsum("ij,ij->i", d, d) - 1e-9)


@pytest.mark.parametrize("name", list(CAT))
@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_moreau_resolvent_identity(name, gamma, rng):
    A = CAT[name]
    Ainv = ops.inverse(A)
    for _ in range(50):
        x = 3 * rng.standard_normal(3)
        assert np.allclose(A.resolve(gamma, x) + gamma * Ainv.resolve(1 / gamma, x / gamma), x, atol=1e-10)


@pytest.mark.parametrize("name", list(CAT))
def test_graph_consistency(name, rng):
    A = CAT[name]
    for _ in range(100):
        gamma = float(rng.choice([0.5, 1.0, 2.0]))
        z = 3 * rng.standard_normal(3)
        p = A.resolve(gamma, z)
        u = (z - p) / gamma
        assert A.value_at(p).contains(u, 1e-8)
        assert A.contains(p, u)
        # inverse graph is the swap
        assert ops.inverse(A).contains(u, p)
        # a probe off the graph moves under the resolvent
        v = u + rng.standard_normal(3)
        assert A.value_at(p).contains(v, 1e-8) == bool(np.linalg.norm(A.resolve(gamma, p + gamma * v) - p) <= 1e-8)


@given(st.sampled_from(list(CAT)), seeds, gammas)
def test_resolvent_graph_property(name, seed, gamma):
    A = CAT[name]
    z = 5 * np.random.default_rng(seed).standard_normal(3)
    p = A.resolve(gamma, z)
    assert A.contains(p, (z - p) / gamma, 1e-7)


def test_inverse_examples(rng):
    Zinv = ops.inverse(ops.Zero(3))
    assert np.allclose(Zinv.resolve(1.0, rng.standard_normal(3)), 0.0)
    assert np.allclose(ops.inverse(ops.ScaledIdentity(2, 1.0)).resolve(1.0, np.array([2.0, 4.0])), [1.0, 2.0])
    A, B = ops.LinearMonotone(ROT), ops.LinearMonotone(-ROT)
    for _ in range(50):
        x = rng.standard_normal(2)
        g = float(rng.uniform(0.1, 3))
        assert np.allclose(ops.inverse(A).resolve(g, x), B.resolve(g, x), atol=1e-12)


def test_double_inverse_behaves_as_original(rng):
    for A in CAT.values():
        AA = ops.inverse(ops.inverse(A))
        assert AA is not A
        for _ in range(10):
            x = rng.standard_normal(3)
            assert np.allclose(AA.resolve(1.3, x), A.resolve(1.3, x), atol=1e-10)


def test_value_at_examples():
    assert np.array_equal(ops.Zero(2).value_at(np.array([4.0, 1.0])).v, [0.0, 0.0])
    box = ops.NormalConeBox(-np.ones(3), np.ones(3))
    v = S.simplify(box.value_at(np.array([0.2, -0.9, 0.0])).to_polyhedron())
    assert isinstance(v, S.Point) and np.array_equal(v.v, np.zeros(3))
    axis = S.subspace(np.array([[1.0], [0.0]]), 2)
    N = ops.NormalConeAffine(axis).value_at(np.array([5.0, 0.0]))
    # oracle: normal cone definition <u, c - x> <= 0 on samples of U
    for u in ([0.0, 1.0], [0.0, -3.0]):
        assert N.contains(np.array(u))
        assert all(np.dot(u, np.array([c, 0.0]) - [5.0, 0.0]) <= 1e-12 for c in np.linspace(-9, 9, 19))
    assert not N.contains(np.array([1.0, 0.0]))
    assert ops.NormalConeAffine(axis).value_at(np.array([1.0, 1.0])).is_empty


def test_paramonotone_flags():
    for name, A in CAT.items():
        assert A.paramonotone == (name != "linear")
    assert not ops.LinearMonotone(ROT).paramonotone
    assert ops.LinearMonotone(np.eye(2) + ROT).paramonotone  # strongly monotone


def test_skew_breaks_paramonotonicity():
    A = ops.LinearMonotone(ROT)
    x0, x1 = np.array([1.0, 0.0]), np.array([0.0, 0.0])
    u0, u1 = ROT @ x0, ROT @ x1
    assert abs((x0 - x1) @ (u0 - u1)) <= 1e-15
    assert not A.contains(x0, u1)


def test_constructor_errors():
    with pytest.raises(ValueError):
        ops.LinearMonotone(np.array([[-1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        ops.ShiftedL1Subdiff(0.0, np.zeros(2))
    with pytest.raises(ValueError):
        ops.NormalConeBox([1.0], [0.0])
    with pytest.raises(ValueError):
        ops.Zero(2).resolve(1.0, np.zeros(3))
    with pytest.raises(ValueError):
        ops.Zero(2).resolve(0.0, np.zeros(2))


@pytest.mark.parametrize("name", list(CAT))
def test_json_round_trip(name, rng):
    A = CAT[name]
    B = ops.operator_from_json(A.to_json())
    x = rng.standard_normal(3)
    assert np.allclose(A.resolve(0.7, x), B.resolve(0.7, x))


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown operator kind"):
        ops.operator_from_json({"kind": "nope"})
