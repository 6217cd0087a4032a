import itertools

import numpy as np
import pytest
from hypothesis import given

from pdsplit import fenchel as F
from pdsplit import instances as I
from pdsplit import sets as S
from pdsplit import solution_sets as ss
from pdsplit.oracle import GridSpec, multistart_limits

from strategies import seeds


def lasso_data(seed=42, n=10, m=5, ratio=0.1):
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return L, b, ratio * np.abs(L.T @ b).max()


# independent conjugate proxes, written from the closed-form conjugates
CONJ_PROX = {
    "l1": lambda f, g, v: np.clip(v + f.c, -f.lam, f.lam) - f.c,  # f* = indicator of [-lam, lam] - c
    "quad": lambda f, g, v: v / (1.0 + g),  # f* = 1/2||u||^2 - const
}


def test_primal_value_trivial():
    q = F.QuadPlusConst(np.zeros(2))
    assert F.primal_value(q, q, np.eye(2), np.zeros(2)) == 0.0


def test_lasso_split_identity(rng):
    L, b, lam = lasso_data()
    _, f, g = F.lasso_instance(L, b, lam)
    assert F.primal_value(f, g, L, np.zeros(10)) == pytest.approx(0.5 * b @ b, abs=1e-14)
    for _ in range(50):
        x = 3 * rng.standard_normal(10)
        assert abs(F.primal_value(f, g, L, x) - F.lasso_objective(L, b, lam, x)) <= 1e-12 * (1 + abs(F.lasso_objective(L, b, lam, x)))


@given(seeds)
def test_weak_duality(seed):
    rng = np.random.default_rng(seed)
    L, b, lam = lasso_data(seed=seed % 1000)
    _, f, g = F.lasso_instance(L, b, lam)
    x, y = 3 * rng.standard_normal(10), 3 * rng.standard_normal(5)
    assert F.primal_value(f, g, L, x) + F.dual_value(f, g, L, y) >= -1e-9


@pytest.mark.parametrize("kind", ["l1", "quad"])
def test_moreau_decomposition_closed_forms(kind, rng):
    f = F.ScaledL1WithLinear(0.7, rng.standard_normal(4)) if kind == "l1" else F.QuadPlusConst(rng.standard_normal(4))
    for gamma in (0.3, 1.0, 2.5):
        for _ in range(50):
            x = 3 * rng.standard_normal(4)
            lhs = f.prox(gamma, x) + gamma * CONJ_PROX[kind](f, 1.0 / gamma, x / gamma)
            assert np.allclose(lhs, x, atol=1e-10)
            # the generic conjugate prox agrees with the closed form
            assert np.allclose(f.conj_prox(gamma, x), CONJ_PROX[kind](f, gamma, x), atol=1e-10)


def test_moreau_decomposition_exp_pair(rng):
    f, g, _ = F.exp_counterexample()
    for h in (f, g):
        conj = F.Separable(tuple(p.conj() for p in h.parts))
        for gamma in (0.5, 1.0, 3.0):
            for _ in range(30):
                x = 2 * rng.standard_normal(2)
                assert np.allclose(h.prox(gamma, x) + gamma * conj.prox(1 / gamma, x / gamma), x, atol=1e-10)


def test_exp_prox_optimality(rng):
    for _ in range(50):
        v, gamma = 3 * rng.standard_normal(), float(rng.uniform(0.1, 5))
        p = F.Exp().prox(gamma, v)
        assert abs(p + gamma * np.exp(p) - v) <= 1e-10 * (1 + abs(v))
        q = F.ExpConj().prox(gamma, v)
        assert q > 0 and abs(q + gamma * np.log(q) - v) <= 1e-10 * (1 + abs(v))


def test_exp_conj_values():
    h = F.ExpConj()
    assert h.value(0.0) == 0.0 and h.value(-1e-9) == np.inf
    assert h.value(1.0) == pytest.approx(-1.0)


@pytest.mark.parametrize("which", ["l1", "quad", "box", "exp"])
def test_fenchel_young_and_firm_prox(which, rng):
    fn = {
        "l1": F.ScaledL1WithLinear(0.5, rng.standard_normal(2)),
        "quad": F.QuadPlusConst(rng.standard_normal(2)),
        "box": F.Indicator(S.Box([-1.0, 0.0], [1.0, 2.0])),
        "exp": F.exp_counterexample()[0],
    }[which]
    for _ in range(200):
        x, u = 2 * rng.standard_normal(2), 2 * rng.standard_normal(2)
        if which == "box":
            x = fn.C.project(x)
        assert fn.value(x) + fn.conj_value(u) >= x @ u - 1e-8
    for _ in range(200):
        a, b = 3 * rng.standard_normal(2), 3 * rng.standard_normal(2)
        pa, pb = fn.prox(1.3, a), fn.prox(1.3, b)
        assert (pa - pb) @ (a - b) >= (pa - pb) @ (pa - pb) - 1e-9


def test_indicator_support_function():
    box = F.Indicator(S.Box([-1.0, 0.0], [1.0, 2.0]))
    assert box.conj_value(np.array([2.0, -3.0])) == pytest.approx(2.0)
    half = F.Indicator(S.RayProduct(("nonneg", "free")))
    assert half.conj_value(np.array([-1.0, 0.0])) == 0.0
    assert half.conj_value(np.array([1.0, 0.0])) == np.inf
    line = F.Indicator(S.subspace(np.array([1.0, 0.0])))
    assert line.conj_value(np.array([0.0, 5.0])) == 0.0 and line.conj_value(np.array([1.0, 0.0])) == np.inf
    with pytest.raises(S.UnsupportedStructure):
        F.Indicator(S.Polyhedron(np.ones((1, 2)), np.ones(1))).conj_value(np.ones(2))


def test_total_duality_lasso_desk():
    L, b, lam = lasso_data()
    t, f, g = F.lasso_instance(L, b, lam)
    v = F.total_duality_check(f, g, L, t.sigma, t.tau, seed=0)
    assert v.total and v.primal_attained and v.dual_attained
    assert abs(v.gap) <= 1e-7 and v.mu + v.mu_star >= -1e-7
    assert v.argmin_certified
    assert set(v.to_json()) >= {"mu", "mu_star", "gap", "primal_attained", "dual_attained", "total"}


def test_total_duality_feasibility_indicators():
    axis = F.Indicator(S.subspace(np.array([1.0, 0.0])))
    v = F.total_duality_check(axis, axis, np.eye(2), 1.0, 1.0, start=(np.array([1.0, 3.0]), np.array([0.5, -1.0])))
    assert v.total and v.mu == 0.0


def test_exp_counterexample_not_attained():
    f, g, L = F.exp_counterexample()
    v = F.total_duality_check(f, g, L, 0.9, 0.9, tol=1e-2, start=(np.ones(2), np.zeros(2)))
    assert v.mu_est <= 1e-2 and np.linalg.norm(v.x) >= 10 and abs(v.gap) <= 1e-2
    assert not v.primal_attained and not v.total
    json = v.to_json()
    assert isinstance(json["mu"], (float, str))


def test_lasso_scalar_shrinkage():
    L, b = np.array([[1.0]]), np.array([2.0])
    t, f, g = F.lasso_instance(L, b, 1.0)
    v = F.total_duality_check(f, g, L, t.sigma, t.tau)
    assert v.x == pytest.approx([1.0], abs=1e-8)
    assert v.y == pytest.approx([1.0], abs=1e-8)  # k = B(Lz) = Lz = b - soft residual = 1
    Z = F.lasso_solution_set(L, b, 1.0, v.y)
    assert isinstance(Z, S.Point) and Z.v == pytest.approx([1.0], abs=1e-8)


def test_lasso_dual_unique_across_starts():
    inst = I.lasso_desk()
    res = multistart_limits(inst.triple, n_starts=10, seed=7, tol=1e-11, radius=1e-6)
    assert res.dual.count == 1 and res.dual.radius <= 1e-6


def test_lasso_interior_case(rng):
    L, b, _ = lasso_data(seed=5)
    lam = np.abs(L.T @ b).max() * 1.0001
    t, f, g = F.lasso_instance(L, b, lam)
    v = F.total_duality_check(f, g, L, t.sigma, t.tau, n_perturb=0)
    assert np.abs(v.x).max() <= 1e-9
    Z = F.lasso_solution_set(L, b, lam, v.y)
    assert isinstance(Z, S.Point) and not np.any(Z.v)


def test_lasso_injective_singleton(rng):
    L = rng.standard_normal((6, 3))
    b = rng.standard_normal(6)
    lam = 0.3 * np.abs(L.T @ b).max()
    t, f, g = F.lasso_instance(L, b, lam)
    v = F.total_duality_check(f, g, L, t.sigma, t.tau, n_perturb=0)
    Z = F.lasso_solution_set(L, b, lam, v.y)
    assert isinstance(Z, S.Point)
    assert np.linalg.norm(Z.v - np.linalg.pinv(L) @ v.y) <= 1e-9
    assert np.linalg.norm(Z.v - v.x) <= 1e-7


def test_lasso_segment_set_against_grid():
    inst = I.lasso_segment()
    L, b, lam = inst.extra["L"], inst.extra["b"], inst.extra["lam"]
    Z = F.lasso_solution_set(L, b, lam, np.array([1.0]))
    g = GridSpec.uniform(-1.0, 2.0, 121, 2).points()
    obj = np.array([F.lasso_objective(L, b, lam, p) for p in g])
    best = obj.min()
    for p, o in zip(g, obj):
        assert Z.contains(p, 1e-9) == (o <= best + 1e-12)
    for z in (np.array([1.0, 0.0]), np.array([0.25, 0.75])):
        assert abs(F.lasso_objective(L, b, lam, z) - best) <= 1e-4


def test_lasso_solution_set_rejects_bad_k():
    L, b, lam = lasso_data()
    with pytest.raises(ValueError, match="fails validation"):
        F.lasso_solution_set(L, b, lam, 10 * np.ones(5))
    with pytest.raises(ValueError):
        F.lasso_instance(L, b, 0.0)


def test_primal_limit_beats_perturbations():
    L, b, lam = lasso_data()
    t, f, g = F.lasso_instance(L, b, lam)
    v = F.total_duality_check(f, g, L, t.sigma, t.tau, n_perturb=1000, seed=3)
    assert v.details["perturbation_margin"] >= -1e-7


def test_dual_traversal_inclusion_on_segment(rng):
    # L^T K_z is contained in L^T K_x for the CP limit z and any minimizer x
    inst = I.lasso_segment()
    t = inst.triple
    res = multistart_limits(t, n_starts=3, seed=2, tol=1e-12)
    for (z, _), x in itertools.product(res.limits, (np.array([1.0, 0.0]), np.array([0.4, 0.6]))):
        Kz, Kx = ss.traverse_K(t, z), ss.traverse_K(t, x)
        for _ in range(20):
            k = Kz.project(3 * rng.standard_normal(1))
            assert S.image(Kx, t.Lt).contains(t.Lt @ k, 1e-7)
