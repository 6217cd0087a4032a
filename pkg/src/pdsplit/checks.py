"""Property battery behind ``pdsplit verify``.

Each check returns a :class:`CheckResult`; all randomness derives from
one seed.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fenchel
from . import instances as I
from . import oracle as O
from . import projections as P
from . import sets as S
from . import solution_sets as ss
from .problem import saddle_residual
from .splitting import (
    build_factor,
    cp_step,
    iterate,
    preconditioner_apply,
    reduced_step,
    resolvent_AM,
)

log = logging.getLogger(__name__)

__all__ = ["CheckResult", "CHECKS", "run_checks", "solution_samples"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "detail": _plain(self.detail)}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def solution_samples(inst, n_starts: int = 8, seed: int = 42) -> list:
    """Converged Chambolle-Pock limits ``(z, k)`` from seeded random starts."""
    res = O.multistart_limits(inst.triple, n_starts=n_starts, seed=seed, tol=1e-12, radius=1e-6)
    return res.limits


def check_grid_scan(seed: int) -> CheckResult:
    inst = I.skew()
    t, A = inst.triple, inst.extra["A"]
    grid = O.GridSpec.uniform(-2.0, 2.0, 41, 2)
    found = O.grid_saddle_scan(t, grid, grid, tol=1e-9)
    pitch = float(grid.pitch[0])
    dist = max((float(np.linalg.norm(c.y + A @ c.x)) / np.sqrt(2) for c in found), default=0.0)
    on = saddle_residual(t, np.array([1.0, 2.0]), -A @ np.array([1.0, 2.0]))
    off = saddle_residual(t, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    ok = bool(found) and dist <= 2 * pitch and on <= 1e-12 and off >= 0.1
    return CheckResult("grid-scan", ok, {"accepted": len(found), "max distance": dist,
                                         "residual on graph": on, "residual off graph": off})


def check_rectangle(seed: int) -> CheckResult:
    worst, per = 0.0, {}
    for inst in I.paramonotone_battery():
        sols = solution_samples(inst, seed=seed)
        r = max(saddle_residual(inst.triple, z, k) for (z, _), (_, k) in itertools.product(sols, sols))
        per[inst.name] = r
        worst = max(worst, r)
    skew = I.skew()
    witness = saddle_residual(skew.triple, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    return CheckResult("rectangle", worst <= 1e-7 and witness >= 0.1,
                       {"max cross residual": worst, "per instance": per, "skew strict-inclusion residual": witness})


def check_skew_pairing(seed: int) -> CheckResult:
    worst, per = 0.0, {}
    for inst in I.paramonotone_battery():
        v = ss.skew_check(inst.triple, solution_samples(inst, seed=seed), tol=1e-7)
        per[inst.name] = v
        worst = max(worst, v)
    return CheckResult("skew-check", worst <= 1e-8, {"max pairing": worst, "per instance": per})


def check_factor(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((3, 4))
    nL = np.linalg.norm(L, 2)
    gen = I.kernel_example(L).triple.with_steps(0.9 / nL ** 2, 1.0)
    iso = I.subspace_isometry().triple
    dr = I.dr_subspaces().triple
    certs = {
        "general": build_factor(gen, "general").certificate(gen),
        "general-cholesky": build_factor(gen, "general", method="cholesky").certificate(gen),
        "scaled_isometry": build_factor(iso, "scaled_isometry").certificate(iso),
        "douglas_rachford": build_factor(dr, "douglas_rachford").certificate(dr),
    }
    t = I.subspace_feasibility().triple
    X = rng.standard_normal((200, t.n))
    Y = rng.standard_normal((200, t.m))
    lhs = np.hstack(cp_step(t, X, Y))
    rhs = np.hstack(resolvent_AM(t, *preconditioner_apply(t, X, Y)))
    T_gap = float(np.abs(lhs - rhs).max())
    f = build_factor(dr, "douglas_rachford")
    W = rng.standard_normal((100, 3))
    JA = dr.A.resolve(1.0, W)
    drf = W - JA + dr.B.resolve(1.0, 2 * JA - W)
    dr_gap = float(np.abs(reduced_step(dr, f, W) - drf).max())
    ok = max(certs.values()) <= 1e-9 and T_gap <= 1e-10 and dr_gap <= 1e-11
    return CheckResult("factor", ok, {"certificates": certs, "T vs (A+M)^-1 M": T_gap, "DR formula": dr_gap})


def _sample(s: S.SetDesc, rng, k: int, spread: float = 3.0) -> np.ndarray:
    return np.array([s.project(spread * rng.standard_normal(s.dim)) for _ in range(k)])


def check_fixed_points(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    inst = I.subspace_isometry()
    t = inst.triple
    f = build_factor(t, "scaled_isometry")
    zs, ks = _sample(inst.Z, rng, 50), _sample(inst.K, rng, 50)
    W = (zs - t.sigma * ks @ t.L) / np.sqrt(t.sigma)
    fixed = float(np.abs(reduced_step(t, f, W) - W).max())
    z0, k0 = zs[0], ks[0]
    ctx = P.ProjectionContext(inst.Z, inst.K, t.L, t.sigma, z0, k0)
    idem = 0.0
    for _ in range(50):
        w = 3 * rng.standard_normal(t.n)
        p = P.proj_fix_reduced(t, f, ctx, w)
        idem = max(idem, float(np.abs(P.proj_fix_reduced(t, f, ctx, p) - p).max()))

    dr = I.dr_subspaces()
    td = dr.triple
    fd = build_factor(td, "douglas_rachford")
    Z_minus_K = S.subspace(np.hstack([S.direction_basis(dr.Z), S.direction_basis(dr.K)]), 3)
    inside = _sample(dr.Z, rng, 100) - _sample(dr.K, rng, 100)
    fix_gap = float(np.abs(reduced_step(td, fd, inside) - inside).max())
    outside = 0.0
    for _ in range(20):
        tr = iterate(td, fd, start=3 * rng.standard_normal(3), tol=1e-13, keep_iterates=False)
        outside = max(outside, float(np.linalg.norm(Z_minus_K.project(tr.w) - tr.w)))
    ok = fixed <= 1e-8 and idem <= 1e-10 and fix_gap <= 1e-8 and outside <= 1e-8
    return CheckResult("fixed-point", ok, {"reduced fixed": fixed, "idempotence": idem,
                                            "DR Z-K fixed": fix_gap, "DR limits in Z-K": outside})


def check_projections(seed: int, n_points: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_oracle = worst_anchor = 0.0
    identity_ok = True
    for inst in (I.subspace_isometry(), I.lasso_segment(), I.box_feasibility()):
        t = inst.triple
        sols = solution_samples(inst, n_starts=3, seed=seed)
        for rho in (0.5, 1.0, 2.0):
            ctx = P.ProjectionContext(inst.Z, inst.K, t.L, rho, *sols[0])
            alt = ctx.with_anchors(*sols[-1])
            for _ in range(n_points):
                x = 3 * rng.standard_normal(t.n)
                p = P.proj_Z_minus_rhoLK(ctx, x)
                worst_oracle = max(worst_oracle, float(np.linalg.norm(p - O.qp_minkowski_projection(x, inst.Z, inst.K, t.L, rho))))
                worst_anchor = max(worst_anchor, float(np.linalg.norm(p - P.proj_Z_minus_rhoLK(alt, x))))
                try:
                    P.resolvent_of_projection(ctx, t.A, x, tol=1e-8)
                except P.ProjectionMismatch:
                    identity_ok = False
    worst_m = 0.0
    for inst in (I.subspace_isometry(), I.box_feasibility()):
        t = inst.triple
        f = build_factor(t, "scaled_isometry")
        z0, k0 = solution_samples(inst, n_starts=1, seed=seed)[0]
        ctx = P.ProjectionContext(inst.Z, inst.K, t.L, t.sigma, z0, k0)
        for _ in range(n_points):
            x0, y0 = 2 * rng.standard_normal(t.n), 2 * rng.standard_normal(t.m)
            x, y = P.m_projection_onto_FixT(t, ctx, x0, y0)
            xo, yo, _ = O.qp_m_projection(f.C.T, inst.Z, inst.K, x0, y0)
            gap = np.linalg.norm(f.apply_adjoint(x, y) - f.apply_adjoint(xo, yo))
            worst_m = max(worst_m, float(gap), float(saddle_residual(t, x, y)))
    ok = worst_oracle <= 1e-6 and worst_anchor <= 1e-9 and identity_ok and worst_m <= 1e-6
    return CheckResult("projection", ok, {"oracle gap": worst_oracle, "anchor gap": worst_anchor,
                                           "resolvent identities": identity_ok, "M-projection gap": worst_m})


def check_lasso(seed: int) -> CheckResult:
    inst = I.lasso_desk(seed=42)
    t = inst.triple
    L, b, lam = inst.extra["L"], inst.extra["b"], inst.extra["lam"]
    v = fenchel.total_duality_check(inst.extra["f"], inst.extra["g"], L, t.sigma, t.tau, tol=1e-7, seed=seed)
    ms = O.multistart_limits(t, n_starts=20, seed=seed, tol=1e-11, radius=1e-6)
    Z = fenchel.lasso_solution_set(L, b, lam, v.y)
    ok = (v.total and v.gap <= 1e-7 and bool(v.argmin_certified) and ms.dual.count == 1
          and ms.dual.radius <= 1e-6 and ms.failed == 0 and Z.contains(v.x, 1e-7))
    return CheckResult("lasso", ok, {"gap": v.gap, "mu": v.mu, "mu_star": v.mu_star,
                                      "dual clusters": ms.dual.count, "dual radius": ms.dual.radius,
                                      "Z kind": type(Z).__name__})


def _grid_lasso_oracle(L, b, lam, Z, lo=-1.0, hi=2.0, steps=301):
    g = O.GridSpec.uniform(lo, hi, steps, 2).points()
    r = g @ L.T - b
    obj = 0.5 * (r * r).sum(axis=1) + lam * np.abs(g).sum(axis=1)
    best = float(obj.min())
    inside = np.array([Z.contains(p, 1e-9) for p in g])
    argmin = obj <= best + 1e-12
    rng = np.random.default_rng(0)
    samples = _sample(Z, rng, 50)
    sample_gap = max(abs(fenchel.lasso_objective(L, b, lam, z) - best) for z in samples)
    return bool(np.array_equal(inside, argmin)) and sample_gap <= 1e-4, sample_gap


def check_lasso_sets(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    # interior: lambda above ||L^T b||_inf forces Z = {0}
    L = rng.standard_normal((3, 6))
    b = rng.standard_normal(3)
    lam = 1.01 * float(np.abs(L.T @ b).max())
    t, f, g = fenchel.lasso_instance(L, b, lam)
    v = fenchel.total_duality_check(f, g, L, t.sigma, t.tau, n_perturb=0)
    Z0 = fenchel.lasso_solution_set(L, b, lam, v.y)
    zero = isinstance(Z0, S.Point) and not np.any(Z0.v)
    # injective L: the singleton is the least-squares solution of L x = k
    L = rng.standard_normal((6, 3))
    b = rng.standard_normal(6)
    lam = 0.2 * float(np.abs(L.T @ b).max())
    t, f, g = fenchel.lasso_instance(L, b, lam)
    v = fenchel.total_duality_check(f, g, L, t.sigma, t.tau, n_perturb=0)
    Z1 = fenchel.lasso_solution_set(L, b, lam, v.y)
    ls = np.linalg.solve(L.T @ L, L.T @ v.y)
    inj_gap = float(np.linalg.norm(Z1.v - ls)) if isinstance(Z1, S.Point) else np.inf
    # non-injective n=2, m=1: compare against a grid argmin
    grid_ok, grid_gap = True, 0.0
    for L, b, lam in ((np.array([[1.0, 1.0]]), np.array([2.0]), 1.0), (np.array([[1.0, 2.0]]), np.array([3.0]), 1.0)):
        t, f, g = fenchel.lasso_instance(L, b, lam)
        v = fenchel.total_duality_check(f, g, L, t.sigma, t.tau, n_perturb=0)
        ok, gap = _grid_lasso_oracle(L, b, lam, fenchel.lasso_solution_set(L, b, lam, v.y))
        grid_ok &= ok
        grid_gap = max(grid_gap, gap)
    ok = zero and inj_gap <= 1e-9 and grid_ok
    return CheckResult("lasso-sets", ok, {"interior Z={0}": zero, "least-squares gap": inj_gap,
                                           "grid membership agrees": grid_ok, "grid objective gap": grid_gap})


def check_feasibility(seed: int) -> CheckResult:
    inst = I.subspace_feasibility()
    U, V, L = inst.extra["U"], inst.extra["V"], inst.triple.L
    Z, K = ss.feasibility_sets(U, V, L)
    okZ, gZ = O.same_set(Z, inst.Z, n_samples=500, seed=seed, tol=1e-9)
    okK, gK = O.same_set(K, inst.K, n_samples=500, seed=seed, tol=1e-9)
    dims = (S.direction_basis(Z).shape[1], S.direction_basis(K).shape[1])
    bi = I.box_interior()
    _, Kint = ss.feasibility_sets(bi.extra["U"], bi.extra["V"], np.eye(2))
    interior = isinstance(Kint, S.Point) and np.linalg.norm(Kint.v) == 0.0
    cz = I.common_zero_split()
    Kc = ss.traverse_K(cz.triple, np.array([0.0, 1.0]))
    rep = ss.common_zero_tests(cz.triple, Kc)
    split = rep.zerA_cap_zerLBL and not rep.zero_in_K
    same_K = O.same_set(Kc, cz.K)[0]
    ok = okZ and okK and dims == (2, 1) and interior and split and same_K
    return CheckResult("feasibility", ok, {"Z gap": gZ, "K gap": gK, "dims": dims, "interior K=0": interior,
                                            "common-zero split": rep.to_json()})


def check_exp(seed: int) -> CheckResult:
    f, g, L = fenchel.exp_counterexample()
    v = fenchel.total_duality_check(f, g, L, 0.9, 0.9, tol=1e-2, max_iter=100_000,
                                    start=(np.ones(2), np.zeros(2)))
    ok = (v.mu_est <= 1e-2 and np.linalg.norm(v.x) >= 10 and abs(v.gap) <= 1e-2
          and not v.primal_attained and not v.total)
    return CheckResult("exp", ok, {"objective estimate": v.mu_est, "|x|": float(np.linalg.norm(v.x)),
                                    "gap estimate": v.gap, "iterations": v.iterations})


def check_product(seed: int) -> CheckResult:
    inst = I.three_boxes()
    t = inst.triple
    tr = iterate(t, "full", start=(np.zeros(3), np.zeros(6)), tol=1e-12, keep_iterates=False)
    U, boxes, parts = inst.extra["U"], inst.extra["V"], inst.extra["parts"]
    member = U.contains(tr.x, 1e-7) and all(Vj.contains(Lj @ tr.x, 1e-7) for Vj, (Lj, _) in zip(boxes, parts))
    rng = np.random.default_rng(seed)
    exact = True
    for _ in range(20):
        x, y = rng.standard_normal(3), rng.standard_normal(6)
        xp, yp = cp_step(t, x, y)
        ref_x = t.A.resolve(t.sigma, x - t.sigma * sum(yj @ Lj for (Lj, _), yj in zip(parts, np.split(y, 3))))
        ref_y = np.concatenate([Bj.inverse().resolve(t.tau, yj + t.tau * (Lj @ (2 * ref_x - x)))
                                for (Lj, Bj), yj in zip(parts, np.split(y, 3))])
        exact &= np.array_equal(xp, ref_x) and np.array_equal(yp, ref_y)
    from .problem import Triple, product_triple

    Lj, Bj = parts[0]
    single = product_triple(t.A, [(Lj, Bj)], 0.5 / np.linalg.norm(Lj, 2), 0.5 / np.linalg.norm(Lj, 2))
    plain = Triple(t.A, Lj, Bj, single.sigma, single.tau)
    a = iterate(single, "full", start=(np.ones(3), np.ones(2)), max_iter=200, tol=1e-300)
    b = iterate(plain, "full", start=(np.ones(3), np.ones(2)), max_iter=200, tol=1e-300)
    bitwise = all(np.array_equal(p[0], q[0]) and np.array_equal(p[1], q[1]) for p, q in zip(a.iterates, b.iterates))
    ok = bool(tr.converged and member and exact and bitwise)
    return CheckResult("product", ok, {"memberships": bool(member), "blockwise exact": bool(exact),
                                        "single-part bitwise": bool(bitwise)})


def check_theorems(seed: int) -> CheckResult:
    failed, applied = [], 0
    for inst in (I.subspace_feasibility(), I.kernel_example(), I.kernel_example(np.array([[1.0, 2.0], [0.0, 1.0], [1.0, 1.0]])),
                 I.box_interior(), I.dr_subspaces(), I.box_feasibility(), I.lasso_segment()):
        for rep in O.conditional_theorem_suite(inst.triple, inst.Z, inst.K):
            applied += rep.hypothesis_holds
            if rep.status == "failed":
                failed.append(f"{inst.name}:{rep.theorem_id}")
    return CheckResult("theorems", not failed, {"applicable": applied, "failed": failed})


CHECKS: dict[str, Callable[[int], CheckResult]] = {
    "grid-scan": check_grid_scan,
    "rectangle": check_rectangle,
    "skew-check": check_skew_pairing,
    "factor": check_factor,
    "fixed-point": check_fixed_points,
    "projection": check_projections,
    "lasso": check_lasso,
    "lasso-sets": check_lasso_sets,
    "feasibility": check_feasibility,
    "exp": check_exp,
    "product": check_product,
    "theorems": check_theorems,
}


def run_checks(seed: int = 42, only=None) -> list[CheckResult]:
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(unknown)}; available: {', '.join(CHECKS)}")
    out = []
    for name in names:
        log.info("running check %s", name)
        try:
            out.append(CHECKS[name](seed))
        except Exception as exc:  # a crashing check is a failing check
            out.append(CheckResult(name, False, {"error": f"{type(exc).__name__}: {exc}"}))
    return out
