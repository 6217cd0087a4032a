"""Bundled desk-scale instances with analytically known solution sets.

Each builder returns an :class:`Instance` carrying the triple and, when
known in closed form, the exact ``Z`` and ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fenchel
from . import operators as ops
from . import sets as S
from .linalg import null_space, operator_norm, orth, orth_complement
from .problem import Triple, product_triple

__all__ = [
    "Instance",
    "skew",
    "subspace_feasibility",
    "subspace_isometry",
    "lasso_desk",
    "lasso_segment",
    "box_feasibility",
    "box_interior",
    "three_boxes",
    "common_zero_split",
    "kernel_example",
    "dr_subspaces",
    "paramonotone_battery",
]


@dataclass
class Instance:
    name: str
    triple: Triple
    Z: Optional[S.SetDesc] = None
    K: Optional[S.SetDesc] = None
    extra: dict = field(default_factory=dict)


def skew(sigma: float = 0.5, tau: float = 0.5) -> Instance:
    """Rotation ``A``, ``B = -A``, ``L = Id`` on ``R^2``: ``Z = K = R^2``, saddle set ``gra(-A)``."""
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    t = Triple(ops.LinearMonotone(R), np.eye(2), ops.LinearMonotone(-R), sigma, tau)
    return Instance("skew", t, S.Whole(2), S.Whole(2), {"A": R})


def _subspace_data(L, rng):
    m, n = L.shape
    y0 = rng.standard_normal(m)
    y0 /= np.linalg.norm(y0)
    # V^⊥ is 2-dimensional and contains y0, U^⊥ = span(L^T y0)
    Vperp = orth(np.column_stack([y0, rng.standard_normal(m)]))
    V = S.subspace(orth_complement(Vperp, m), m)
    U = S.subspace(orth_complement((L.T @ y0)[:, None], n), n)
    return U, V, y0


def _feasibility_instance(name, L, sigma, tau, rng) -> Instance:
    U, V, y0 = _subspace_data(L, rng)
    t = Triple(ops.NormalConeAffine(U), L, ops.NormalConeAffine(V), sigma, tau)
    Z = S.intersect(U, S.preimage(V, L))
    K = S.subspace(y0[:, None], L.shape[0])
    return Instance(name, t, Z, K, {"U": U, "V": V, "y0": y0})


def subspace_feasibility(seed: int = 0, n: int = 4, m: int = 3) -> Instance:
    """Normal cones of subspaces with a general ``L``: ``dim Z = 2``, ``K = span(y0)``."""
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((m, n))
    step = 0.9 / operator_norm(L)
    return _feasibility_instance("subspace_feasibility", L, step, step, rng)


def subspace_isometry(seed: int = 1, n: int = 4, m: int = 3, sigma: float = 0.5, tau: float = 2.0) -> Instance:
    """Same construction with ``sigma tau L L^T = Id``."""
    rng = np.random.default_rng(seed)
    Q = orth(rng.standard_normal((n, m))).T  # orthonormal rows
    L = Q / np.sqrt(sigma * tau)
    return _feasibility_instance("subspace_isometry", L, sigma, tau, rng)


def lasso_desk(n: int = 10, m: int = 5, seed: int = 42, ratio: float = 0.1) -> Instance:
    """Seeded LASSO with ``lambda = ratio * ||L^T b||_inf``."""
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    lam = ratio * np.abs(L.T @ b).max()
    t, f, g = fenchel.lasso_instance(L, b, lam)
    return Instance("lasso_desk", t, None, None, {"L": L, "b": b, "lam": lam, "f": f, "g": g})


def lasso_segment() -> Instance:
    """``1/2 (x1 + x2 - 2)^2 + |x1| + |x2|``: ``Z = {x >= 0, x1 + x2 = 1}``, ``K = {1}``."""
    L = np.array([[1.0, 1.0]])
    b = np.array([2.0])
    t, f, g = fenchel.lasso_instance(L, b, 1.0)
    Z = S.Polyhedron(-np.eye(2), np.zeros(2), np.array([[1.0, 1.0]]), np.array([1.0]))
    return Instance("lasso_segment", t, Z, S.Point([1.0]), {"L": L, "b": b, "lam": 1.0, "f": f, "g": g})


def box_feasibility() -> Instance:
    """``U = [0,1]^2``, ``V = {x2 = 1}``, ``L = Id``: a segment and a ray."""
    U = S.Box([0.0, 0.0], [1.0, 1.0])
    V = S.Affine(np.array([0.0, 1.0]), np.array([[1.0], [0.0]]))
    t = Triple(ops.NormalConeBox(U.lo, U.hi), np.eye(2), ops.NormalConeAffine(V), 1.0, 1.0)
    Z = S.Box([0.0, 1.0], [1.0, 1.0])
    K = S.RayProduct(("zero", "nonpos"))
    return Instance("box_feasibility", t, Z, K, {"U": U, "V": V})


def box_interior() -> Instance:
    """Two boxes meeting in their interiors: ``K = {0}``."""
    U = S.Box([0.0, 0.0], [1.0, 1.0])
    V = S.Box([0.5, -1.0], [2.0, 0.5])
    t = Triple(ops.NormalConeBox(U.lo, U.hi), np.eye(2), ops.NormalConeBox(V.lo, V.hi), 1.0, 1.0)
    return Instance("box_interior", t, S.Box([0.5, 0.0], [1.0, 0.5]), S.Point([0.0, 0.0]), {"U": U, "V": V})


def three_boxes(seed: int = 3) -> Instance:
    """``U = [-2,2]^3`` and three box constraints ``L_j x in V_j`` around a common point."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(-1, 1, 3)
    parts, boxes = [], []
    for _ in range(3):
        Lj = rng.standard_normal((2, 3))
        c = Lj @ p
        box = S.Box(c - rng.uniform(0.1, 1.0, 2), c + rng.uniform(0.1, 1.0, 2))
        boxes.append(box)
        parts.append((Lj, ops.NormalConeBox(box.lo, box.hi)))
    Lst = np.vstack([Lj for Lj, _ in parts])
    step = 0.9 / operator_norm(Lst)
    U = S.Box(-2 * np.ones(3), 2 * np.ones(3))
    t = product_triple(ops.NormalConeBox(U.lo, U.hi), parts, step, step)
    return Instance("three_boxes", t, None, S.Point(np.zeros(6)), {"U": U, "V": boxes, "parts": parts, "p": p})


def common_zero_split() -> Instance:
    """``A = P_U``, ``L = P_U``, ``B = u_perp`` on ``R^2`` with ``U`` the first axis."""
    basis = np.array([[1.0], [0.0]])
    u_perp = np.array([0.0, 1.0])
    P = basis @ basis.T
    t = Triple(ops.ProjectionOp(basis), P, ops.ConstantOp(u_perp), 1.0, 1.0)
    Z = S.subspace(np.array([[0.0], [1.0]]), 2)
    return Instance("common_zero_split", t, Z, S.Point(u_perp), {"U": S.subspace(basis, 2), "u_perp": u_perp})


def kernel_example(L=None) -> Instance:
    """``A = 0``, ``B = Id``: ``Z = ker L`` and ``K = {0}``."""
    L = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]) if L is None else np.atleast_2d(np.asarray(L, dtype=float))
    m, n = L.shape
    step = 0.9 / operator_norm(L)
    t = Triple(ops.Zero(n), L, ops.ScaledIdentity(m, 1.0), step, step)
    N = null_space(L, n)
    Z = S.subspace(N, n) if N.shape[1] else S.Point(np.zeros(n))
    return Instance("kernel_example", t, Z, S.Point(np.zeros(m)))


def dr_subspaces() -> Instance:
    """Douglas-Rachford setting on ``R^3``: ``U = span(e1)``, ``V = span(e1, e2)``."""
    U = S.subspace(np.array([[1.0], [0.0], [0.0]]), 3)
    V = S.subspace(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), 3)
    t = Triple(ops.NormalConeAffine(U), np.eye(3), ops.NormalConeAffine(V), 1.0, 1.0)
    Z = U
    K = S.subspace(np.array([[0.0], [0.0], [1.0]]), 3)
    return Instance("dr_subspaces", t, Z, K, {"U": U, "V": V})


def paramonotone_battery() -> list[Instance]:
    """The five paramonotone instances used for rectangle and pairing checks."""
    return [subspace_feasibility(), lasso_desk(), lasso_segment(), box_feasibility(), three_boxes()]
