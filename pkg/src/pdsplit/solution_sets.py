"""Primal and dual solution sets of structured triples.

``K_x = (-L^{-T} A x) ∩ (B L x)`` collects the dual solutions compatible
with a primal point and ``Z_y = L^{-1} B^{-1} y ∩ A^{-1}(-L^T y)`` the primal
solutions compatible with a dual point. For paramonotone ``A`` and ``B`` a
single solution on either side recovers the whole set on the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from . import operators as ops
from . import sets as S
from .linalg import null_space, orth_complement
from .problem import Triple, saddle_residual

__all__ = [
    "InfeasibleError",
    "ParamonotonicityRequired",
    "project",
    "traverse_K",
    "traverse_Z",
    "recover_primal_set",
    "recover_dual_set",
    "normal_cone",
    "feasibility_sets",
    "CommonZeroReport",
    "common_zero_tests",
    "skew_check",
    "kernel_of_adjoint",
]


class InfeasibleError(ValueError):
    def __init__(self, message: str, certificate: Optional[np.ndarray] = None):
        super().__init__(message)
        self.certificate = certificate


class ParamonotonicityRequired(ValueError):
    pass


def project(s: S.SetDesc, x, tol: float = 1e-12) -> np.ndarray:
    return s.project(x, tol)


def traverse_K(t: Triple, x) -> S.SetDesc:
    """``K_x``; empty exactly when ``x`` is not a primal solution."""
    x = np.asarray(x, dtype=float)
    Ax = t.A.value_at(x)
    BLx = t.B.value_at(t.L @ x)
    if Ax.is_empty or BLx.is_empty:
        return S.Empty(t.m)
    return S.intersect(S.preimage(Ax, -t.Lt), BLx)


def traverse_Z(t: Triple, y) -> S.SetDesc:
    """``Z_y``; empty exactly when ``y`` is not a dual solution."""
    y = np.asarray(y, dtype=float)
    Binv_y = t.B.inverse_value_at(y)
    Ainv = t.A.inverse_value_at(-(t.Lt @ y))
    if Binv_y.is_empty or Ainv.is_empty:
        return S.Empty(t.n)
    return S.intersect(S.preimage(Binv_y, t.L), Ainv)


def _require_paramonotone(t: Triple):
    if not (t.A.paramonotone and t.B.paramonotone):
        raise ParamonotonicityRequired("recovery requires paramonotonicity of A and B")


def recover_primal_set(t: Triple, k) -> S.SetDesc:
    """All primal solutions from one dual solution ``k``."""
    _require_paramonotone(t)
    Z = traverse_Z(t, k)
    if Z.is_empty:
        raise ValueError("k is not a dual solution (Z_k is empty)")
    return Z


def recover_dual_set(t: Triple, z) -> S.SetDesc:
    """All dual solutions from one primal solution ``z``."""
    _require_paramonotone(t)
    K = traverse_K(t, z)
    if K.is_empty:
        raise ValueError("z is not a primal solution (K_z is empty)")
    return K


def normal_cone(U: S.SetDesc) -> ops.MonotoneOp:
    """``N_U`` for an affine set or a box."""
    if isinstance(U, (S.Point, S.Affine, S.Whole)):
        return ops.NormalConeAffine(U)
    if isinstance(U, S.RayProduct):
        U = U.as_box()
    if isinstance(U, S.Box):
        return ops.NormalConeBox(U.lo, U.hi)
    raise S.UnsupportedStructure(f"no normal-cone operator for {type(U).__name__}")


def _is_affine(s):
    return isinstance(s, (S.Point, S.Affine, S.Whole))


def _direction(s) -> np.ndarray:
    if isinstance(s, S.Point):
        return np.zeros((s.dim, 0))
    if isinstance(s, S.Whole):
        return np.eye(s.dim)
    return s.basis


def _is_cone(s) -> bool:
    if isinstance(s, S.RayProduct):
        return True
    if isinstance(s, S.Box):
        return bool(np.all(np.isin(s.lo, (0.0, -np.inf))) and np.all(np.isin(s.hi, (0.0, np.inf))))
    if _is_affine(s):
        return s.contains(np.zeros(s.dim), 1e-12)
    return False


def _rays(s) -> S.RayProduct:
    if isinstance(s, S.RayProduct):
        return s
    kinds = []
    for lo, hi in zip(s.lo, s.hi):
        kinds.append({(0.0, 0.0): "zero", (0.0, np.inf): "nonneg", (-np.inf, 0.0): "nonpos"}.get((lo, hi), "free"))
    return S.RayProduct(tuple(kinds))


_POLAR = {"zero": "free", "nonneg": "nonpos", "nonpos": "nonneg", "free": "zero"}


def _polar(s) -> S.SetDesc:
    """Polar cone of a subspace or a ray product."""
    if _is_affine(s):
        return _subspace_or_point(orth_complement(_direction(s), s.dim), s.dim)
    return S.RayProduct(tuple(_POLAR[k] for k in _rays(s).kinds))


def _subspace_or_point(V, n):
    if V.shape[1] == 0:
        return S.Point(np.zeros(n))
    if V.shape[1] == n:
        return S.Whole(n)
    return S.Affine(np.zeros(n), V)


def _feasible_point(U: S.SetDesc, V: S.SetDesc, L: np.ndarray) -> Optional[np.ndarray]:
    Z = S.intersect(U, S.preimage(V, L))
    if Z.is_empty:
        return None
    if isinstance(Z, S.Point):
        return Z.v
    if isinstance(Z, (S.Affine, S.Whole)):
        return Z.project(np.zeros(Z.dim))
    return S._lp_feasible_point(Z.to_polyhedron())


def _interior_slack(box: S.SetDesc, extra_C, extra_d, extra_E, extra_f, n, which) -> float:
    """Largest ``t`` with a point satisfying the extra constraints and lying
    ``t``-deep inside ``box`` (applied to ``x`` or ``L x`` via ``which``)."""
    lo, hi = box.lo, box.hi
    M = which
    rows, rhs = [], []
    for i in range(lo.size):
        if np.isfinite(hi[i]):
            rows.append(np.append(M[i], 1.0))
            rhs.append(hi[i])
        if np.isfinite(lo[i]):
            rows.append(np.append(-M[i], 1.0))
            rhs.append(-lo[i])
    C = np.vstack([np.hstack([extra_C, np.zeros((extra_C.shape[0], 1))])] + ([np.array(rows)] if rows else []))
    d = np.concatenate([extra_d, np.array(rhs)])
    E = np.hstack([extra_E, np.zeros((extra_E.shape[0], 1))])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=C if C.shape[0] else None,
        b_ub=d if C.shape[0] else None,
        A_eq=E if E.shape[0] else None,
        b_eq=extra_f if E.shape[0] else None,
        bounds=[(None, None)] * n + [(None, 1.0)],
        method="highs",
    )
    return float(-res.fun) if res.status == 0 else -np.inf


def feasibility_sets(U: S.SetDesc, V, L) -> tuple[S.SetDesc, S.SetDesc]:
    """``(Z, K)`` for ``A = N_U``, ``B = N_V`` (``V`` may be a list of blocks).

    ``Z = U ∩ L^{-1}(V)``. For ``K`` the closed forms are used: subspaces
    give ``V^⊥ ∩ L^{-T}(U^⊥)``, affine sets the same on direction spaces,
    cones ``V^polar ∩ L^{-T}(U^dual)``; a certified interior point gives
    ``{0}``. Otherwise ``K = K_z`` for any ``z in Z``.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if isinstance(V, (list, tuple)):
        V = S.product(V)
    m, n = L.shape
    if U.dim != n or V.dim != m:
        raise ValueError("dimension mismatch between U, V and L")
    z = _feasible_point(U, V, L)
    if z is None:
        cert = None
        if _is_affine(U) and _is_affine(V):
            pU = U.project(np.zeros(n))
            W = orth_complement(np.hstack([_direction(V), L @ _direction(U)]), m)
            cert = W @ (W.T @ (V.project(np.zeros(m)) - L @ pU))
        raise InfeasibleError("U ∩ L^{-1}(V) is empty", cert)
    Z = S.intersect(U, S.preimage(V, L))

    if _is_affine(U) and _is_affine(V):
        Vperp = _polar(_subspace_or_point(_direction(V), m))
        Uperp = _polar(_subspace_or_point(_direction(U), n))
        return Z, S.intersect(Vperp, S.preimage(Uperp, L.T))
    if _is_cone(U) and _is_cone(V):
        Upolar = _polar(U if _is_affine(U) else _rays(U))
        Vpolar = _polar(V if _is_affine(V) else _rays(V))
        # dual cone U^+ = -(U^polar)
        return Z, S.intersect(Vpolar, S.preimage(-Upolar if not _is_affine(Upolar) else Upolar, L.T))
    if _interior_certified(U, V, L):
        return Z, S.Point(np.zeros(m))
    t = Triple(normal_cone(U), L, normal_cone(V), 1.0, 1.0 / max(np.linalg.norm(L, 2) ** 2, 1.0))
    return Z, traverse_K(t, z)


def _interior_certified(U, V, L, margin=1e-9) -> bool:
    """``int(V) ∩ L U`` or ``V ∩ int(L U)`` nonempty, certified by an LP slack."""
    m, n = L.shape
    Upoly = U.to_polyhedron()
    Vpoly = V.to_polyhedron()
    if isinstance(V, (S.Box, S.RayProduct)):
        Vb = V if isinstance(V, S.Box) else V.as_box()
        if np.all(Vb.lo < Vb.hi):
            slack = _interior_slack(Vb, Upoly.C, Upoly.d, Upoly.E, Upoly.f, n, L)
            if slack > margin:
                return True
    if isinstance(U, (S.Box, S.RayProduct)) and null_space(L.T, m).shape[1] == 0:
        Ub = U if isinstance(U, S.Box) else U.as_box()
        if np.all(Ub.lo < Ub.hi):
            slack = _interior_slack(Ub, Vpoly.C @ L, Vpoly.d, Vpoly.E @ L, Vpoly.f, n, np.eye(n))
            if slack > margin:
                return True
    return False


def kernel_of_adjoint(L) -> S.SetDesc:
    L = np.atleast_2d(np.asarray(L, dtype=float))
    return _subspace_or_point(null_space(L.T, L.shape[0]), L.shape[0])


def _zer_LtBL(t: Triple) -> S.SetDesc:
    """``zer(L^T B L)`` for operators where it is exactly computable."""
    B = t.B
    if isinstance(B, ops.ConstantOp):
        return S.Whole(t.n) if np.linalg.norm(t.Lt @ B.u) <= ops.MEMBERSHIP_TOL else S.Empty(t.n)
    if isinstance(B, ops.Zero):
        return S.Whole(t.n)
    if isinstance(B, (ops.ScaledIdentity, ops.LinearMonotone, ops.ProjectionOp)):
        Mb = {
            ops.ScaledIdentity: lambda: B.alpha * np.eye(B.dim),
            ops.LinearMonotone: lambda: B.M,
            ops.ProjectionOp: lambda: B.basis @ B.basis.T,
        }[type(B)]()
        return _subspace_or_point(null_space(t.Lt @ Mb @ t.L, t.n), t.n)
    if isinstance(B, (ops.NormalConeAffine, ops.NormalConeBox)):
        # 0 lies in every normal cone of a nonempty set
        V = B.U if isinstance(B, ops.NormalConeAffine) else B.box
        return S.preimage(V, t.L)
    raise S.UnsupportedStructure(f"zer(L^T B L) not computable for {type(B).__name__}")


@dataclass
class CommonZeroReport:
    zerA_cap_zerLBL: bool
    K_cap_kerLt: bool
    zerLA_cap_zerBL: bool
    zero_in_K: bool
    details: dict = field(default_factory=dict)

    @property
    def zero_in_K_agrees(self) -> bool:
        return self.zerLA_cap_zerBL == self.zero_in_K

    @property
    def common_zero_agrees(self) -> bool:
        return self.zerA_cap_zerLBL == self.K_cap_kerLt

    def to_json(self) -> dict:
        return {
            "zerA_cap_zerLBL": self.zerA_cap_zerLBL,
            "K_cap_kerLt": self.K_cap_kerLt,
            "zerLA_cap_zerBL": self.zerLA_cap_zerBL,
            "zero_in_K": self.zero_in_K,
            "agree": self.common_zero_agrees and self.zero_in_K_agrees,
        }


def common_zero_tests(t: Triple, K: S.SetDesc) -> CommonZeroReport:
    """Evaluate both sides of the two common-zero equivalences independently.

    Operator sides: ``zer A ∩ zer L^T B L`` and ``zer L^{-T} A ∩ zer B L``
    (note ``zer L^{-T} A = zer A``). Dual sides: ``K ∩ ker L^T`` and
    ``0 in K``. Raises ``AssertionError`` if either pair disagrees.
    """
    zerA = t.A.inverse_value_at(np.zeros(t.n))
    side1 = not S.intersect(zerA, _zer_LtBL(t)).is_empty
    zerBL = S.preimage(t.B.inverse_value_at(np.zeros(t.m)), t.L)
    side2 = not S.intersect(zerA, zerBL).is_empty
    dual1 = not S.intersect(K, kernel_of_adjoint(t.L)).is_empty
    dual2 = K.contains(np.zeros(t.m))
    rep = CommonZeroReport(side1, dual1, side2, dual2, {"zerA": zerA.to_json()})
    assert rep.common_zero_agrees, "zer A ∩ zer L*BL ≠ ∅ disagrees with K ∩ ker L* ≠ ∅"
    assert rep.zero_in_K_agrees, "zer L^{-*}A ∩ zer BL ≠ ∅ disagrees with 0 ∈ K"
    return rep


def skew_check(t: Triple, samples: Sequence, tol: float = 1e-7) -> float:
    """Max of ``|<L z_i - L z_j, k_i - k_j>|`` over verified solution pairs.

    Every ``(z_i, k_i)`` must be a saddle point up to ``tol``; otherwise a
    ``ValueError`` names the first offending index.
    """
    zs, ks = [], []
    for i, (z, k) in enumerate(samples):
        z = np.asarray(z, dtype=float)
        k = np.asarray(k, dtype=float)
        r = saddle_residual(t, z, k)
        if r > tol:
            raise ValueError(f"sample {i} is not a verified solution pair (residual {r:.3e})")
        zs.append(z)
        ks.append(k)
    if len(zs) < 2:
        return 0.0
    LZ = np.array(zs) @ t.Lt
    Kp = np.array(ks)
    G = LZ @ Kp.T  # G[i, j] = <L z_i, k_j>
    d = np.diag(G)
    pair = d[:, None] + d[None, :] - G - G.T
    return float(np.abs(pair).max())
