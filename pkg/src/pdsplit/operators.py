"""Maximally monotone operators with exact resolvents.

Every operator acts on R^n and exposes

* ``resolve(gamma, x)``: the resolvent ``(Id + gamma A)^{-1}``, vectorized
  over leading axes of ``x``;
* ``value_at(x)``: the set ``A x`` as a :class:`~pdsplit.sets.SetDesc`;
* ``inverse_value_at(u)``: the set ``A^{-1} u``;
* ``contains(x, u)``: graph membership ``u in A x``.

The inverse of an operator is obtained through the resolvent identity
``J_{gamma A^{-1}}(x) = x - gamma J_{A/gamma}(x/gamma)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import sets as S
from .linalg import null_space, orth, orth_complement

MEMBERSHIP_TOL = 1e-8
FACE_BAND = 1e-8

__all__ = [
    "MonotoneOp",
    "Zero",
    "ScaledIdentity",
    "LinearMonotone",
    "NormalConeAffine",
    "NormalConeBox",
    "ProjectionOp",
    "ConstantOp",
    "ShiftedL1Subdiff",
    "ProductOp",
    "Inverse",
    "Subdifferential",
    "inverse",
    "resolve",
    "value_at",
    "soft_threshold",
    "operator_from_json",
]


def soft_threshold(x, t):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


class MonotoneOp:
    dim: int
    paramonotone: bool = True
    single_valued: bool = False

    def resolve(self, gamma: float, x) -> np.ndarray:
        raise NotImplementedError

    def value_at(self, x) -> S.SetDesc:
        raise NotImplementedError(f"{type(self).__name__} has no exact set values")

    def inverse_value_at(self, u) -> S.SetDesc:
        raise NotImplementedError(f"{type(self).__name__} has no exact inverse set values")

    def contains(self, x, u, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.value_at(x).contains(u, tol)

    def inverse(self) -> "MonotoneOp":
        return Inverse(self)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"dimension mismatch: operator on R^{self.dim}, got shape {x.shape}")
        return x

    def _check_gamma(self, gamma):
        if not gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True, eq=False)
class Zero(MonotoneOp):
    dim: int
    single_valued = True

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        return self._check(x).copy()

    def value_at(self, x):
        return S.Point(np.zeros(self.dim))

    def inverse_value_at(self, u):
        u = self._check(u)
        return S.Whole(self.dim) if np.max(np.abs(u)) <= MEMBERSHIP_TOL else S.Empty(self.dim)

    def to_json(self):
        return {"kind": "zero", "params": {"dim": self.dim}}


@dataclass(frozen=True, eq=False)
class ScaledIdentity(MonotoneOp):
    dim: int
    alpha: float = 1.0
    single_valued = True

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        return self._check(x) / (1.0 + gamma * self.alpha)

    def value_at(self, x):
        return S.Point(self.alpha * self._check(x))

    def inverse_value_at(self, u):
        u = self._check(u)
        if self.alpha > 0:
            return S.Point(u / self.alpha)
        return Zero(self.dim).inverse_value_at(u)

    def to_json(self):
        return {"kind": "scaled_identity", "params": {"dim": self.dim, "alpha": self.alpha}}


@dataclass(frozen=True, eq=False)
class LinearMonotone(MonotoneOp):
    """``x -> M x`` for a square ``M`` with ``M + M^T`` positive semidefinite."""

    M: np.ndarray
    single_valued = True

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("LinearMonotone needs a square matrix")
        sym = M + M.T
        if np.linalg.eigvalsh(sym).min(initial=0.0) < -1e-10 * (1 + np.abs(sym).max()):
            raise ValueError("M + M^T is not positive semidefinite")
        object.__setattr__(self, "M", M)

    @property
    def dim(self):
        return self.M.shape[0]

    @property
    def paramonotone(self):
        # <x, Mx> = 0 forces Mx = 0  <=>  ker(M + M^T) is inside ker M
        K = null_space(self.M + self.M.T)
        return bool(K.shape[1] == 0 or np.abs(self.M @ K).max() <= 1e-10 * (1 + np.abs(self.M).max()))

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        x = self._check(x)
        G = np.eye(self.dim) + gamma * self.M
        flat = x.reshape(-1, self.dim)
        return np.linalg.solve(G, flat.T).T.reshape(x.shape)

    def value_at(self, x):
        return S.Point(self.M @ self._check(x))

    def inverse_value_at(self, u):
        u = self._check(u)
        return S.simplify(S.Polyhedron(np.zeros((0, self.dim)), np.zeros(0), self.M, u))

    def to_json(self):
        return {"kind": "linear", "params": {"M": self.M.tolist()}}


def _as_affine(U: S.SetDesc) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(U, S.Point):
        return U.v, np.zeros((U.dim, 0))
    if isinstance(U, S.Whole):
        return np.zeros(U.dim), np.eye(U.dim)
    if isinstance(U, S.Affine):
        return U.offset, U.basis
    raise TypeError("expected an affine set (Point, Affine or Whole)")


def _subspace_set(basis: np.ndarray, n: int) -> S.SetDesc:
    if basis.shape[1] == 0:
        return S.Point(np.zeros(n))
    if basis.shape[1] == n:
        return S.Whole(n)
    return S.Affine(np.zeros(n), basis)


@dataclass(frozen=True, eq=False)
class NormalConeAffine(MonotoneOp):
    """Normal cone of a closed affine subspace ``U``."""

    U: S.SetDesc

    def __post_init__(self):
        _as_affine(self.U)

    @property
    def dim(self):
        return self.U.dim

    @property
    def single_valued(self):
        return isinstance(self.U, S.Whole)

    @property
    def normal_basis(self) -> np.ndarray:
        _, V = _as_affine(self.U)
        return orth_complement(V, self.dim)

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        x = self._check(x)
        p, V = _as_affine(self.U)
        return p + ((x - p) @ V) @ V.T

    def value_at(self, x):
        x = self._check(x)
        if not self.U.contains(x, MEMBERSHIP_TOL):
            return S.Empty(self.dim)
        return _subspace_set(self.normal_basis, self.dim)

    def inverse_value_at(self, u):
        u = self._check(u)
        if not _subspace_set(self.normal_basis, self.dim).contains(u, MEMBERSHIP_TOL):
            return S.Empty(self.dim)
        return self.U

    def to_json(self):
        return {"kind": "normal_cone_affine", "params": {"set": self.U.to_json()}}


@dataclass(frozen=True, eq=False)
class NormalConeBox(MonotoneOp):
    """Normal cone of ``[lo, hi]`` (infinite bounds allowed)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds must satisfy lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    @property
    def box(self) -> S.Box:
        return S.Box(self.lo, self.hi)

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        return np.clip(self._check(x), self.lo, self.hi)

    def value_at(self, x):
        x = self._check(x)
        if not self.box.contains(x, FACE_BAND):
            return S.Empty(self.dim)
        at_lo = np.abs(x - self.lo) <= FACE_BAND
        at_hi = np.abs(x - self.hi) <= FACE_BAND
        kinds = []
        for a, b in zip(at_lo, at_hi):
            if a and b:
                kinds.append("free")
            elif a:
                kinds.append("nonpos")
            elif b:
                kinds.append("nonneg")
            else:
                kinds.append("zero")
        return S.RayProduct(tuple(kinds))

    def inverse_value_at(self, u):
        u = self._check(u)
        lo, hi = self.lo.copy(), self.hi.copy()
        pos, neg = u > FACE_BAND, u < -FACE_BAND
        if np.any(pos & ~np.isfinite(self.hi)) or np.any(neg & ~np.isfinite(self.lo)):
            return S.Empty(self.dim)
        lo[pos] = self.hi[pos]
        hi[neg] = self.lo[neg]
        return S.Box(lo, hi)

    def to_json(self):
        return {"kind": "normal_cone_box", "params": {"lo": S._json_floats(self.lo), "hi": S._json_floats(self.hi)}}


@dataclass(frozen=True, eq=False)
class ProjectionOp(MonotoneOp):
    """``A = P_U`` for a linear subspace ``U`` (given by a spanning matrix)."""

    basis: np.ndarray
    single_valued = True

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        object.__setattr__(self, "basis", orth(B))

    @property
    def dim(self):
        return self.basis.shape[0]

    def project(self, x):
        return (np.asarray(x, dtype=float) @ self.basis) @ self.basis.T

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        x = self._check(x)
        px = self.project(x)
        return px / (1.0 + gamma) + (x - px)

    def value_at(self, x):
        return S.Point(self.project(self._check(x)))

    def inverse_value_at(self, u):
        u = self._check(u)
        if np.linalg.norm(u - self.project(u)) > MEMBERSHIP_TOL:
            return S.Empty(self.dim)
        return _affine_or_whole(u, orth_complement(self.basis, self.dim), self.dim)

    def to_json(self):
        return {"kind": "projection", "params": {"basis": self.basis.tolist()}}


def _affine_or_whole(p, V, n):
    if V.shape[1] == n:
        return S.Whole(n)
    if V.shape[1] == 0:
        return S.Point(p)
    return S.Affine(p, V)


@dataclass(frozen=True, eq=False)
class ConstantOp(MonotoneOp):
    """``x -> {u}`` for a fixed vector ``u``."""

    u: np.ndarray
    single_valued = True

    def __post_init__(self):
        object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, dtype=float)))

    @property
    def dim(self):
        return self.u.size

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        return self._check(x) - gamma * self.u

    def value_at(self, x):
        return S.Point(self.u.copy())

    def inverse_value_at(self, v):
        v = self._check(v)
        if np.max(np.abs(v - self.u)) <= MEMBERSHIP_TOL:
            return S.Whole(self.dim)
        return S.Empty(self.dim)

    def to_json(self):
        return {"kind": "constant", "params": {"u": self.u.tolist()}}


@dataclass(frozen=True, eq=False)
class ShiftedL1Subdiff(MonotoneOp):
    """``A = lam * d||.||_1 - shift``."""

    lam: float
    shift: np.ndarray

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        object.__setattr__(self, "shift", np.atleast_1d(np.asarray(self.shift, dtype=float)))

    @property
    def dim(self):
        return self.shift.size

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        return soft_threshold(self._check(x) + gamma * self.shift, gamma * self.lam)

    def value_at(self, x):
        x = self._check(x)
        lo = np.where(x > FACE_BAND, self.lam, -self.lam) - self.shift
        hi = np.where(x < -FACE_BAND, -self.lam, self.lam) - self.shift
        return S.Box(lo, hi)

    def inverse_value_at(self, u):
        v = (self._check(u) + self.shift) / self.lam
        lo = np.zeros(self.dim)
        hi = np.zeros(self.dim)
        at_plus = np.abs(v - 1.0) <= FACE_BAND
        at_minus = np.abs(v + 1.0) <= FACE_BAND
        if np.any((np.abs(v) > 1.0) & ~at_plus & ~at_minus):
            return S.Empty(self.dim)
        hi[at_plus] = np.inf
        lo[at_minus] = -np.inf
        return S.Box(lo, hi)

    def to_json(self):
        return {"kind": "shifted_l1", "params": {"lambda": self.lam, "shift": self.shift.tolist()}}


@dataclass(frozen=True, eq=False)
class ProductOp(MonotoneOp):
    """Block-diagonal operator ``B_1 x ... x B_n``."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("product of zero operators")

    @property
    def dim(self):
        return sum(p.dim for p in self.parts)

    @property
    def paramonotone(self):
        return all(p.paramonotone for p in self.parts)

    @property
    def single_valued(self):
        return all(p.single_valued for p in self.parts)

    @property
    def offsets(self) -> list[int]:
        return list(np.cumsum([0] + [p.dim for p in self.parts]))

    def split(self, x):
        x = np.asarray(x, dtype=float)
        o = self.offsets
        return [x[..., o[i]:o[i + 1]] for i in range(len(self.parts))]

    def resolve(self, gamma, x):
        x = self._check(x)
        return np.concatenate([p.resolve(gamma, xi) for p, xi in zip(self.parts, self.split(x))], axis=-1)

    def value_at(self, x):
        return S.product(p.value_at(xi) for p, xi in zip(self.parts, self.split(self._check(x))))

    def inverse_value_at(self, u):
        return S.product(p.inverse_value_at(ui) for p, ui in zip(self.parts, self.split(self._check(u))))

    def contains(self, x, u, tol=MEMBERSHIP_TOL):
        return all(p.contains(xi, ui, tol) for p, xi, ui in zip(self.parts, self.split(x), self.split(u)))

    def to_json(self):
        return {"kind": "product", "params": {"ops": [p.to_json() for p in self.parts]}}


@dataclass(frozen=True, eq=False)
class Inverse(MonotoneOp):
    """Set-valued inverse of ``base``."""

    base: MonotoneOp

    @property
    def dim(self):
        return self.base.dim

    @property
    def paramonotone(self):
        return self.base.paramonotone

    @property
    def single_valued(self):
        return False

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        x = self._check(x)
        return x - gamma * self.base.resolve(1.0 / gamma, x / gamma)

    def value_at(self, x):
        return self.base.inverse_value_at(x)

    def inverse_value_at(self, u):
        return self.base.value_at(u)

    def contains(self, x, u, tol=MEMBERSHIP_TOL):
        return self.base.contains(u, x, tol)

    def to_json(self):
        return {"kind": "inverse", "params": {"op": self.base.to_json()}}


@dataclass(frozen=True, eq=False)
class Subdifferential(MonotoneOp):
    """Subdifferential of a convex function known only through its prox."""

    dim: int
    prox: Callable
    name: str = "subdifferential"
    single_valued: bool = False

    def resolve(self, gamma, x):
        self._check_gamma(gamma)
        return self.prox(gamma, self._check(x))

    def contains(self, x, u, tol=MEMBERSHIP_TOL):
        x, u = np.asarray(x, dtype=float), np.asarray(u, dtype=float)
        return bool(np.linalg.norm(self.resolve(1.0, x + u) - x) <= tol)


def inverse(op: MonotoneOp) -> MonotoneOp:
    return op.inverse()


def resolve(op: MonotoneOp, gamma: float, x) -> np.ndarray:
    return op.resolve(gamma, x)


def value_at(op: MonotoneOp, x) -> S.SetDesc:
    return op.value_at(x)


def operator_from_json(obj: dict, dim: Optional[int] = None) -> MonotoneOp:
    """Build an operator from ``{"kind": ..., "params": {...}}``."""
    kind = obj["kind"].lower()
    p = obj.get("params", {})
    if kind == "zero":
        return Zero(int(p.get("dim", dim)))
    if kind == "scaled_identity":
        return ScaledIdentity(int(p.get("dim", dim)), float(p.get("alpha", 1.0)))
    if kind == "linear":
        return LinearMonotone(np.asarray(p["M"], dtype=float))
    if kind == "normal_cone_affine":
        return NormalConeAffine(S.from_json(p["set"]))
    if kind == "normal_cone_box":
        return NormalConeBox(S._parse_bounds(p["lo"]), S._parse_bounds(p["hi"]))
    if kind == "projection":
        return ProjectionOp(np.asarray(p["basis"], dtype=float))
    if kind == "constant":
        return ConstantOp(np.asarray(p["u"], dtype=float))
    if kind == "shifted_l1":
        return ShiftedL1Subdiff(float(p["lambda"]), np.asarray(p["shift"], dtype=float))
    if kind == "inverse":
        return Inverse(operator_from_json(p["op"], dim))
    if kind == "product":
        return ProductOp(tuple(operator_from_json(o) for o in p["ops"]))
    raise ValueError(f"unknown operator kind {obj['kind']!r}")
