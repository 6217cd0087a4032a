"""Exactly representable closed convex sets in R^n.

Each variant supports membership and Euclidean projection. A small algebra
(intersection, linear preimage, linear image, products) is closed over
these variants by passing through the H-representation
``{x : C x <= d, E x = f}``; anything outside that algebra raises
:class:`UnsupportedStructure` instead of returning an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .linalg import null_space, orth, orth_complement

MEMBERSHIP_TOL = 1e-8

__all__ = [
    "MEMBERSHIP_TOL",
    "EmptySetError",
    "UnsupportedStructure",
    "SetDesc",
    "Empty",
    "Whole",
    "Point",
    "Affine",
    "Polyhedron",
    "Box",
    "RayProduct",
    "intersect",
    "preimage",
    "image",
    "product",
    "affine_hull",
    "subspace",
    "from_json",
]


class EmptySetError(ValueError):
    """Projection or sampling was requested on an empty set."""


class UnsupportedStructure(NotImplementedError):
    """The requested set operation leaves the representable family."""


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


class SetDesc:
    dim: int

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def project(self, x, tol: float = 1e-12) -> np.ndarray:
        raise NotImplementedError

    def to_polyhedron(self) -> "Polyhedron":
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @property
    def is_empty(self) -> bool:
        return False

    def translate(self, v) -> "SetDesc":
        v = _vec(v)
        return image(self, np.eye(self.dim), offset=v)

    def __neg__(self) -> "SetDesc":
        return image(self, -np.eye(self.dim))

    def scale(self, rho: float) -> "SetDesc":
        return image(self, rho * np.eye(self.dim))


@dataclass(frozen=True, eq=False)
class Empty(SetDesc):
    dim: int

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return False

    def project(self, x, tol=1e-12):
        raise EmptySetError("projection onto empty set")

    @property
    def is_empty(self):
        return True

    def to_polyhedron(self):
        return Polyhedron(np.zeros((1, self.dim)), np.array([-1.0]), np.zeros((0, self.dim)), np.zeros(0))

    def to_json(self):
        return {"kind": "empty", "dim": self.dim}


@dataclass(frozen=True, eq=False)
class Whole(SetDesc):
    dim: int

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return True

    def project(self, x, tol=1e-12):
        return _vec(x).copy()

    def to_polyhedron(self):
        z = np.zeros((0, self.dim))
        return Polyhedron(z, np.zeros(0), z, np.zeros(0))

    def to_json(self):
        return {"kind": "whole", "dim": self.dim}


@dataclass(frozen=True, eq=False)
class Point(SetDesc):
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _vec(self.v))

    @property
    def dim(self):
        return self.v.size

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return bool(np.max(np.abs(_vec(x) - self.v), initial=0.0) <= tol)

    def project(self, x, tol=1e-12):
        return self.v.copy()

    def to_polyhedron(self):
        n = self.dim
        return Polyhedron(np.zeros((0, n)), np.zeros(0), np.eye(n), self.v.copy())

    def to_json(self):
        return {"kind": "point", "v": self.v.tolist()}


@dataclass(frozen=True, eq=False)
class Affine(SetDesc):
    """``offset + span(basis)`` with orthonormal basis columns."""

    offset: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        p = _vec(self.offset)
        V = np.asarray(self.basis, dtype=float).reshape(p.size, -1)
        if V.shape[1]:
            gram = V.T @ V
            if np.abs(gram - np.eye(V.shape[1])).max() > 1e-12:
                V = orth(V)
        # canonical offset: the point of minimal norm
        p = p - V @ (V.T @ p)
        object.__setattr__(self, "offset", p)
        object.__setattr__(self, "basis", V)

    @property
    def dim(self):
        return self.offset.size

    @property
    def direction_dim(self) -> int:
        return self.basis.shape[1]

    def contains(self, x, tol=MEMBERSHIP_TOL):
        r = _vec(x) - self.offset
        r = r - self.basis @ (self.basis.T @ r)
        return bool(np.linalg.norm(r) <= tol)

    def project(self, x, tol=1e-12):
        r = np.asarray(x, dtype=float) - self.offset
        return self.offset + (r @ self.basis) @ self.basis.T

    def to_polyhedron(self):
        W = orth_complement(self.basis, self.dim)
        return Polyhedron(np.zeros((0, self.dim)), np.zeros(0), W.T, W.T @ self.offset)

    def to_json(self):
        return {"kind": "affine", "offset": self.offset.tolist(), "basis": self.basis.tolist()}


def subspace(basis, n: int | None = None) -> Affine:
    """Linear subspace spanned by the columns of ``basis``."""
    B = np.asarray(basis, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    if n is None:
        n = B.shape[0]
    return Affine(np.zeros(n), orth(B.reshape(n, -1)))


@dataclass(frozen=True, eq=False)
class Box(SetDesc):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lo), _vec(self.hi)
        if lo.shape != hi.shape:
            raise ValueError("box bounds differ in shape")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be NaN")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    @property
    def is_empty(self):
        return bool(np.any(self.lo > self.hi))

    def contains(self, x, tol=MEMBERSHIP_TOL):
        x = _vec(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def project(self, x, tol=1e-12):
        if self.is_empty:
            raise EmptySetError("projection onto empty set")
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    def to_polyhedron(self):
        n = self.dim
        I = np.eye(n)
        eq = np.isfinite(self.lo) & (self.lo == self.hi)
        up = np.isfinite(self.hi) & ~eq
        dn = np.isfinite(self.lo) & ~eq
        C = np.vstack([I[up], -I[dn]])
        d = np.concatenate([self.hi[up], -self.lo[dn]])
        return Polyhedron(C, d, I[eq], self.lo[eq])

    def to_json(self):
        return {"kind": "box", "lo": _json_floats(self.lo), "hi": _json_floats(self.hi)}


_RAY_BOUNDS = {
    "zero": (0.0, 0.0),
    "nonneg": (0.0, np.inf),
    "nonpos": (-np.inf, 0.0),
    "free": (-np.inf, np.inf),
}


@dataclass(frozen=True, eq=False)
class RayProduct(SetDesc):
    """Product of per-coordinate cones: ``{0}``, ``R_+``, ``R_-`` or ``R``."""

    kinds: tuple

    def __post_init__(self):
        kinds = tuple(str(k).lower() for k in self.kinds)
        bad = [k for k in kinds if k not in _RAY_BOUNDS]
        if bad:
            raise ValueError(f"unknown ray kinds {bad}")
        object.__setattr__(self, "kinds", kinds)

    @property
    def dim(self):
        return len(self.kinds)

    def as_box(self) -> Box:
        lo = np.array([_RAY_BOUNDS[k][0] for k in self.kinds])
        hi = np.array([_RAY_BOUNDS[k][1] for k in self.kinds])
        return Box(lo, hi)

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return self.as_box().contains(x, tol)

    def project(self, x, tol=1e-12):
        return self.as_box().project(x)

    def to_polyhedron(self):
        return self.as_box().to_polyhedron()

    def to_json(self):
        return {"kind": "rays", "kinds": list(self.kinds)}


@dataclass(frozen=True, eq=False)
class Polyhedron(SetDesc):
    """``{x : C x <= d, E x = f}``; redundant rows are allowed."""

    C: np.ndarray
    d: np.ndarray
    E: np.ndarray = field(default=None)
    f: np.ndarray = field(default=None)

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        n = C.shape[1]
        C = C.reshape(-1, n)
        E = np.zeros((0, n)) if self.E is None else np.asarray(self.E, dtype=float).reshape(-1, n)
        d = np.asarray(self.d, dtype=float).reshape(-1)
        f = np.zeros(0) if self.f is None else np.asarray(self.f, dtype=float).reshape(-1)
        if d.size != C.shape[0] or f.size != E.shape[0]:
            raise ValueError("polyhedron row counts do not match right-hand sides")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "f", f)

    @property
    def dim(self):
        return self.C.shape[1]

    @property
    def is_empty(self):
        return _lp_feasible_point(self) is None

    def contains(self, x, tol=MEMBERSHIP_TOL):
        x = _vec(x)
        ok_ineq = np.max(self.C @ x - self.d, initial=-np.inf) <= tol
        ok_eq = np.max(np.abs(self.E @ x - self.f), initial=0.0) <= tol
        return bool(ok_ineq and ok_eq)

    def to_polyhedron(self):
        return self

    def project(self, x, tol=1e-12, max_iter=200_000):
        """Dykstra over the halfspaces and the equality block, then an exact
        active-set polish when the KKT conditions can be certified."""
        x0 = _vec(x)
        if self.C.shape[0] == 0:
            return _affine_projector(self.E, self.f)(x0)
        if _lp_feasible_point(self) is None:
            raise EmptySetError("projection onto empty set")
        proj_eq = _affine_projector(self.E, self.f) if self.E.shape[0] else None
        C, d = self.C, self.d
        norms2 = np.einsum("ij,ij->i", C, C)
        keep = norms2 > 0
        C, d, norms2 = C[keep], d[keep], norms2[keep]
        m = C.shape[0]
        incr = np.zeros((m + 1, x0.size))
        p = x0.copy()
        for _ in range(max_iter):
            prev = p.copy()
            prev_incr = incr.copy()
            for i in range(m):
                z = p + incr[i]
                viol = C[i] @ z - d[i]
                q = z - (viol / norms2[i]) * C[i] if viol > 0 else z
                incr[i] = z - q
                p = q
            if proj_eq is not None:
                z = p + incr[m]
                q = proj_eq(z)
                incr[m] = z - q
                p = q
            # the iterate alone can stall while the corrections still move
            step = tol * (1.0 + np.linalg.norm(p))
            if np.linalg.norm(p - prev) <= step and np.linalg.norm(incr - prev_incr) <= step:
                break
        polished = _polish(x0, p, C, d, self.E, self.f)
        return p if polished is None else polished

    def to_json(self):
        return {
            "kind": "polyhedron",
            "C": self.C.tolist(),
            "d": _json_floats(self.d),
            "E": self.E.tolist(),
            "f": self.f.tolist(),
        }


def _json_floats(a):
    return [float(v) if np.isfinite(v) else ("inf" if v > 0 else "-inf") for v in np.asarray(a)]


def _affine_projector(E, f):
    n = E.shape[1]
    if E.shape[0] == 0:
        return lambda x: np.asarray(x, dtype=float).copy()
    Ep = np.linalg.pinv(E)
    return lambda x: x - Ep @ (E @ x - f)


def _polish(x0, p, C, d, E, f, act_tol=1e-7):
    """Exact projection on the active face guessed from ``p``; ``None`` if the
    guess fails the KKT check."""
    scale = 1.0 + np.abs(d).max(initial=0.0) + np.abs(p).max(initial=0.0)
    active = C @ p - d >= -act_tol * scale
    G = np.vstack([E, C[active]])
    h = np.concatenate([f, d[active]])
    if G.shape[0] == 0:
        q = x0
        mult = np.zeros(0)
    else:
        mult, *_ = np.linalg.lstsq(G @ G.T, G @ x0 - h, rcond=None)
        q = x0 - G.T @ mult
    if np.linalg.norm(G @ q - h, np.inf) > 1e-9 * scale:
        return None
    if np.max(C @ q - d, initial=-np.inf) > 1e-10 * scale:
        return None
    if np.any(mult[E.shape[0]:] < -1e-9 * (1.0 + np.abs(mult).max(initial=0.0))):
        return None
    return q


def _lp_feasible_point(P: Polyhedron):
    n = P.dim
    if P.C.shape[0] == 0:
        sol = _solve_affine(P.E, P.f)
        return None if sol is None else sol[0]
    res = linprog(
        np.zeros(n),
        A_ub=P.C,
        b_ub=P.d,
        A_eq=P.E if P.E.shape[0] else None,
        b_eq=P.f if P.E.shape[0] else None,
        bounds=[(None, None)] * n,
        method="highs",
    )
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"LP feasibility check failed: {res.message}")
    return res.x


def _solve_affine(E, f, tol=1e-8):
    """Return ``(particular, null_basis)`` for ``E x = f`` or ``None`` if inconsistent."""
    n = E.shape[1]
    if E.shape[0] == 0:
        return np.zeros(n), np.eye(n)
    x, *_ = np.linalg.lstsq(E, f, rcond=None)
    scale = 1.0 + np.abs(E).max() * (1.0 + np.abs(x).max(initial=0.0)) + np.abs(f).max()
    if np.linalg.norm(E @ x - f, np.inf) > tol * scale:
        return None
    return x, null_space(E, n)


def simplify(P: Polyhedron, tol: float = 1e-8) -> SetDesc:
    """Canonical variant for a polyhedron: Empty, Whole, Point, Affine, Box or Polyhedron."""
    n = P.dim
    C, d = P.C, P.d
    zero_rows = np.all(np.abs(C) <= 1e-14, axis=1)
    if np.any(d[zero_rows] < -tol):
        return Empty(n)
    C, d = C[~zero_rows], d[~zero_rows]
    sol = _solve_affine(P.E, P.f, tol)
    if sol is None:
        return Empty(n)
    x, N = sol
    if C.shape[0] == 0:
        if N.shape[1] == n:
            return Whole(n)
        if N.shape[1] == 0:
            return Point(x)
        return Affine(x, N)
    if N.shape[1] == 0:
        scale = 1.0 + np.abs(d).max(initial=0.0)
        return Point(x) if np.max(C @ x - d) <= tol * scale else Empty(n)
    Q = Polyhedron(C, d, P.E, P.f)
    if _lp_feasible_point(Q) is None:
        return Empty(n)
    if P.E.shape[0] == 0 and _is_box_rows(C):
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        for c, b in zip(C, d):
            i = int(np.flatnonzero(c)[0])
            if c[i] > 0:
                hi[i] = min(hi[i], b / c[i])
            else:
                lo[i] = max(lo[i], b / c[i])
        return Box(lo, hi)
    return Q


def _is_box_rows(C):
    return bool(np.all(np.count_nonzero(C, axis=1) == 1))


def intersect(*sets: SetDesc, tol: float = 1e-8) -> SetDesc:
    """Intersection of representable sets of a common dimension."""
    if not sets:
        raise ValueError("need at least one set")
    n = sets[0].dim
    if any(s.dim != n for s in sets):
        raise ValueError("dimension mismatch in intersection")
    if any(s.is_empty for s in sets if not isinstance(s, Polyhedron)):
        return Empty(n)
    rest = [s for s in sets if not isinstance(s, Whole)]
    if not rest:
        return Whole(n)
    points = [s for s in rest if isinstance(s, Point)]
    if points:
        v = points[0].v
        if all(s.contains(v, tol) for s in rest):
            return Point(v)
        return Empty(n)
    if len(rest) == 1:
        return rest[0]
    polys = [s.to_polyhedron() for s in rest]
    P = Polyhedron(
        np.vstack([p.C for p in polys]),
        np.concatenate([p.d for p in polys]),
        np.vstack([p.E for p in polys]),
        np.concatenate([p.f for p in polys]),
    )
    return simplify(P, tol)


def preimage(S: SetDesc, M, tol: float = 1e-8) -> SetDesc:
    """``{y : M y in S}`` for a matrix ``M`` with ``M.shape[0] == S.dim``."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] != S.dim:
        raise ValueError("dimension mismatch in preimage")
    n = M.shape[1]
    if isinstance(S, Whole):
        return Whole(n)
    if S.is_empty and not isinstance(S, Polyhedron):
        return Empty(n)
    P = S.to_polyhedron()
    return simplify(Polyhedron(P.C @ M, P.d, P.E @ M, P.f), tol)


def image(S: SetDesc, M, offset=None, tol: float = 1e-10) -> SetDesc:
    """``{M x + offset : x in S}``.

    Exact for points and affine sets under any ``M``; for boxes and
    polyhedra ``M`` must be injective.
    """
    M = np.asarray(M, dtype=float)
    if M.shape[1] != S.dim:
        raise ValueError("dimension mismatch in image")
    m = M.shape[0]
    c = np.zeros(m) if offset is None else _vec(offset)
    if S.is_empty and not isinstance(S, Polyhedron):
        return Empty(m)
    if isinstance(S, Point):
        return Point(M @ S.v + c)
    if isinstance(S, Whole):
        return _affine_or_point(c, orth(M, tol), m)
    if isinstance(S, Affine):
        return _affine_or_point(M @ S.offset + c, orth(M @ S.basis, tol), m)
    # box / ray product / polyhedron: needs an injective map
    if null_space(M, S.dim, tol).shape[1]:
        raise UnsupportedStructure("image of a polyhedral set under a non-injective map")
    P = S.to_polyhedron()
    Mp = np.linalg.pinv(M)
    W = orth_complement(orth(M, tol), m)
    # y = M x + c  <=>  y - c in ran M and x = M^+ (y - c)
    C = P.C @ Mp
    d = P.d + C @ c
    E1 = P.E @ Mp
    E = np.vstack([E1, W.T])
    f = np.concatenate([P.f + E1 @ c, W.T @ c])
    if S.is_empty:
        return Empty(m)
    out = simplify(Polyhedron(C, d, E, f), 1e-8)
    return out


def _affine_or_point(p, V, n):
    if V.shape[1] == 0:
        return Point(p)
    if V.shape[1] == n:
        return Whole(n)
    return Affine(p, V)


def product(sets) -> SetDesc:
    """Cartesian product, block-diagonal in the H-representation."""
    sets = list(sets)
    if len(sets) == 1:
        return sets[0]
    if any(s.is_empty for s in sets):
        return Empty(sum(s.dim for s in sets))
    if all(isinstance(s, Point) for s in sets):
        return Point(np.concatenate([s.v for s in sets]))
    if all(isinstance(s, (Box, RayProduct, Whole)) for s in sets):
        boxes = [_as_box(s) for s in sets]
        return Box(np.concatenate([b.lo for b in boxes]), np.concatenate([b.hi for b in boxes]))
    if all(isinstance(s, (Affine, Point, Whole)) for s in sets):
        offsets, bases = [], []
        for s in sets:
            if isinstance(s, Point):
                offsets.append(s.v)
                bases.append(np.zeros((s.dim, 0)))
            elif isinstance(s, Whole):
                offsets.append(np.zeros(s.dim))
                bases.append(np.eye(s.dim))
            else:
                offsets.append(s.offset)
                bases.append(s.basis)
        from scipy.linalg import block_diag

        B = block_diag(*bases)
        return _affine_or_point(np.concatenate(offsets), B, B.shape[0])
    from scipy.linalg import block_diag

    polys = [s.to_polyhedron() for s in sets]
    P = Polyhedron(
        block_diag(*[p.C for p in polys]),
        np.concatenate([p.d for p in polys]),
        block_diag(*[p.E for p in polys]),
        np.concatenate([p.f for p in polys]),
    )
    return simplify(P)


def _as_box(s):
    if isinstance(s, Box):
        return s
    if isinstance(s, RayProduct):
        return s.as_box()
    return Box(np.full(s.dim, -np.inf), np.full(s.dim, np.inf))


def affine_hull(S: SetDesc, tol: float = 1e-9) -> SetDesc:
    """Affine hull as Point/Affine/Whole (Empty for the empty set).

    For polyhedra the implicit equalities are found with one LP per
    inequality row.
    """
    n = S.dim
    if S.is_empty:
        return Empty(n)
    if isinstance(S, (Point, Affine, Whole)):
        return S
    P = S.to_polyhedron()
    eq_rows = [P.E]
    eq_rhs = [P.f]
    for c, b in zip(P.C, P.d):
        if not np.any(c):
            continue
        res = linprog(
            c,
            A_ub=P.C,
            b_ub=P.d,
            A_eq=P.E if P.E.shape[0] else None,
            b_eq=P.f if P.E.shape[0] else None,
            bounds=[(None, None)] * n,
            method="highs",
        )
        # min c.x == b means the row is tight on all of P
        if res.status == 0 and b - res.fun <= tol * (1.0 + abs(b)):
            eq_rows.append(c[None, :])
            eq_rhs.append(np.array([b]))
    E = np.vstack(eq_rows)
    f = np.concatenate(eq_rhs)
    return simplify(Polyhedron(np.zeros((0, n)), np.zeros(0), E, f))


def direction_basis(S: SetDesc) -> np.ndarray:
    """Orthonormal basis of ``span(S - S)``."""
    H = affine_hull(S)
    if isinstance(H, (Point, Empty)):
        return np.zeros((S.dim, 0))
    if isinstance(H, Whole):
        return np.eye(S.dim)
    return H.basis


def _parse_bounds(values):
    return np.array([float(v) for v in values])


def from_json(obj: dict) -> SetDesc:
    kind = obj["kind"].lower()
    if kind == "empty":
        return Empty(int(obj["dim"]))
    if kind == "whole":
        return Whole(int(obj["dim"]))
    if kind == "point":
        return Point(obj["v"])
    if kind == "affine":
        p = _vec(obj["offset"])
        return Affine(p, np.asarray(obj.get("basis", []), dtype=float).reshape(p.size, -1))
    if kind == "subspace":
        B = np.asarray(obj["basis"], dtype=float)
        return subspace(B, int(obj.get("dim", B.shape[0])))
    if kind == "box":
        return Box(_parse_bounds(obj["lo"]), _parse_bounds(obj["hi"]))
    if kind == "rays":
        return RayProduct(tuple(obj["kinds"]))
    if kind == "polyhedron":
        n = int(obj.get("dim", len(obj["C"][0]) if obj["C"] else len(obj["E"][0])))
        C = np.asarray(obj["C"], dtype=float).reshape(-1, n)
        E = np.asarray(obj.get("E", []), dtype=float).reshape(-1, n)
        return Polyhedron(C, _parse_bounds(obj["d"]), E, np.asarray(obj.get("f", []), dtype=float))
    raise ValueError(f"unknown set kind {obj['kind']!r}")
