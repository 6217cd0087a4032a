"""Independent brute-force checks: grid saddle scans, multi-start limit
clustering, Dykstra and QP projections, and the conditional-theorem suite.

Nothing here calls the closed-form projection identities it is used to
check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from . import sets as S
from .linalg import orth
from .problem import SaddleCandidate, Triple, saddle_residual
from .splitting import iterate

log = logging.getLogger(__name__)

GRID_CAP = 10_000_000

__all__ = [
    "GRID_CAP",
    "GridSpec",
    "grid_saddle_scan",
    "LimitCluster",
    "MultistartResult",
    "cluster_points",
    "multistart_limits",
    "dykstra",
    "halfspace_projector",
    "hyperplane_projector",
    "polyhedron_projectors",
    "qp_minkowski_projection",
    "qp_m_projection",
    "same_set",
    "TheoremReport",
    "conditional_theorem_suite",
]


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid with per-dimension ``(lo, hi, steps)``."""

    lo: tuple
    hi: tuple
    steps: tuple

    def __post_init__(self):
        lo, hi, steps = (tuple(np.atleast_1d(v).tolist()) for v in (self.lo, self.hi, self.steps))
        if not (len(lo) == len(hi) == len(steps)):
            raise ValueError("lo, hi and steps must have equal length")
        if any(int(s) < 2 for s in steps):
            raise ValueError("steps must be at least 2 per dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "steps", tuple(int(s) for s in steps))
        if self.size > GRID_CAP:
            raise ValueError(f"grid has {self.size} points, above the cap {GRID_CAP}")

    @classmethod
    def uniform(cls, lo: float, hi: float, steps: int, dim: int) -> "GridSpec":
        return cls((lo,) * dim, (hi,) * dim, (steps,) * dim)

    @property
    def dim(self) -> int:
        return len(self.steps)

    @property
    def size(self) -> int:
        return int(np.prod(self.steps, dtype=np.int64))

    @property
    def pitch(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / (np.array(self.steps) - 1)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, s) for a, b, s in zip(self.lo, self.hi, self.steps)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)


def grid_saddle_scan(t: Triple, gx: GridSpec, gy: GridSpec, tol: float = 1e-9, chunk: int = 1 << 18):
    """All grid points of ``gx x gy`` with ``saddle_residual <= tol``, sorted by residual."""
    if gx.dim != t.n or gy.dim != t.m:
        raise ValueError("grid dimensions do not match the triple")
    total = gx.size * gy.size
    if total > GRID_CAP:
        raise ValueError(f"grid has {total} points, above the cap {GRID_CAP}")
    axes = gx.axes() + gy.axes()
    shape = gx.steps + gy.steps
    found = []
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), shape)
        pts = np.stack([ax[i] for ax, i in zip(axes, idx)], axis=-1)
        r = saddle_residual(t, pts[:, : t.n], pts[:, t.n:])
        for j in np.flatnonzero(r <= tol):
            found.append(SaddleCandidate(pts[j, : t.n], pts[j, t.n:], float(r[j])))
    found.sort(key=lambda c: (c.residual, tuple(c.x), tuple(c.y)))
    return found


@dataclass
class LimitCluster:
    representatives: list
    counts: list
    radius: float

    @property
    def count(self) -> int:
        return len(self.representatives)

    def to_json(self) -> dict:
        return {
            "representatives": [np.asarray(r).tolist() for r in self.representatives],
            "counts": list(self.counts),
            "radius": self.radius,
        }


@dataclass
class MultistartResult:
    primal: LimitCluster
    dual: LimitCluster
    limits: list
    failed: int
    seed: int
    details: dict = field(default_factory=dict)


def cluster_points(points: Sequence, radius: float) -> LimitCluster:
    """Single-linkage clustering with cut height ``radius``."""
    P = np.array([np.asarray(p, dtype=float) for p in points])
    if len(P) == 0:
        return LimitCluster([], [], 0.0)
    if len(P) == 1:
        return LimitCluster([P[0]], [1], 0.0)
    labels = fcluster(linkage(P, method="single"), t=radius, criterion="distance")
    reps, counts, rad = [], [], 0.0
    for lab in sorted(set(labels), key=lambda l: np.flatnonzero(labels == l)[0]):
        members = P[labels == lab]
        rep = members.mean(axis=0)
        reps.append(rep)
        counts.append(len(members))
        rad = max(rad, float(np.linalg.norm(members - rep, axis=1).max()))
    return LimitCluster(reps, counts, rad)


def multistart_limits(
    t: Triple,
    n_starts: int = 20,
    seed: int = 42,
    tol: float = 1e-11,
    radius: Optional[float] = None,
    scale: float = 10.0,
    max_iter: int = 100_000,
) -> MultistartResult:
    """Chambolle-Pock limits from seeded random starts, clustered on each side.

    Non-converged runs are excluded and counted in ``failed``. ``radius``
    defaults to ``10 * tol``.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    radius = 10.0 * tol if radius is None else radius
    rng = np.random.default_rng(seed)
    limits, failed = [], 0
    for _ in range(n_starts):
        x0 = scale * rng.standard_normal(t.n)
        y0 = scale * rng.standard_normal(t.m)
        tr = iterate(t, "full", start=(x0, y0), max_iter=max_iter, tol=tol, keep_iterates=False)
        if tr.converged:
            limits.append((tr.x, tr.y))
        else:
            failed += 1
    if failed:
        log.info("multistart: %d of %d runs did not converge", failed, n_starts)
    return MultistartResult(
        cluster_points([x for x, _ in limits], radius),
        cluster_points([y for _, y in limits], radius),
        limits,
        failed,
        seed,
    )


# --- Dykstra over explicit halfspaces and hyperplanes ---------------------


def halfspace_projector(a, b) -> Callable:
    """Projector onto ``{x : <a, x> <= b}``."""
    a = np.asarray(a, dtype=float)
    aa = float(a @ a)

    def proj(x):
        excess = a @ x - b
        return x if excess <= 0 else x - (excess / aa) * a

    return proj


def hyperplane_projector(a, b) -> Callable:
    a = np.asarray(a, dtype=float)
    aa = float(a @ a)
    return lambda x: x - ((a @ x - b) / aa) * a


def polyhedron_projectors(C=None, d=None, E=None, f=None) -> list:
    out = []
    if C is not None:
        out += [halfspace_projector(c, di) for c, di in zip(np.atleast_2d(C), np.atleast_1d(d))]
    if E is not None:
        out += [hyperplane_projector(e, fi) for e, fi in zip(np.atleast_2d(E), np.atleast_1d(f))]
    return out


def dykstra(projectors: Sequence[Callable], x, tol: float = 1e-13, max_iter: int = 200_000) -> np.ndarray:
    """Dykstra's algorithm for the projection onto an intersection."""
    x = np.asarray(x, dtype=float).copy()
    incs = [np.zeros_like(x) for _ in projectors]
    for _ in range(max_iter):
        prev = x.copy()
        shift = 0.0
        for i, P in enumerate(projectors):
            y = P(x + incs[i])
            new_inc = x + incs[i] - y
            shift += float(np.sum((new_inc - incs[i]) ** 2))
            incs[i] = new_inc
            x = y
        if np.linalg.norm(x - prev) <= tol and shift <= tol * tol:
            return x
    return x


# --- convex QP oracles ----------------------------------------------------


def _constrain(var, P: S.Polyhedron):
    cons = []
    if P.C.shape[0]:
        cons.append(P.C @ var <= P.d)
    if P.E.shape[0]:
        cons.append(P.E @ var == P.f)
    return cons


def _solve(problem):
    import cvxpy as cp

    problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"QP oracle failed: {problem.status}")


def qp_minkowski_projection(x, Z: S.SetDesc, K: S.SetDesc, L, rho: float) -> np.ndarray:
    """``P_{Z - rho L^T K}(x)`` by solving ``min ||x - z + rho L^T k||^2`` over ``Z x K``."""
    import cvxpy as cp

    L = np.atleast_2d(np.asarray(L, dtype=float))
    z = cp.Variable(Z.dim)
    k = cp.Variable(K.dim)
    expr = z - rho * (L.T @ k)
    prob = cp.Problem(
        cp.Minimize(cp.sum_squares(np.asarray(x, dtype=float) - expr)),
        _constrain(z, Z.to_polyhedron()) + _constrain(k, K.to_polyhedron()),
    )
    _solve(prob)
    return np.asarray(z.value - rho * (L.T @ k.value))


def qp_m_projection(Cstar, Z: S.SetDesc, K: S.SetDesc, x0, y0):
    """Minimize ``||C^T((x, y) - (x0, y0))||`` over ``Z x K``; returns ``(x, y, distance)``."""
    import cvxpy as cp

    x = cp.Variable(Z.dim)
    y = cp.Variable(K.dim)
    u0 = np.concatenate([np.asarray(x0, dtype=float), np.asarray(y0, dtype=float)])
    r = Cstar @ (cp.hstack([x, y]) - u0)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(r)), _constrain(x, Z.to_polyhedron()) + _constrain(y, K.to_polyhedron()))
    _solve(prob)
    xv, yv = np.asarray(x.value), np.asarray(y.value)
    dist = float(np.linalg.norm(Cstar @ (np.concatenate([xv, yv]) - u0)))
    return xv, yv, dist


# --- set comparison -------------------------------------------------------


def same_set(a: S.SetDesc, b: S.SetDesc, n_samples: int = 500, seed: int = 0, tol: float = 1e-9, spread: float = 10.0):
    """Two-sided membership sampling: projections of random points onto each
    set must belong to the other. Returns ``(ok, worst_violation)``."""
    if a.dim != b.dim:
        return False, np.inf
    if a.is_empty or b.is_empty:
        return a.is_empty == b.is_empty, 0.0
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        x = spread * rng.standard_normal(a.dim)
        for src, dst in ((a, b), (b, a)):
            p = src.project(x)
            worst = max(worst, float(np.linalg.norm(dst.project(p) - p)))
    return worst <= tol * (1 + spread), worst


# --- conditional theorem suite --------------------------------------------


@dataclass
class TheoremReport:
    theorem_id: str
    hypothesis_holds: bool
    conclusion_verified: Optional[bool]
    witnesses: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.hypothesis_holds:
            return "not applicable"
        return "verified" if self.conclusion_verified else "failed"

    def to_json(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "hypothesis_holds": self.hypothesis_holds,
            "conclusion_verified": self.conclusion_verified,
            "witnesses": self.witnesses,
        }


def _span_dim(vectors: np.ndarray, tol=1e-9) -> int:
    return orth(vectors, tol).shape[1] if vectors.size else 0


def _point_of(s: S.SetDesc) -> np.ndarray:
    return s.project(np.zeros(s.dim))


def _interior_nonempty(s: S.SetDesc) -> bool:
    if isinstance(s, S.Whole):
        return True
    if isinstance(s, (S.Point, S.Empty)):
        return False
    if isinstance(s, S.Affine):
        return s.basis.shape[1] == s.dim
    return S.direction_basis(s).shape[1] == s.dim


def conditional_theorem_suite(t: Triple, Z: S.SetDesc, K: S.SetDesc, tol: float = 1e-8) -> list[TheoremReport]:
    """Check each conditional statement whose hypothesis holds on exact ``Z``, ``K``.

    Identifiers: ``singleton-Z``, ``singleton-K``, ``Z-along-kerL``,
    ``K-along-kerLt`` (full-span conditions), and ``common-zero-i`` to
    ``common-zero-v`` (paramonotone problems with ``0 in K``).
    """
    n, m = t.n, t.m
    L, Lt = t.L, t.Lt
    dZ = S.direction_basis(Z)
    dK = S.direction_basis(K)
    LtdK = Lt @ dK
    LdZ = L @ dZ
    out = []

    dim_LtK = _span_dim(LtdK)
    out.append(TheoremReport("singleton-Z", dim_LtK == n, dZ.shape[1] == 0 if dim_LtK == n else None,
                             {"dim span(L^T(K-K))": dim_LtK, "dim Z": dZ.shape[1],
                              "conclusion holds without hypothesis": dim_LtK != n and dZ.shape[1] == 0}))
    dim_LZ = _span_dim(LdZ)
    out.append(TheoremReport("singleton-K", dim_LZ == m, dK.shape[1] == 0 if dim_LZ == m else None,
                             {"dim span(L(Z-Z))": dim_LZ, "dim K": dK.shape[1],
                              "conclusion holds without hypothesis": dim_LZ != m and dK.shape[1] == 0}))
    full_K = dK.shape[1] == m
    out.append(TheoremReport("Z-along-kerL", full_K,
                             bool(np.abs(LdZ).max(initial=0) <= tol) if full_K else None,
                             {"max |L (Z-Z)|": float(np.abs(LdZ).max(initial=0))}))
    full_Z = dZ.shape[1] == n
    out.append(TheoremReport("K-along-kerLt", full_Z,
                             bool(np.abs(LtdK).max(initial=0) <= tol) if full_Z else None,
                             {"max |L^T (K-K)|": float(np.abs(LtdK).max(initial=0))}))

    para = bool(t.A.paramonotone and t.B.paramonotone)
    zero_in_K = K.contains(np.zeros(m), tol)
    base = para and zero_in_K
    wit = {"paramonotone": para, "0 in K": zero_in_K}

    # (i) Z = zer A ∩ L^{-1} zer B
    concl = None
    if base:
        try:
            rhs = S.intersect(t.A.inverse_value_at(np.zeros(n)), S.preimage(t.B.inverse_value_at(np.zeros(m)), L))
            concl, gap = same_set(Z, rhs, n_samples=100, tol=1e-7)
            wit = {**wit, "sampling gap": gap}
        except (NotImplementedError, S.UnsupportedStructure) as exc:
            wit = {**wit, "unsupported": str(exc)}
    out.append(TheoremReport("common-zero-i", base, concl, dict(wit)))

    # (ii) span L^T K ⟂ span(Z - Z)
    k0 = _point_of(K)
    span_LtK = orth(np.column_stack([LtdK, Lt @ k0]))
    cross = float(np.abs(span_LtK.T @ dZ).max(initial=0)) if span_LtK.size else 0.0
    out.append(TheoremReport("common-zero-ii", base, cross <= tol if base else None, {"max |<L^T K, Z-Z>|": cross}))

    # (iii) A single-valued => K ⊆ ker L^T ; (v) int Z nonempty => same conclusion
    in_ker = float(max(np.abs(LtdK).max(initial=0), np.abs(Lt @ k0).max(initial=0)))
    hyp = base and bool(t.A.single_valued)
    out.append(TheoremReport("common-zero-iii", hyp, in_ker <= tol if hyp else None, {"max |L^T K|": in_ker}))

    # (iv) B single-valued => K = {0}
    hyp = base and bool(t.B.single_valued)
    K_zero = dK.shape[1] == 0 and np.linalg.norm(k0) <= tol
    out.append(TheoremReport("common-zero-iv", hyp, bool(K_zero) if hyp else None, {"dim K": dK.shape[1]}))

    hyp = base and _interior_nonempty(Z)
    out.append(TheoremReport("common-zero-v", hyp, in_ker <= tol if hyp else None, {"max |L^T K|": in_ker}))
    return out
