"""Fenchel-Rockafellar values, duality gaps and the LASSO instance.

Primal value ``f(x) + g(Lx)``, dual value ``g*(y) + f*(-L^T y)``. Weak
duality gives ``primal + dual >= 0`` for every pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import wrightomega

from . import operators as ops
from . import sets as S
from .linalg import null_space, operator_norm
from .problem import Triple
from .splitting import iterate

INDICATOR_TOL = 1e-8
NORM_BOUND = 1e8

__all__ = [
    "ConvexFn",
    "ScaledL1WithLinear",
    "QuadPlusConst",
    "Indicator",
    "Separable",
    "Exp",
    "ExpConj",
    "Reflected",
    "DualityVerdict",
    "primal_value",
    "dual_value",
    "total_duality_check",
    "lasso_instance",
    "lasso_objective",
    "lasso_solution_set",
    "exp_counterexample",
]


class ConvexFn:
    """Proper lsc convex function with an exact prox; ``conj`` is its conjugate."""

    dim: int

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, gamma, x) -> np.ndarray:
        raise NotImplementedError

    def conj_value(self, u) -> float:
        raise NotImplementedError

    def conj_prox(self, gamma, u) -> np.ndarray:
        # Moreau: prox_{gamma f*}(u) = u - gamma prox_{f/gamma}(u/gamma)
        u = np.asarray(u, dtype=float)
        return u - gamma * self.prox(1.0 / gamma, u / gamma)

    def subdifferential(self) -> ops.MonotoneOp:
        return ops.Subdifferential(self.dim, self.prox, type(self).__name__)

    def __call__(self, x):
        return self.value(x)


@dataclass(frozen=True, eq=False)
class ScaledL1WithLinear(ConvexFn):
    """``lam ||x||_1 - <x, c>``."""

    lam: float
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.atleast_1d(np.asarray(self.c, dtype=float)))

    @property
    def dim(self):
        return self.c.size

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(self.lam * np.abs(x).sum() - x @ self.c)

    def prox(self, gamma, x):
        # subdifferential shift: soft-threshold(x + gamma c, gamma lam)
        return ops.soft_threshold(np.asarray(x, dtype=float) + gamma * self.c, gamma * self.lam)

    def conj_value(self, u):
        v = (np.asarray(u, dtype=float) + self.c) / self.lam
        return 0.0 if np.max(np.abs(v), initial=0.0) <= 1.0 + INDICATOR_TOL else np.inf

    def subdifferential(self):
        return ops.ShiftedL1Subdiff(self.lam, self.c)


@dataclass(frozen=True, eq=False)
class QuadPlusConst(ConvexFn):
    """``1/2 ||y||^2 + 1/2 ||b||^2``."""

    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", np.atleast_1d(np.asarray(self.b, dtype=float)))

    @property
    def dim(self):
        return self.b.size

    def value(self, y):
        y = np.asarray(y, dtype=float)
        return float(0.5 * y @ y + 0.5 * self.b @ self.b)

    def prox(self, gamma, y):
        return np.asarray(y, dtype=float) / (1.0 + gamma)

    def conj_value(self, u):
        u = np.asarray(u, dtype=float)
        return float(0.5 * u @ u - 0.5 * self.b @ self.b)

    def subdifferential(self):
        return ops.ScaledIdentity(self.dim, 1.0)


@dataclass(frozen=True, eq=False)
class Indicator(ConvexFn):
    """Indicator of a closed convex :class:`SetDesc`; conjugate is the support function."""

    C: S.SetDesc

    @property
    def dim(self):
        return self.C.dim

    def value(self, x):
        return 0.0 if self.C.contains(x, INDICATOR_TOL) else np.inf

    def prox(self, gamma, x):
        return self.C.project(np.asarray(x, dtype=float))

    def conj_value(self, u):
        u = np.asarray(u, dtype=float)
        C = self.C
        if isinstance(C, S.Point):
            return float(u @ C.v)
        if isinstance(C, S.Whole):
            return 0.0 if np.max(np.abs(u), initial=0.0) <= INDICATOR_TOL else np.inf
        if isinstance(C, S.Affine):
            if np.linalg.norm(C.basis.T @ u) > INDICATOR_TOL:
                return np.inf
            return float(u @ C.offset)
        if isinstance(C, (S.Box, S.RayProduct)):
            box = C if isinstance(C, S.Box) else C.as_box()
            total = 0.0
            for ui, lo, hi in zip(u, box.lo, box.hi):
                if ui > INDICATOR_TOL:
                    if not np.isfinite(hi):
                        return np.inf
                    total += ui * hi
                elif ui < -INDICATOR_TOL:
                    if not np.isfinite(lo):
                        return np.inf
                    total += ui * lo
            return float(total)
        raise S.UnsupportedStructure(f"support function of {type(C).__name__}")

    def subdifferential(self):
        from .solution_sets import normal_cone

        return normal_cone(self.C)


class Scalar1D:
    """Convex function of one real variable (building block for :class:`Separable`)."""

    def value(self, t):
        raise NotImplementedError

    def prox(self, gamma, v):
        raise NotImplementedError

    def conj(self) -> "Scalar1D":
        raise NotImplementedError


class Exp(Scalar1D):
    def value(self, t):
        return float(np.exp(t))

    def prox(self, gamma, v):
        # p + gamma e^p = v  =>  p = v - W(gamma e^v) = v - omega(v + log gamma)
        v = np.asarray(v, dtype=float)
        return v - np.real(wrightomega(v + np.log(gamma)))

    def conj(self):
        return ExpConj()


class ExpConj(Scalar1D):
    """``t log t - t`` for ``t > 0``, ``0`` at ``0``, ``+inf`` otherwise."""

    def value(self, t):
        t = float(t)
        if t < 0:
            return np.inf
        if t == 0:
            return 0.0
        return t * np.log(t) - t

    def prox(self, gamma, v):
        # log p = (v - p)/gamma  =>  p = gamma omega(v/gamma - log gamma)
        v = np.asarray(v, dtype=float)
        return gamma * np.real(wrightomega(v / gamma - np.log(gamma)))

    def conj(self):
        return Exp()


@dataclass(frozen=True)
class Reflected(Scalar1D):
    """``t -> h(-t)``."""

    h: Scalar1D

    def value(self, t):
        return self.h.value(-t)

    def prox(self, gamma, v):
        return -self.h.prox(gamma, -np.asarray(v, dtype=float))

    def conj(self):
        return Reflected(self.h.conj())


@dataclass(frozen=True, eq=False)
class Separable(ConvexFn):
    """``sum_i h_i(x_i)``."""

    parts: tuple

    @property
    def dim(self):
        return len(self.parts)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(sum(h.value(xi) for h, xi in zip(self.parts, x)))

    def prox(self, gamma, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for i, h in enumerate(self.parts):
            out[..., i] = h.prox(gamma, x[..., i])
        return out

    def conj_value(self, u):
        u = np.asarray(u, dtype=float)
        return float(sum(h.conj().value(ui) for h, ui in zip(self.parts, u)))


def primal_value(f: ConvexFn, g: ConvexFn, L, x) -> float:
    L = np.atleast_2d(np.asarray(L, dtype=float))
    x = np.asarray(x, dtype=float)
    return float(f.value(x) + g.value(L @ x))


def dual_value(f: ConvexFn, g: ConvexFn, L, y) -> float:
    L = np.atleast_2d(np.asarray(L, dtype=float))
    y = np.asarray(y, dtype=float)
    return float(g.conj_value(y) + f.conj_value(-(L.T @ y)))


@dataclass
class DualityVerdict:
    """Outcome of a Chambolle-Pock run read as a Fenchel-Rockafellar certificate.

    ``mu`` and ``mu_star`` are evaluated exactly at the limits (possibly
    ``inf``); ``mu_est``/``mu_star_est`` use the subgradient pairs of the
    last step, which stay finite on the domains, and ``gap`` falls back to
    them whenever an exact value is infinite.
    """

    mu: float
    mu_star: float
    gap: float
    primal_attained: bool
    dual_attained: bool
    total: bool
    mu_est: float = np.nan
    mu_star_est: float = np.nan
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    iterations: int = 0
    converged: bool = False
    argmin_certified: Optional[bool] = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def num(v):
            return float(v) if np.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))

        return {
            "mu": num(self.mu),
            "mu_star": num(self.mu_star),
            "gap": num(self.gap),
            "mu_est": num(self.mu_est),
            "mu_star_est": num(self.mu_star_est),
            "primal_attained": self.primal_attained,
            "dual_attained": self.dual_attained,
            "total": self.total,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def total_duality_check(
    f: ConvexFn,
    g: ConvexFn,
    L,
    sigma: float,
    tau: float,
    tol: float = 1e-7,
    max_iter: int = 100_000,
    iter_tol: float = 1e-11,
    start=None,
    n_perturb: int = 1000,
    seed: int = 0,
) -> DualityVerdict:
    """Run Chambolle-Pock on ``(df, L, dg)`` and read off a duality verdict.

    Attainment is a numerical proxy: converged, bounded by ``1e8`` and
    small saddle residual. When the run converges the primal limit is
    also compared against random perturbations (local argmin certificate).
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    t = Triple(f.subdifferential(), L, g.subdifferential(), sigma, tau)
    trace = iterate(t, "full", start=start, max_iter=max_iter, tol=iter_tol, keep_iterates=False)
    x, y = trace.x, trace.y

    # one more step, keeping the subgradient pairs it produces
    a = x - sigma * (L.T @ y)
    xp = f.prox(sigma, a)
    u = (a - xp) / sigma  # u in df(xp)
    c = y + tau * (L @ (2.0 * xp - x))
    yp = g.conj_prox(tau, c)
    v = (c - yp) / tau  # yp in dg(v)

    mu = primal_value(f, g, L, xp)
    mu_star = dual_value(f, g, L, yp)
    mu_est = f.value(xp) + g.value(v)
    mu_star_est = g.conj_value(yp) + f.conj_value(u)
    if np.isfinite(mu) and np.isfinite(mu_star):
        gap = mu + mu_star
    else:
        gap = float(xp @ u + v @ yp)

    bounded = np.linalg.norm(xp) <= NORM_BOUND and np.linalg.norm(yp) <= NORM_BOUND
    ok = trace.converged and not trace.diverged and bounded
    primal_attained = bool(ok and np.isfinite(mu))
    dual_attained = bool(ok and np.isfinite(mu_star))
    verdict = DualityVerdict(
        mu=mu,
        mu_star=mu_star,
        gap=float(gap),
        primal_attained=primal_attained,
        dual_attained=dual_attained,
        total=bool(abs(gap) <= tol and primal_attained and dual_attained),
        mu_est=float(mu_est),
        mu_star_est=float(mu_star_est),
        x=xp,
        y=yp,
        iterations=trace.iterations,
        converged=trace.converged,
        details={
            "consensus_primal": float(np.linalg.norm(L @ xp - v)),
            "consensus_dual": float(np.linalg.norm(u + L.T @ yp)),
        },
    )
    if verdict.total and n_perturb:
        rng = np.random.default_rng(seed)
        base = mu
        worst = np.inf
        for _ in range(n_perturb):
            d = rng.standard_normal(xp.size) * 10.0 ** rng.uniform(-6, 0)
            worst = min(worst, primal_value(f, g, L, xp + d) - base)
        verdict.argmin_certified = bool(worst >= -tol)
        verdict.details["perturbation_margin"] = float(worst)
    return verdict


def lasso_objective(L, b, lam, x) -> float:
    L = np.atleast_2d(np.asarray(L, dtype=float))
    r = L @ np.asarray(x, dtype=float) - np.asarray(b, dtype=float)
    return float(0.5 * r @ r + lam * np.abs(x).sum())


def lasso_instance(L, b, lam: float):
    """``min 1/2 ||Lx - b||^2 + lam ||x||_1`` as ``(Triple, f, g)``.

    ``f(x) = lam ||x||_1 - <x, L^T b>`` and ``g(y) = 1/2 ||y||^2 + 1/2 ||b||^2``,
    so ``A = lam d||.||_1 - L^T b`` and ``B y = y``; steps ``0.95/||L||``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    L = np.atleast_2d(np.asarray(L, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    f = ScaledL1WithLinear(lam, L.T @ b)
    g = QuadPlusConst(b)
    step = 0.95 / operator_norm(L)
    t = Triple(f.subdifferential(), L, g.subdifferential(), step, step)
    return t, f, g


def lasso_solution_set(L, b, lam: float, k, band: float = 1e-8, tol: float = 1e-7) -> S.SetDesc:
    """All LASSO minimizers from the dual solution ``k``.

    ``Z = L^{-1}(k) ∩ N_C(L^T (b - k) / lam)`` with ``C = [-1, 1]^n``:
    coordinates strictly inside pin to 0, at +1 become ``>= 0``, at -1
    become ``<= 0``. For injective ``L`` the result is a single point.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    k = np.atleast_1d(np.asarray(k, dtype=float))
    xi = L.T @ (b - k) / lam
    kinds = []
    for v in xi:
        if abs(v - 1.0) <= band:
            kinds.append("nonneg")
        elif abs(v + 1.0) <= band:
            kinds.append("nonpos")
        elif abs(v) < 1.0:
            kinds.append("zero")
        else:
            raise ValueError(f"k fails validation: |L^T(b-k)/lam| = {abs(v):.6g} > 1")
    cone = S.RayProduct(tuple(kinds))
    n = L.shape[1]
    if null_space(L, n).shape[1] == 0:
        z, *_ = np.linalg.lstsq(L, k, rcond=None)
        if np.linalg.norm(L @ z - k) > tol * (1 + np.linalg.norm(k)) or not cone.contains(z, tol):
            raise ValueError("k fails validation: L^{-1}(k) misses the normal cone")
        return S.Point(z)
    Z = S.intersect(S.preimage(S.Point(k), L), cone)
    if Z.is_empty:
        raise ValueError("k fails validation: the recovered set is empty")
    return Z


def exp_counterexample():
    """``f = exp(x1) + exp*(x2)``, ``g = exp(x1) + exp*(-x2)``, ``L = Id`` on R^2."""
    f = Separable((Exp(), ExpConj()))
    g = Separable((Exp(), Reflected(ExpConj())))
    return f, g, np.eye(2)
