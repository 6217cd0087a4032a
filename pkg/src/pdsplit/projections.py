"""Closed-form projections onto ``Z - rho L^T K`` and onto the fixed-point
sets of the Chambolle-Pock and reduced operators.

All identities assume paramonotone ``A`` and ``B``; the anchors
``(z0, k0)`` may be any primal-dual solution pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sets as S
from .problem import Triple
from .solution_sets import kernel_of_adjoint
from .splitting import Factor

__all__ = [
    "ProjectionContext",
    "ProjectionMismatch",
    "proj_Z",
    "proj_minus_rhoLK",
    "proj_Z_minus_rhoLK",
    "resolvent_of_projection",
    "proj_fix_reduced",
    "m_projection_onto_FixT",
    "scaled_isometry_pushforward_projection",
    "K_meets_kernel",
]


class ProjectionMismatch(AssertionError):
    def __init__(self, message, lhs, rhs):
        super().__init__(f"{message}: gap {np.linalg.norm(lhs - rhs):.3e}")
        self.lhs = lhs
        self.rhs = rhs


@dataclass(frozen=True, eq=False)
class ProjectionContext:
    Z: S.SetDesc
    K: S.SetDesc
    L: np.ndarray
    rho: float
    z0: np.ndarray
    k0: np.ndarray
    tol: float = 1e-7

    def __post_init__(self):
        L = np.atleast_2d(np.asarray(self.L, dtype=float))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float))
        object.__setattr__(self, "k0", np.asarray(self.k0, dtype=float))
        if not self.Z.contains(self.z0, self.tol):
            raise ValueError("anchor z0 is not in Z")
        if not self.K.contains(self.k0, self.tol):
            raise ValueError("anchor k0 is not in K")

    def with_rho(self, rho: float) -> "ProjectionContext":
        return ProjectionContext(self.Z, self.K, self.L, rho, self.z0, self.k0, self.tol)

    def with_anchors(self, z0, k0) -> "ProjectionContext":
        return ProjectionContext(self.Z, self.K, self.L, self.rho, z0, k0, self.tol)

    @property
    def minus_rhoLK(self) -> S.SetDesc:
        """``-rho L^T K``; ``L^T K`` is closed for every supported ``K``."""
        cached = self.__dict__.get("_mrlk")
        if cached is None:
            cached = S.image(self.K, -self.rho * self.L.T)
            object.__setattr__(self, "_mrlk", cached)
        return cached


def proj_Z(ctx: ProjectionContext, x) -> np.ndarray:
    return ctx.Z.project(np.asarray(x, dtype=float))


def proj_minus_rhoLK(ctx: ProjectionContext, x) -> np.ndarray:
    return ctx.minus_rhoLK.project(np.asarray(x, dtype=float))


def proj_Z_minus_rhoLK(ctx: ProjectionContext, x) -> np.ndarray:
    """``P_{Z - rho L^T K}(x) = P_Z(x + rho L^T k0) + P_{-rho L^T K}(x - z0)``."""
    x = np.asarray(x, dtype=float)
    return proj_Z(ctx, x + ctx.rho * (ctx.L.T @ ctx.k0)) + proj_minus_rhoLK(ctx, x - ctx.z0)


def K_meets_kernel(ctx: ProjectionContext, witness=None) -> bool:
    """Certify ``K ∩ ker L^T`` nonempty, exactly or through a witness."""
    if witness is not None:
        w = np.asarray(witness, dtype=float)
        return ctx.K.contains(w, ctx.tol) and np.linalg.norm(ctx.L.T @ w) <= ctx.tol
    try:
        return not S.intersect(ctx.K, kernel_of_adjoint(ctx.L)).is_empty
    except S.UnsupportedStructure:
        return False


def resolvent_of_projection(ctx: ProjectionContext, A, x, tol: float = 1e-8, witness=None) -> np.ndarray:
    """``J_{rho A} P_{Z - rho L^T K}(x)``, checked against its closed forms.

    Always compared with ``P_Z(x + rho L^T k0)``; additionally with
    ``P_Z(x)`` when ``K ∩ ker L^T`` is certified nonempty.
    Raises :class:`ProjectionMismatch` with both values on disagreement.
    """
    if not ctx.rho > 0:
        raise ValueError("rho must be positive")
    x = np.asarray(x, dtype=float)
    lhs = A.resolve(ctx.rho, proj_Z_minus_rhoLK(ctx, x))
    scale = 1.0 + np.linalg.norm(x)
    general = proj_Z(ctx, x + ctx.rho * (ctx.L.T @ ctx.k0))
    if np.linalg.norm(lhs - general) > tol * scale:
        raise ProjectionMismatch("J P differs from P_Z(x + rho L^T k0)", lhs, general)
    if K_meets_kernel(ctx, witness):
        plain = proj_Z(ctx, x)
        if np.linalg.norm(lhs - plain) > tol * scale:
            raise ProjectionMismatch("J P differs from P_Z(x)", lhs, plain)
    return lhs


def _require_isometry(f: Factor):
    if f.kind not in ("scaled_isometry", "douglas_rachford"):
        raise ValueError(f"needs a scaled-isometry factor, got {f.kind!r}")


def proj_fix_reduced(t: Triple, f: Factor, ctx: ProjectionContext, w) -> np.ndarray:
    """Projection onto ``Fix T~ = (Z - sigma L^T K) / sqrt(sigma)``."""
    _require_isometry(f)
    rs = np.sqrt(t.sigma)
    c = ctx if ctx.rho == t.sigma else ctx.with_rho(t.sigma)
    return proj_Z_minus_rhoLK(c, rs * np.asarray(w, dtype=float)) / rs


def _check_scaled_isometry(t: Triple, tol=1e-9):
    dev = np.abs(t.sigma * t.tau * (t.L @ t.Lt) - np.eye(t.m)).max(initial=0.0)
    if dev > tol:
        raise ValueError(f"requires sigma*tau*L L^T = Id (deviation {dev:.3e})")


def m_projection_onto_FixT(t: Triple, ctx: ProjectionContext, x0, y0, witness=None):
    """``M``-seminorm projection of ``(x0, y0)`` onto ``Fix T = Z x K``.

    Preconditions: scaled isometry, paramonotone ``A`` and ``B``, and
    ``K ∩ ker L^T`` nonempty (certified exactly or by ``witness``).
    """
    _check_scaled_isometry(t)
    if not (t.A.paramonotone and t.B.paramonotone):
        raise ValueError("requires paramonotone A and B")
    if not K_meets_kernel(ctx, witness):
        raise ValueError("requires K ∩ ker L^T to be nonempty")
    c = ctx if ctx.rho == t.sigma else ctx.with_rho(t.sigma)
    u0 = np.asarray(x0, dtype=float) - t.sigma * (t.Lt @ np.asarray(y0, dtype=float))
    x = proj_Z(c, u0)
    s = proj_Z_minus_rhoLK(c, u0)
    y = t.Binv.resolve(t.tau, 2.0 * t.tau * (t.L @ x) - t.tau * (t.L @ s))
    return x, y


def scaled_isometry_pushforward_projection(L, rho: float, V: S.SetDesc, x, tol: float = 1e-9) -> np.ndarray:
    """``P_{rho L^T V}(x) = rho L^T P_V(L x / rho)`` when ``L L^T = Id``."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    dev = np.abs(L @ L.T - np.eye(L.shape[0])).max(initial=0.0)
    if dev > tol:
        raise ValueError(f"L^T must be an isometry (||L L^T - Id|| = {dev:.3e})")
    if rho == 0:
        raise ValueError("rho must be nonzero")
    x = np.asarray(x, dtype=float)
    return rho * (L.T @ V.project(L @ x / rho))
