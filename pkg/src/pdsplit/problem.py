"""Problem triples ``(A, L, B)`` for ``0 in A x + L^T B L x``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import operators as ops
from .linalg import adjoint, operator_norm

STEP_TOL = 1e-10

__all__ = ["Triple", "SaddleCandidate", "dual", "saddle_residual", "product_triple", "triple_from_json", "triple_to_json"]


@dataclass(frozen=True, eq=False)
class Triple:
    """Primal problem ``(A, L, B)`` with Chambolle-Pock step sizes.

    ``blocks`` records the row split of ``L`` when the triple came from
    :func:`product_triple`.
    """

    A: ops.MonotoneOp
    L: np.ndarray
    B: ops.MonotoneOp
    sigma: float
    tau: float
    blocks: Optional[tuple] = field(default=None)

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        if L.ndim != 2:
            raise ValueError("L must be a matrix")
        object.__setattr__(self, "L", L)
        m, n = L.shape
        if self.A.dim != n or self.B.dim != m:
            raise ValueError(f"dimension mismatch: A on R^{self.A.dim}, B on R^{self.B.dim}, L is {m}x{n}")
        if not (self.sigma > 0 and self.tau > 0):
            raise ValueError("sigma and tau must be positive")
        if self.sigma * self.tau * self.norm_L ** 2 > 1 + STEP_TOL:
            raise ValueError(
                f"step sizes violate sigma*tau*||L||^2 <= 1 "
                f"(got {self.sigma * self.tau * self.norm_L ** 2:.6g})"
            )
        object.__setattr__(self, "Binv", self.B.inverse())

    @property
    def n(self) -> int:
        return self.L.shape[1]

    @property
    def m(self) -> int:
        return self.L.shape[0]

    @property
    def norm_L(self) -> float:
        cached = self.__dict__.get("_norm_L")
        if cached is None:
            cached = operator_norm(self.L)
            object.__setattr__(self, "_norm_L", cached)
        return cached

    @property
    def Lt(self) -> np.ndarray:
        cached = self.__dict__.get("_Lt")
        if cached is None:
            cached = adjoint(self.L)
            object.__setattr__(self, "_Lt", cached)
        return cached

    @property
    def block_matrices(self) -> Optional[list]:
        """``[(L_j, L_j^T)]`` for product triples, ``None`` otherwise."""
        if self.blocks is None:
            return None
        cached = self.__dict__.get("_blocks")
        if cached is None:
            rows = np.cumsum((0,) + tuple(self.blocks))
            cached = [(self.L[rows[i]:rows[i + 1]], adjoint(self.L[rows[i]:rows[i + 1]])) for i in range(len(self.blocks))]
            object.__setattr__(self, "_blocks", cached)
        return cached

    def apply_L(self, x) -> np.ndarray:
        """``L x``, computed block by block for product triples."""
        x = np.asarray(x, dtype=float)
        mats = self.block_matrices
        if mats is None:
            return self.L @ x if x.ndim == 1 else x @ self.Lt
        if x.ndim == 1:
            return np.concatenate([Mj @ x for Mj, _ in mats])
        return np.concatenate([x @ MjT for _, MjT in mats], axis=-1)

    def apply_Lt(self, y) -> np.ndarray:
        """``L^T y``; for product triples the sum over blocks ``sum_j L_j^T y_j``."""
        y = np.asarray(y, dtype=float)
        mats = self.block_matrices
        if mats is None:
            return y @ self.L
        rows = np.cumsum((0,) + tuple(self.blocks))
        return sum(y[..., rows[i]:rows[i + 1]] @ Mj for i, (Mj, _) in enumerate(mats))

    def with_steps(self, sigma: float, tau: float) -> "Triple":
        return Triple(self.A, self.L, self.B, sigma, tau, self.blocks)


@dataclass(frozen=True, eq=False)
class SaddleCandidate:
    """A primal-dual pair together with its :func:`saddle_residual`."""

    x: np.ndarray
    y: np.ndarray
    residual: float

    @classmethod
    def evaluate(cls, t: Triple, x, y) -> "SaddleCandidate":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return cls(x, y, float(saddle_residual(t, x, y)))


def dual(t: Triple) -> Triple:
    """``(A, L, B)^* = (B^{-1}, -L^T, A^{-1})``; step sizes swap."""
    return Triple(t.B.inverse(), -t.Lt, t.A.inverse(), t.tau, t.sigma)


def saddle_residual(t: Triple, x, y) -> np.ndarray | float:
    """Fixed-point defect of the primal-dual inclusions at ``(x, y)``.

    ``max(|x - J_{sigma A}(x - sigma L^T y)|, |y - J_{tau B^{-1}}(y + tau L x)|)``;
    zero exactly on the saddle set. Vectorized over leading axes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rx = x - t.A.resolve(t.sigma, x - t.sigma * (y @ t.L))
    ry = y - t.Binv.resolve(t.tau, y + t.tau * (x @ t.Lt))
    r = np.maximum(np.linalg.norm(rx, axis=-1), np.linalg.norm(ry, axis=-1))
    return float(r) if np.ndim(r) == 0 else r


def product_triple(A: ops.MonotoneOp, parts, sigma: float, tau: float) -> Triple:
    """Stack ``(L_j, B_j)`` into ``Y = Y_1 x ... x Y_n`` for ``0 in Ax + sum L_j^T B_j L_j x``."""
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one part")
    mats = [np.atleast_2d(np.asarray(Lj, dtype=float)) for Lj, _ in parts]
    if any(Mj.shape[1] != A.dim for Mj in mats):
        raise ValueError("all L_j must share the domain dimension of A")
    for Mj, (_, Bj) in zip(mats, parts):
        if Mj.shape[0] != Bj.dim:
            raise ValueError("L_j rows must match the dimension of B_j")
    L = np.vstack(mats)
    B = ops.ProductOp(tuple(Bj for _, Bj in parts))
    return Triple(A, L, B, sigma, tau, blocks=tuple(Mj.shape[0] for Mj in mats))


def triple_from_json(spec: dict) -> Triple:
    """Parse ``{"A": .., "L": .., "B": .., "sigma": .., "tau": ..}`` (optionally ``"parts"``).

    With ``"parts"`` (a list of ``{"L": .., "B": ..}``) the top-level ``L``
    and ``B`` are omitted and the product triple is built.
    """
    for key in ("A", "sigma", "tau"):
        if key not in spec:
            raise KeyError(f"missing field {key!r}")
    if "parts" in spec:
        first_L = np.atleast_2d(np.asarray(spec["parts"][0]["L"], dtype=float))
        A = ops.operator_from_json(spec["A"], first_L.shape[1])
        parts = []
        for i, part in enumerate(spec["parts"]):
            if "L" not in part or "B" not in part:
                raise KeyError(f"parts[{i}] needs fields 'L' and 'B'")
            Lj = np.atleast_2d(np.asarray(part["L"], dtype=float))
            parts.append((Lj, ops.operator_from_json(part["B"], Lj.shape[0])))
        return product_triple(A, parts, float(spec["sigma"]), float(spec["tau"]))
    for key in ("L", "B"):
        if key not in spec:
            raise KeyError(f"missing field {key!r}")
    L = np.atleast_2d(np.asarray(spec["L"], dtype=float))
    A = ops.operator_from_json(spec["A"], L.shape[1])
    B = ops.operator_from_json(spec["B"], L.shape[0])
    return Triple(A, L, B, float(spec["sigma"]), float(spec["tau"]))


def triple_to_json(t: Triple) -> dict:
    if t.blocks is not None and isinstance(t.B, ops.ProductOp):
        rows = np.cumsum((0,) + t.blocks)
        parts = [
            {"L": t.L[rows[i]:rows[i + 1]].tolist(), "B": Bj.to_json()}
            for i, Bj in enumerate(t.B.parts)
        ]
        return {"A": t.A.to_json(), "parts": parts, "sigma": t.sigma, "tau": t.tau}
    return {"A": t.A.to_json(), "L": t.L.tolist(), "B": t.B.to_json(), "sigma": t.sigma, "tau": t.tau}
