"""Chambolle-Pock operator, its preconditioned resolvent form and the reduced
operator built from a factor ``C C^T = M``.

With the preconditioner

    M = [[Id/sigma, -L^T], [-L, Id/tau]]

the Chambolle-Pock step equals ``(A + M)^{-1} M`` and is firmly
nonexpansive in the ``M``-seminorm. Any factor ``C`` gives the reduced
operator ``C^T (A + M)^{-1} C``, which is classically firmly nonexpansive.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .linalg import cholesky_psd, principal_sqrt_psd
from .problem import Triple

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000
WINDOW = 5
DIVERGENCE_BOUND = 1e8

__all__ = [
    "Factor",
    "IterTrace",
    "cp_step",
    "preconditioner_apply",
    "preconditioner_matrix",
    "resolvent_AM",
    "build_factor",
    "reduced_step",
    "m_seminorm",
    "iterate",
    "recover_from_reduced",
    "write_trace_csv",
    "trace_summary",
]


def cp_step(t: Triple, x, y):
    """One Chambolle-Pock step; vectorized over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xp = t.A.resolve(t.sigma, x - t.sigma * t.apply_Lt(y))
    yp = t.Binv.resolve(t.tau, y + t.tau * t.apply_L(2.0 * xp - x))
    return xp, yp


def preconditioner_apply(t: Triple, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x / t.sigma - y @ t.L, -(x @ t.Lt) + y / t.tau


def preconditioner_matrix(t: Triple) -> np.ndarray:
    n, m = t.n, t.m
    return np.block([[np.eye(n) / t.sigma, -t.Lt], [-t.L, np.eye(m) / t.tau]])


def resolvent_AM(t: Triple, x, y):
    """``(A + M)^{-1}(x, y)``.

    The second block is ``J_{tau B^{-1}}(2 tau L p + tau y)`` with
    ``p = J_{sigma A}(sigma x)``; ``L`` must act on ``p`` for the domains
    to match when ``X != Y``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = t.A.resolve(t.sigma, t.sigma * x)
    q = t.Binv.resolve(t.tau, 2.0 * t.tau * (p @ t.Lt) + t.tau * y)
    return p, q


def m_seminorm(t: Triple, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mx, my = preconditioner_apply(t, x, y)
    q = np.sum(x * mx, axis=-1) + np.sum(y * my, axis=-1)
    out = np.sqrt(np.maximum(q, 0.0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class Factor:
    """``C`` with ``C C^T = M``; ``kind`` is general, scaled_isometry or douglas_rachford."""

    C: np.ndarray
    kind: str
    R: Optional[np.ndarray] = None
    n: int = 0

    @property
    def z(self) -> int:
        return self.C.shape[1]

    def apply(self, w):
        """``C w`` split into ``(x, y)``."""
        v = np.asarray(w, dtype=float) @ self.C.T
        return v[..., : self.n], v[..., self.n:]

    def apply_adjoint(self, x, y):
        v = np.concatenate([np.asarray(x, dtype=float), np.asarray(y, dtype=float)], axis=-1)
        return v @ self.C

    def certificate(self, t: Triple) -> float:
        """``||C C^T - M||`` (spectral norm)."""
        return float(np.linalg.norm(self.C @ self.C.T - preconditioner_matrix(t), 2))


def build_factor(t: Triple, kind: str = "general", method: str = "sqrt", tol: float = 1e-10) -> Factor:
    n, m = t.n, t.m
    s, r = t.sigma, t.tau
    if kind == "general":
        S = np.eye(m) - s * r * (t.L @ t.Lt)
        R = principal_sqrt_psd(S, tol) if method == "sqrt" else cholesky_psd(S, tol)
        C = np.block([[np.eye(n) / np.sqrt(s), np.zeros((n, m))], [-np.sqrt(s) * t.L, R / np.sqrt(r)]])
        return Factor(C, kind, R, n)
    if kind == "scaled_isometry":
        dev = np.abs(s * r * (t.L @ t.Lt) - np.eye(m)).max(initial=0.0)
        if dev > tol * 1e2:
            raise ValueError(f"scaled isometry requires sigma*tau*L L^T = Id (deviation {dev:.3e})")
        C = np.vstack([np.eye(n) / np.sqrt(s), -np.sqrt(s) * t.L])
        return Factor(C, kind, None, n)
    if kind == "douglas_rachford":
        if m != n or not np.array_equal(t.L, np.eye(n)) or s != 1.0 or r != 1.0:
            raise ValueError("Douglas-Rachford factor requires L = Id and sigma = tau = 1")
        return Factor(np.vstack([np.eye(n), -np.eye(n)]), kind, None, n)
    raise ValueError(f"unknown factor kind {kind!r}")


def reduced_step(t: Triple, f: Factor, w):
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != f.z:
        raise ValueError(f"dimension mismatch: factor codomain is {f.z}, got {w.shape[-1]}")
    return f.apply_adjoint(*resolvent_AM(t, *f.apply(w)))


def recover_from_reduced(t: Triple, f: Factor, w):
    """Primal-dual point ``(A + M)^{-1} C w`` attached to a reduced iterate."""
    return resolvent_AM(t, *f.apply(w))


@dataclass
class IterTrace:
    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    diverged: bool = False
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    mode: str = "full"

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1]) if self.residuals else 0.0


def iterate(
    t: Triple,
    mode: Union[str, Factor] = "full",
    start=None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    keep_iterates: bool = True,
    window: int = WINDOW,
) -> IterTrace:
    """Fixed-point iteration of the Chambolle-Pock or reduced operator.

    ``mode`` is ``"full"`` or a :class:`Factor` (reduced mode). ``start`` is
    ``(x, y)`` in full mode and ``w`` in reduced mode (zeros by default).
    Stops once the mean of the last ``window`` step lengths (``M``-seminorm
    in full mode, Euclidean in reduced mode) is at most ``tol``; a start
    that does not move at all is reported as converged at iteration 0.
    Running out of iterations is not an error.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    trace = IterTrace(mode="full" if isinstance(mode, str) else "reduced")
    if isinstance(mode, str):
        if mode != "full":
            raise ValueError(f"unknown mode {mode!r}")
        if start is None:
            x, y = np.zeros(t.n), np.zeros(t.m)
        else:
            x, y = (np.asarray(v, dtype=float).copy() for v in start)
        if keep_iterates:
            trace.iterates.append((x, y))
        for k in range(1, max_iter + 1):
            xp, yp = cp_step(t, x, y)
            r = m_seminorm(t, xp - x, yp - y)
            if k == 1 and r == 0.0 and np.array_equal(xp, x) and np.array_equal(yp, y):
                trace.converged = True
                trace.iterations = 0
                break
            x, y = xp, yp
            trace.residuals.append(r)
            if keep_iterates:
                trace.iterates.append((x, y))
            trace.iterations = k
            if _done(trace.residuals, tol, window):
                trace.converged = True
                break
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))) or max(
                np.abs(x).max(initial=0), np.abs(y).max(initial=0)
            ) > DIVERGENCE_BOUND:
                trace.diverged = True
                break
        trace.x, trace.y = x, y
    else:
        f = mode
        w = np.zeros(f.z) if start is None else np.asarray(start, dtype=float).copy()
        if keep_iterates:
            trace.iterates.append(w)
        for k in range(1, max_iter + 1):
            wp = reduced_step(t, f, w)
            r = float(np.linalg.norm(wp - w))
            if k == 1 and np.array_equal(wp, w):
                trace.converged = True
                trace.iterations = 0
                break
            w = wp
            trace.residuals.append(r)
            if keep_iterates:
                trace.iterates.append(w)
            trace.iterations = k
            if _done(trace.residuals, tol, window):
                trace.converged = True
                break
            if not np.all(np.isfinite(w)) or np.abs(w).max(initial=0) > DIVERGENCE_BOUND:
                trace.diverged = True
                break
        trace.w = w
        trace.x, trace.y = recover_from_reduced(t, f, w)
    log.debug("iterate: mode=%s iterations=%d converged=%s", trace.mode, trace.iterations, trace.converged)
    return trace


def _done(residuals, tol, window):
    if residuals[-1] > tol:
        return False
    tail = residuals[-window:]
    return sum(tail) / len(tail) <= tol


def write_trace_csv(trace: IterTrace, path) -> None:
    """Columns ``iter, residual, x..., y...`` at 17 significant digits."""
    if trace.mode == "full":
        pts = [np.concatenate(p) for p in trace.iterates]
        n = len(trace.iterates[0][0]) if trace.iterates else 0
        m = len(trace.iterates[0][1]) if trace.iterates else 0
        header = ["iter", "residual"] + [f"x{i}" for i in range(n)] + [f"y{j}" for j in range(m)]
    else:
        pts = list(trace.iterates)
        z = len(pts[0]) if pts else 0
        header = ["iter", "residual"] + [f"w{i}" for i in range(z)]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for k, p in enumerate(pts):
            res = trace.residuals[k - 1] if k >= 1 else float("nan")
            out.writerow([k, _fmt(res)] + [_fmt(v) for v in p])


def _fmt(v) -> str:
    return format(float(v), ".17g")


def trace_summary(trace: IterTrace) -> dict:
    return {
        "converged": bool(trace.converged),
        "iterations": int(trace.iterations),
        "final_residual": trace.final_residual,
    }


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
