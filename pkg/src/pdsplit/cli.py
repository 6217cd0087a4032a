"""``pdsplit`` command line: solve, verify, factor, lasso, feasibility.

Exit codes: 0 success, 1 failed verification, 2 malformed input,
3 non-convergence (artifacts are still written), 4 PSD failure.
Logging level comes from ``PDSPLIT_LOG`` (error, info or debug).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import fenchel
from . import sets as S
from . import solution_sets as ss
from .linalg import NotPSDError, operator_norm
from .problem import saddle_residual, triple_from_json
from .splitting import (
    build_factor,
    dump_json,
    iterate,
    trace_summary,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_MALFORMED = 2
EXIT_NOT_CONVERGED = 3
EXIT_NOT_PSD = 4

BUNDLED = ("zero", "skew", "lasso", "dr", "isometry", "product", "feasibility")

log = logging.getLogger("pdsplit")


class InputError(Exception):
    """Malformed or unreadable input; reported with exit code 2."""


@dataclass
class RunConfig:
    subcommand: str
    spec: Optional[str] = None
    sigma: Optional[float] = None
    tau: Optional[float] = None
    tol: float = 1e-9
    max_iter: int = 100_000
    seed: int = 42
    out: Optional[str] = None
    only: Optional[list] = None
    kind: str = "general"
    method: str = "sqrt"
    L_file: Optional[str] = None
    b_file: Optional[str] = None
    lam: Optional[float] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("--tol must be positive")
        if self.max_iter < 1:
            raise InputError("--max-iter must be at least 1")


# --- input helpers --------------------------------------------------------


def _load_spec(spec: Optional[str]) -> dict:
    if spec is None:
        raise InputError("--spec is required")
    path = Path(spec)
    try:
        if path.exists():
            text = path.read_text()
        elif spec.removesuffix(".json") in BUNDLED:
            text = resources.files("pdsplit.data").joinpath(spec.removesuffix(".json") + ".json").read_text()
        else:
            raise InputError(f"spec file not found: {spec}")
    except OSError as exc:
        raise InputError(f"cannot read {spec}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{spec}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise InputError(f"{spec}: top level must be a JSON object")
    return obj


def _parse_triple(obj: dict, cfg: RunConfig):
    try:
        if "lasso" in obj:
            L, b, lam = _lasso_fields(obj["lasso"])
            t, f, g = fenchel.lasso_instance(L, b, lam)
            extra = (f, g, L)
        else:
            t = triple_from_json(obj)
            extra = None
        if cfg.sigma is not None or cfg.tau is not None:
            t = t.with_steps(cfg.sigma if cfg.sigma is not None else t.sigma, cfg.tau if cfg.tau is not None else t.tau)
    except KeyError as exc:
        raise InputError(f"spec field error: {exc.args[0]}") from exc
    except (ValueError, TypeError, IndexError) as exc:
        raise InputError(f"spec error: {exc}") from exc
    return t, extra


def _lasso_fields(block: dict):
    for key in ("L", "b", "lambda"):
        if key not in block:
            raise KeyError(f"missing field 'lasso.{key}'")
    return (np.atleast_2d(np.asarray(block["L"], dtype=float)),
            np.atleast_1d(np.asarray(block["b"], dtype=float)),
            float(block["lambda"]))


def _read_csv_matrix(path: str) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        data = [[float(c) for c in row] for row in rows]
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from exc
    if not data or len({len(r) for r in data}) != 1:
        raise InputError(f"{path}: rows must be nonempty and of equal length")
    return np.array(data)


def _out_dir(cfg: RunConfig) -> Optional[Path]:
    if cfg.out is None:
        return None
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_csv_matrix(M: np.ndarray, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(M):
            w.writerow([format(float(v), ".17g") for v in row])


def _emit(obj: dict, cfg: RunConfig, name: str) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))
    out = _out_dir(cfg)
    if out is not None:
        dump_json(obj, out / name)


# --- subcommands ----------------------------------------------------------


def cmd_solve(cfg: RunConfig) -> int:
    obj = _load_spec(cfg.spec)
    t, extra = _parse_triple(obj, cfg)
    trace = iterate(t, "full", max_iter=cfg.max_iter, tol=cfg.tol, keep_iterates=cfg.out is not None)
    summary = trace_summary(trace)
    summary.update({
        "x": trace.x.tolist(),
        "y": trace.y.tolist(),
        "saddle_residual": float(saddle_residual(t, trace.x, trace.y)),
        "diverged": bool(trace.diverged),
    })
    if extra is not None:
        f, g, L = extra
        mu = fenchel.primal_value(f, g, L, trace.x)
        mu_star = fenchel.dual_value(f, g, L, trace.y)
        summary.update({"mu": mu, "mu_star": mu_star, "gap": mu + mu_star})
    out = _out_dir(cfg)
    if out is not None:
        write_trace_csv(trace, out / "trace.csv")
        dump_json(summary, out / "summary.json")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


def cmd_verify(cfg: RunConfig) -> int:
    from .checks import CHECKS, run_checks

    if cfg.only:
        unknown = [n for n in cfg.only if n not in CHECKS]
        if unknown:
            raise InputError(f"unknown check(s): {', '.join(unknown)}; available: {', '.join(CHECKS)}")
    results = run_checks(cfg.seed, cfg.only)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}", file=sys.stderr)
    report = {"seed": cfg.seed, "passed": all(r.passed for r in results), "checks": [r.to_json() for r in results]}
    _emit(report, cfg, "verify.json")
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


def cmd_factor(cfg: RunConfig) -> int:
    obj = _load_spec(cfg.spec)
    base, _ = _parse_triple(obj, RunConfig("factor", tol=cfg.tol, max_iter=cfg.max_iter))
    sigma = cfg.sigma if cfg.sigma is not None else base.sigma
    tau = cfg.tau if cfg.tau is not None else base.tau
    excess = sigma * tau * base.norm_L ** 2 - 1.0
    if excess > 1e-12:
        # M = [[I/sigma, -L^T], [-L, I/tau]] has a negative eigenvalue
        print(f"PSD failure: sigma*tau*||L||^2 - 1 = {excess:.6g} > 0", file=sys.stderr)
        return EXIT_NOT_PSD
    t = base.with_steps(sigma, tau)
    try:
        f = build_factor(t, cfg.kind, cfg.method)
    except NotPSDError as exc:
        print(f"PSD failure: {exc}", file=sys.stderr)
        return EXIT_NOT_PSD
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    cert = {"kind": f.kind, "method": cfg.method, "certificate": f.certificate(t), "z": f.z,
            "R_present": f.R is not None}
    out = _out_dir(cfg)
    if out is not None:
        _write_csv_matrix(f.C, out / "C.csv")
        if f.R is not None:
            _write_csv_matrix(f.R, out / "R.csv")
        dump_json(cert, out / "certificate.json")
    print(json.dumps(cert, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_lasso(cfg: RunConfig) -> int:
    if (cfg.L_file is None) != (cfg.b_file is None):
        raise InputError("--L-file and --b-file must be given together")
    if cfg.L_file is not None:
        L = _read_csv_matrix(cfg.L_file)
        b = _read_csv_matrix(cfg.b_file).ravel()
        if b.size != L.shape[0]:
            raise InputError(f"b has {b.size} entries but L has {L.shape[0]} rows")
    else:
        rng = np.random.default_rng(cfg.seed)
        L = rng.standard_normal((5, 10))
        b = rng.standard_normal(5)
    lam = cfg.lam if cfg.lam is not None else 0.1 * float(np.abs(L.T @ b).max())
    if not lam > 0:
        raise InputError("--lambda must be positive")
    _, f, g = fenchel.lasso_instance(L, b, lam)
    step = 0.95 / operator_norm(L)
    v = fenchel.total_duality_check(f, g, L, cfg.sigma or step, cfg.tau or step, tol=1e-7,
                                    max_iter=cfg.max_iter, seed=cfg.seed)
    Z = fenchel.lasso_solution_set(L, b, lam, v.y)
    report = {"k": v.y.tolist(), "Z_description": Z.to_json(), "mu": v.mu, "mu_star": v.mu_star,
              "gap": v.gap, "lambda": lam, "total": v.total}
    _emit(report, cfg, "lasso.json")
    return EXIT_OK if v.converged else EXIT_NOT_CONVERGED


def cmd_feasibility(cfg: RunConfig) -> int:
    obj = _load_spec(cfg.spec)
    try:
        for key in ("U", "V", "L"):
            if key not in obj:
                raise KeyError(f"missing field {key!r}")
        U = S.from_json(obj["U"])
        V = [S.from_json(v) for v in obj["V"]] if isinstance(obj["V"], list) else S.from_json(obj["V"])
        L = np.atleast_2d(np.asarray(obj["L"], dtype=float))
        Z, K = ss.feasibility_sets(U, V, L)
    except ss.InfeasibleError as exc:
        cert = None if exc.certificate is None else exc.certificate.tolist()
        _emit({"feasible": False, "certificate": cert, "message": str(exc)}, cfg, "feasibility.json")
        return EXIT_MALFORMED
    except KeyError as exc:
        raise InputError(f"spec field error: {exc.args[0]}") from exc
    except (ValueError, TypeError) as exc:
        raise InputError(f"spec error: {exc}") from exc
    _emit({"feasible": True, "Z": Z.to_json(), "K": K.to_json(),
           "zero_in_K": K.contains(np.zeros(K.dim))}, cfg, "feasibility.json")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "factor": cmd_factor,
    "lasso": cmd_lasso,
    "feasibility": cmd_feasibility,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdsplit", description="Primal-dual splitting toolkit.")
    sub = p.add_subparsers(dest="subcommand", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help=f"problem JSON path or bundled name ({', '.join(BUNDLED)})")
    common.add_argument("--sigma", type=float)
    common.add_argument("--tau", type=float)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--max-iter", type=int, default=100_000)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", help="output directory")
    sub.add_parser("solve", parents=[common], help="run Chambolle-Pock and write a trace")
    v = sub.add_parser("verify", parents=[common], help="run the property battery")
    v.add_argument("--only", action="append", help="run only this check (repeatable)")
    f = sub.add_parser("factor", parents=[common], help="write a factor C with C C^T = M")
    f.add_argument("--kind", default="general", choices=["general", "scaled_isometry", "douglas_rachford"])
    f.add_argument("--method", default="sqrt", choices=["sqrt", "cholesky"])
    lz = sub.add_parser("lasso", parents=[common], help="solve a LASSO problem and recover its solution set")
    lz.add_argument("--L-file", dest="L_file")
    lz.add_argument("--b-file", dest="b_file")
    lz.add_argument("--lambda", dest="lam", type=float)
    sub.add_parser("feasibility", parents=[common], help="closed-form Z and K for N_U, N_V problems")
    return p


def _setup_logging() -> None:
    level = os.environ.get("PDSPLIT_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_MALFORMED if exc.code else EXIT_OK
    kwargs = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    try:
        cfg = RunConfig(**kwargs)
        return COMMANDS[cfg.subcommand](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except NotPSDError as exc:
        print(f"PSD failure: {exc}", file=sys.stderr)
        return EXIT_NOT_PSD


if __name__ == "__main__":
    sys.exit(main())
