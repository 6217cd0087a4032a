"""LASSO solved by Chambolle-Pock, followed by solution-set recovery.

Sweeps lambda as a fraction of ||L^T b||_inf and reports the duality gap, the
dimension of the recovered solution set and the support of the limit.
"""

import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from pdsplit import fenchel
from pdsplit import sets as S


@dataclass
class Config:
    n: int = 10
    m: int = 5
    seed: int = 42
    ratios: str = "0.05,0.1,0.3,0.6,1.01"


def main(cfg: Config) -> list:
    rng = np.random.default_rng(cfg.seed)
    L = rng.standard_normal((cfg.m, cfg.n))
    b = rng.standard_normal(cfg.m)
    top = float(np.abs(L.T @ b).max())
    rows = []
    for r in (float(s) for s in cfg.ratios.split(",")):
        lam = r * top
        t, f, g = fenchel.lasso_instance(L, b, lam)
        v = fenchel.total_duality_check(f, g, L, t.sigma, t.tau, n_perturb=0)
        Z = fenchel.lasso_solution_set(L, b, lam, v.y)
        rows.append({
            "ratio": r,
            "lambda": lam,
            "objective": v.mu,
            "gap": v.gap,
            "iterations": v.iterations,
            "support": np.flatnonzero(np.abs(v.x) > 1e-8).tolist(),
            "solution set": type(Z).__name__,
            "solution set dim": S.direction_basis(Z).shape[1],
        })
    return rows


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    for k, v in asdict(Config()).items():
        p.add_argument(f"--{k}", type=type(v), default=v)
    print(json.dumps(main(Config(**vars(p.parse_args()))), indent=2))
