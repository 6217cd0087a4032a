"""Brute-force saddle scan on the rotation example.

Shows that Z x K is all of R^2 x R^2 while the saddle set is only the graph
of -A: the scan accepts exactly the grid points with y = -Ax.
"""

import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from pdsplit import instances as I
from pdsplit.oracle import GridSpec, grid_saddle_scan
from pdsplit.problem import saddle_residual


@dataclass
class Config:
    lo: float = -2.0
    hi: float = 2.0
    steps: int = 41
    tol: float = 1e-9


def main(cfg: Config) -> dict:
    inst = I.skew()
    A = inst.extra["A"]
    grid = GridSpec.uniform(cfg.lo, cfg.hi, cfg.steps, 2)
    found = grid_saddle_scan(inst.triple, grid, grid, tol=cfg.tol)
    dist = max((float(np.linalg.norm(c.y + A @ c.x)) for c in found), default=0.0)
    return {
        "config": asdict(cfg),
        "grid points": grid.size ** 2,
        "accepted": len(found),
        "max distance to gra(-A)": dist,
        "residual at ((1,0),(1,0))": saddle_residual(inst.triple, np.array([1.0, 0.0]), np.array([1.0, 0.0])),
    }


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    for k, v in asdict(Config()).items():
        p.add_argument(f"--{k}", type=type(v), default=v)
    print(json.dumps(main(Config(**vars(p.parse_args()))), indent=2))
