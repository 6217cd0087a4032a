"""Regenerate the JSON problem specs shipped in ``src/pdsplit/data``."""

import json
from pathlib import Path

import numpy as np

from pdsplit import instances as I
from pdsplit import operators as ops
from pdsplit.problem import triple_to_json

OUT = Path(__file__).resolve().parents[1] / "src" / "pdsplit" / "data"


def write(name, obj):
    path = OUT / name
    path.write_text(json.dumps(obj, indent=2) + "\n")
    print("wrote", path)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write("zero.json", {
        "A": ops.Zero(2).to_json(), "L": np.eye(2).tolist(), "B": ops.Zero(2).to_json(),
        "sigma": 1.0, "tau": 1.0,
    })
    write("skew.json", triple_to_json(I.skew().triple))
    desk = I.lasso_desk()
    write("lasso.json", {"lasso": {
        "L": desk.extra["L"].tolist(), "b": desk.extra["b"].tolist(), "lambda": float(desk.extra["lam"]),
    }})
    write("dr.json", triple_to_json(I.dr_subspaces().triple))
    write("isometry.json", triple_to_json(I.subspace_isometry().triple))
    write("product.json", triple_to_json(I.three_boxes().triple))
    bf = I.box_feasibility()
    write("feasibility.json", {"U": bf.extra["U"].to_json(), "V": bf.extra["V"].to_json(), "L": np.eye(2).tolist()})


if __name__ == "__main__":
    main()
