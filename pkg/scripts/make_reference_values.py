#!/usr/bin/env python3
"""Regenerate tests/_frozen.py: long-run subgradient reference objectives
for the desk-scale solver-correctness suite.

The subgradient runs are cross-checked against an independent linprog
formulation where the objective is linear-programmable (l1, per-class
l1inf) and against a re-run with a different annealing schedule otherwise;
the script refuses to write values that disagree beyond 1e-7 relative.

Usage: python scripts/make_reference_values.py
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

import oracles  # noqa: E402
from sparsemsvm.model import Dataset  # noqa: E402

CASES = [
    # name, seed, kind, lam, group_sizes (None => ungrouped)
    ("l1_a", 42, "l1", 1.0, None),
    ("l1_b", 7, "l1", 2.0, None),
    ("l1inf_a", 3, "l1inf", 1.0, [2]),
    ("l12_a", 5, "l12", 0.8, [2]),
    ("l2sq_a", 11, "l2sq", 0.7, None),
]

M, K, L = 2, 3, 5


def make_instance(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((L, M))
    labels = rng.integers(0, K, L)
    return Dataset.from_arrays(X, labels, n_classes=K)


def main():
    out = {}
    for name, seed, kind, lam, sizes in CASES:
        ds = make_instance(seed)
        groups = None
        if sizes is not None:
            groups, lo = [], 0
            for s in sizes:
                groups.append(tuple(range(lo, lo + s)))
                lo += s
        obj, _ = oracles.regularized_subgradient_reference(
            ds, kind, lam, groups=groups, n_rounds=50, steps_per_round=5000)
        if kind in ("l1", "l1inf"):
            check = oracles.regularized_lp_reference(ds, kind, lam, groups=groups)
            label = "linprog"
        elif kind == "l2sq":
            check = oracles.regularized_qp_reference(ds, lam)
            label = "slsqp-qp"
        else:
            check, _ = oracles.regularized_subgradient_reference(
                ds, kind, lam, groups=groups, n_rounds=55,
                steps_per_round=4000, delta0=0.3, seed=99)
            label = "re-run"
        rel = abs(obj - check) / max(1.0, abs(check))
        print(f"{name}: subgradient={obj:.12g}  {label}={check:.12g}  rel={rel:.2e}")
        if rel > 1e-7:
            raise SystemExit(f"{name}: cross-check disagreement {rel:.2e}")
        out[name] = dict(seed=seed, kind=kind, lam=lam, sizes=sizes,
                         objective=float(obj))

    target = pathlib.Path(__file__).resolve().parent.parent / "tests" / "_frozen.py"
    with open(target, "w") as fh:
        fh.write('"""Frozen long-run subgradient reference objectives for the\n')
        fh.write("M=2, K=3, L=5 instances; regenerate with\n")
        fh.write('scripts/make_reference_values.py."""\n\n')
        fh.write(f"TINY_DIMS = ({M}, {K}, {L})\n\n")
        fh.write("SUBGRADIENT_REFERENCES = {\n")
        for name, rec in out.items():
            fh.write(f"    {name!r}: {{\n")
            for key, value in rec.items():
                fh.write(f"        {key!r}: {value!r},\n")
            fh.write("    },\n")
        fh.write("}\n")
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
