#!/usr/bin/env python3
"""Leukemia benchmark: train/test errors and per-class nonzero counts for
every solver x regularizer combination, each at its best alpha from a grid
search on test accuracy (trial-and-error protocol).

Needs the prepared CSVs from scripts/fetch_leukemia.py (default location
data/leukemia/). Runtime is a few minutes per solver/regularizer pair on a
desktop.

Usage: python scripts/run_leukemia.py [--data-dir data/leukemia]
           [--alphas 0.001,...,1000] [--solvers hinge,square,logit,one-vs-all]
"""

import argparse
import pathlib
import sys
import time

from sparsemsvm.data import load_dense_csv
from sparsemsvm.evaluate import count_nonzeros, evaluate_model
from sparsemsvm.model import BlockStructure, RegularizerSpec
from sparsemsvm.solvers import SOLVERS, SolverConfig
from sparsemsvm.linop import operator_norm

SOLVER_IDS = {"hinge": "fbpd-reg", "hinge-con": "fbpd-con",
              "square": "fista-square", "logit": "fb-logit",
              "one-vs-all": "one-vs-all"}
REGS = ["l2sq", "l1", "l12", "l1inf"]
BLOCK_GENES = 5


def best_over_grid(solver_id, spec, train, test, alphas, tol, max_iter, norm_T):
    best = None
    for alpha in alphas:
        cfg = SolverConfig(max_iter=max_iter, rel_tol=tol, norm_T=norm_T)
        if solver_id == "fbpd-con":
            cfg.eta = alpha * train.n_samples
        else:
            cfg.lam = 1.0 / alpha
        t0 = time.perf_counter()
        report = SOLVERS[solver_id](train, spec, cfg)
        elapsed = time.perf_counter() - t0
        ev = evaluate_model(report.model, test, spec, lam=cfg.lam)
        entry = (ev.error_count, alpha, report, ev, elapsed)
        if best is None or ev.error_count < best[0]:
            best = entry
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--data-dir", default="data/leukemia")
    ap.add_argument("--alphas", default="0.001,0.01,0.1,1,10,100,1000")
    ap.add_argument("--solvers", default="hinge,square,logit,one-vs-all")
    ap.add_argument("--regs", default=",".join(REGS))
    ap.add_argument("--tol", type=float, default=1e-5)
    ap.add_argument("--max-iter", type=int, default=30000)
    ap.add_argument("--out", default=None, help="optional CSV output path")
    args = ap.parse_args()

    data_dir = pathlib.Path(args.data_dir)
    train_p = data_dir / "leukemia_train.csv"
    test_p = data_dir / "leukemia_test.csv"
    if not train_p.exists() or not test_p.exists():
        raise SystemExit(f"prepared data not found under {data_dir}; run "
                         "scripts/fetch_leukemia.py first")
    train = load_dense_csv(train_p)
    test = load_dense_csv(test_p)
    print(f"train: {train.n_samples} x {train.n_features}, K={train.n_classes}; "
          f"test: {test.n_samples}")
    alphas = [float(a) for a in args.alphas.split(",")]
    norm_T = operator_norm(train).value

    rows = []
    for solver_name in args.solvers.split(","):
        solver_id = SOLVER_IDS[solver_name]
        for reg in args.regs.split(","):
            blocks = None
            if reg in ("l12", "l1inf"):
                blocks = BlockStructure.contiguous(train.n_features, BLOCK_GENES)
            spec = RegularizerSpec(reg, blocks)
            errors, alpha, report, ev, elapsed = best_over_grid(
                solver_id, spec, train, test, alphas, args.tol,
                args.max_iter, norm_T)
            nz = "+".join(str(int(c)) for c in count_nonzeros(report.model))
            print(f"{solver_name:<11} {reg:<6} errors {errors}/{test.n_samples}"
                  f"  nonzeros {nz}  alpha* {alpha:g}  "
                  f"({report.iterations} its, {elapsed:.1f}s)")
            rows.append((solver_name, reg, errors, nz, alpha))
            sys.stdout.flush()

    if args.out:
        with open(args.out, "w") as fh:
            fh.write("solver,regularizer,errors,nonzeros,alpha\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
