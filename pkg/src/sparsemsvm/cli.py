"""Command-line driver: train, evaluate, sweep over the regularization
level, and benchmark solver convergence.

Exit codes: 0 on success, 2 when a solve finished without reaching the
stopping tolerance (results are still written), 1 on data or file errors,
2 on usage errors (argparse convention).
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import data as datamod
from .data import DataFormatError, load_standardize_stats, save_standardize_stats
from .evaluate import evaluate_model
from .linop import operator_norm
from .model import BlockStructure, RegularizerSpec
from .persist import PersistedModel, encode_groups, load_model, save_model
from .solvers import CONSTRAINED_SOLVERS, SOLVERS, SolverConfig

DEFAULT_ALPHAS = "0.001,0.01,0.1,1,10,100,1000"


def _fmt(v):
    return format(float(v), ".17g")


def _load_dataset(path, fmt):
    if fmt == "csv":
        return datamod.load_dense_csv(path)
    return datamod.load_sparse_svmlight(path)


def _parse_blocks(arg, n_features, mode):
    """`--blocks` value: a group size (contiguous runs) or a file with one
    group of 1-based feature indices per line."""
    try:
        size = int(arg)
    except ValueError:
        groups = []
        with open(arg) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    groups.append(np.array([int(t) - 1 for t in line.split()]))
        blocks = BlockStructure(tuple(groups), mode=mode)
        blocks.validate(n_features)
        return blocks
    return BlockStructure.contiguous(n_features, size, mode=mode)


def _build_spec(args, n_features):
    blocks = None
    if args.reg in ("l12", "l1inf"):
        blocks = _parse_blocks(args.blocks, n_features, args.group)
    return RegularizerSpec(args.reg, blocks)


def _build_config(args, dataset, norm_T=None):
    cfg = SolverConfig(max_iter=args.max_iter, rel_tol=args.tol, norm_T=norm_T)
    if args.solver in CONSTRAINED_SOLVERS:
        cfg.eta = args.alpha * dataset.n_samples
    else:
        cfg.lam = 1.0 / args.alpha
    return cfg


def _solver_args(p):
    p.add_argument("--solver", required=True, choices=sorted(SOLVERS))
    p.add_argument("--reg", default="l1", choices=["l1", "l12", "l1inf", "l2sq"])
    p.add_argument("--blocks", default="1",
                   help="group size for mixed norms, or a file of 1-based index groups")
    p.add_argument("--group", default="per-class", choices=["per-class", "cross-class"])
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)


def _data_args(p):
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "svmlight"])


# ---------------------------------------------------------------------------

def cmd_train(args):
    dataset = _load_dataset(args.data, args.format)
    stats = None
    if args.standardize:
        dataset, stats = datamod.standardize(dataset)
    spec = _build_spec(args, dataset.n_features)
    cfg = _build_config(args, dataset)
    report = SOLVERS[args.solver](dataset, spec, cfg)

    block_size = groups_text = None
    if spec.needs_blocks:
        if args.blocks.isdigit():
            block_size = int(args.blocks)
        else:
            groups_text = encode_groups(spec.blocks)
    pm = PersistedModel(
        model=report.model, reg_kind=args.reg,
        block_size=block_size, groups_text=groups_text,
        group_mode=args.group, solver=args.solver, alpha=args.alpha,
        lam=cfg.lam, eta=cfg.eta, iterations=report.iterations,
        converged=report.converged, rel_change=report.final_rel_change)
    save_model(args.out, pm)
    if stats is not None:
        save_standardize_stats(args.out + ".stats", stats)

    ev = evaluate_model(report.model, dataset, spec, lam=cfg.lam, threshold=args.threshold)
    lines = [
        f"solver {args.solver}",
        f"data {args.data}",
        f"alpha {_fmt(args.alpha)}",
        f"iterations {report.iterations}",
        f"converged {int(report.converged)}",
        f"rel_change {_fmt(report.final_rel_change)}",
        f"g_value {_fmt(report.g_value)}",
        f"hinge_sum {_fmt(report.hinge_sum)}",
        f"objective {_fmt(report.primal_objective)}",
        f"train_errors {ev.error_count}",
        f"train_error_rate {_fmt(ev.error_rate)}",
        "nonzeros " + "+".join(str(int(c)) for c in ev.nonzeros_per_class),
    ]
    if report.constraint_violation is not None:
        lines.insert(9, f"constraint_violation {_fmt(report.constraint_violation)}")
    text = "\n".join(lines) + "\n"
    with open(args.out + ".report.txt", "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0 if report.converged else 2


def cmd_eval(args):
    pm = load_model(args.model)
    dataset = _load_dataset(args.data, args.format)
    try:
        stats = load_standardize_stats(args.model + ".stats")
    except FileNotFoundError:
        stats = None
    if stats is not None:
        dataset = datamod.apply_standardize(dataset, stats)
    spec = pm.regularizer_spec()
    ev = evaluate_model(pm.model, dataset, spec, lam=pm.lam, threshold=args.threshold)
    nz = "+".join(str(int(c)) for c in ev.nonzeros_per_class)
    groups = "" if ev.nonzero_groups is None else str(ev.nonzero_groups)
    if args.emit == "csv":
        sys.stdout.write("errors,error_rate,hinge_sum,g_value,total,nonzeros,nonzero_groups\n")
        sys.stdout.write(",".join([
            str(ev.error_count), _fmt(ev.error_rate), _fmt(ev.hinge_sum),
            _fmt(ev.g_value), _fmt(ev.total), nz, groups]) + "\n")
    else:
        sys.stdout.write(f"errors {ev.error_count}/{dataset.n_samples}\n")
        sys.stdout.write(f"error_rate {_fmt(ev.error_rate)}\n")
        sys.stdout.write(f"hinge_sum {_fmt(ev.hinge_sum)}\n")
        sys.stdout.write(f"g_value {_fmt(ev.g_value)}\n")
        sys.stdout.write(f"objective {_fmt(ev.total)}\n")
        sys.stdout.write(f"nonzeros {nz}\n")
        if groups:
            sys.stdout.write(f"nonzero_groups {groups}\n")
    return 0


def cmd_sweep(args):
    pool = _load_dataset(args.data, args.format)
    test_fixed = _load_dataset(args.test, args.format) if args.test else None
    alphas = [float(a) for a in args.alphas.split(",") if a]
    spec = _build_spec(args, pool.n_features)

    # repetition r uses seed + r; splits and operator norms are shared
    # across the alpha grid
    splits = []
    for rep in range(args.repeats):
        if args.train_per_class is not None:
            train, rest = datamod.split(pool, per_class=args.train_per_class,
                                        seed=args.seed + rep)
            test = test_fixed if test_fixed is not None else rest
        else:
            train, test = pool, (test_fixed if test_fixed is not None else pool)
        if test is None:
            raise ValueError("sweep needs a test set: pass --test or leave samples out")
        splits.append((train, test, operator_norm(train).value))

    rows = []
    all_converged = True
    for alpha in alphas:
        errors, rates, nonzeros, times = [], [], [], []
        for train, test, norm_T in splits:
            argsolver = argparse.Namespace(**vars(args), alpha=alpha)
            cfg = _build_config(argsolver, train, norm_T=norm_T)
            t0 = time.perf_counter()
            report = SOLVERS[args.solver](train, spec, cfg)
            times.append(time.perf_counter() - t0)
            all_converged &= report.converged
            ev = evaluate_model(report.model, test, spec, lam=cfg.lam,
                                threshold=args.threshold)
            errors.append(ev.error_count)
            rates.append(ev.error_rate)
            nonzeros.append(int(ev.nonzeros_per_class.sum()))
        row = [_fmt(alpha), _fmt(np.mean(errors)), _fmt(np.mean(rates)),
               _fmt(np.mean(nonzeros))]
        if args.timing:
            row.append(_fmt(np.mean(times)))
        rows.append(",".join(row))

    header = "alpha,mean_errors,mean_error_rate,mean_nonzeros"
    if args.timing:
        header += ",mean_time_s"
    out = "\n".join([header] + rows) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    sys.stdout.write(out)
    return 0 if all_converged else 2


def cmd_bench(args):
    dataset = _load_dataset(args.data, args.format)
    solvers = [s for s in args.solvers.split(",") if s]
    unknown = [s for s in solvers if s not in SOLVERS]
    if unknown:
        raise ValueError(f"unknown solver(s): {', '.join(unknown)}")
    spec = _build_spec(args, dataset.n_features)
    norm_T = operator_norm(dataset).value

    lines = ["solver,iteration,rel_distance" + (",time_s" if args.timing else "")]
    all_converged = True
    for name in solvers:
        argsolver = argparse.Namespace(**vars(args), solver=name)
        ref_cfg = _build_config(argsolver, dataset, norm_T=norm_T)
        ref_cfg.rel_tol = args.tol * args.ref_tol_factor
        ref_cfg.max_iter = args.max_iter * 10
        reference = SOLVERS[name](dataset, spec, ref_cfg).model.augmented()
        # near-zero references (e.g. eta >= sum of margins) switch the
        # curve to absolute distances
        ref_norm = np.linalg.norm(reference)
        if ref_norm < 1e-8:
            ref_norm = 1.0

        distances = []
        t0 = time.perf_counter()
        stamps = []

        def track(it, x_aug):
            distances.append(np.linalg.norm(x_aug - reference) / ref_norm)
            stamps.append(time.perf_counter() - t0)

        cfg = _build_config(argsolver, dataset, norm_T=norm_T)
        report = SOLVERS[name](dataset, spec, cfg, callback=track)
        all_converged &= report.converged
        for i, d in enumerate(distances, start=1):
            row = f"{name},{i},{_fmt(d)}"
            if args.timing:
                row += f",{_fmt(stamps[i - 1])}"
            lines.append(row)

    out = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    sys.stdout.write(out)
    return 0 if all_converged else 2


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparsemsvm",
        description="Sparse multiclass SVM training with exact-hinge primal-dual solvers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier and persist the model")
    _data_args(p)
    _solver_args(p)
    p.add_argument("--alpha", type=float, required=True,
                   help="sweep parameter: lam = 1/alpha, or eta = alpha*L for fbpd-con")
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--threshold", type=float, default=1e-5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a persisted model on a dataset")
    p.add_argument("--model", required=True)
    _data_args(p)
    p.add_argument("--threshold", type=float, default=1e-5)
    p.add_argument("--emit", default="text", choices=["text", "csv"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="alpha grid with repeated stratified subsets")
    _data_args(p)
    _solver_args(p)
    p.add_argument("--test", default=None, help="fixed test set (defaults to held-out samples)")
    p.add_argument("--alphas", default=DEFAULT_ALPHAS)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--train-per-class", type=int, default=None)
    p.add_argument("--threshold", type=float, default=1e-5)
    p.add_argument("--timing", action="store_true",
                   help="append a wall-time column (breaks byte-for-byte reproducibility)")
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="distance-to-reference convergence curves")
    _data_args(p)
    p.add_argument("--solvers", default=",".join(sorted(SOLVERS)))
    p.add_argument("--reg", default="l1", choices=["l1", "l12", "l1inf", "l2sq"])
    p.add_argument("--blocks", default="1")
    p.add_argument("--group", default="per-class", choices=["per-class", "cross-class"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--ref-tol-factor", type=float, default=1e-2,
                   help="reference run stops at tol times this factor")
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
