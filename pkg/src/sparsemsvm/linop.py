"""The margin operator T (stack of per-sample score-gap maps), its adjoint,
and power-iteration operator-norm estimates used to set step sizes.

T is always applied matrix-free: the L*K x (M+1)*K matrix is never
materialized, and the implicit augmentation [features, 1] is applied on
the fly.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .model import Dataset, ModelVector


class NormEstimate(NamedTuple):
    """Power-iteration result; `value` already carries the safety factor."""

    value: float
    converged: bool
    iterations: int


def _scores_aug(x_aug, dataset):
    """Per-class scores phi~(u_l)^T x^(k) for every sample, shape (L, K)."""
    W = x_aug[:, :-1]
    b = x_aug[:, -1]
    return dataset.features @ W.T + b


def _apply_T_aug(x_aug, dataset):
    scores = _scores_aug(x_aug, dataset)
    own = scores[np.arange(dataset.n_samples), dataset.labels]
    # own-class column is an exact 0: identical floats subtracted
    return scores - own[:, None]


def _apply_T_adjoint_aug(y, dataset):
    row_sums = y.sum(axis=1)
    y_eff = y.copy()
    y_eff[np.arange(dataset.n_samples), dataset.labels] -= row_sums
    W = y_eff.T @ dataset.features
    if sp.issparse(dataset.features):
        W = np.asarray(W)
    b = y_eff.sum(axis=0)
    return np.hstack([W, b[:, None]])


def apply_T(x: ModelVector, dataset: Dataset):
    """Margin vector y with y(l, k) = phi~(u_l)^T (x^(k) - x^(z_l)).

    Returns an (L, K) array, row-major by sample; column z_l of row l is
    exactly zero.
    """
    if x.n_features != dataset.n_features or x.n_classes != dataset.n_classes:
        raise ValueError("model and dataset dimensions do not agree")
    return _apply_T_aug(x.augmented(), dataset)


def apply_T_adjoint(y, dataset: Dataset):
    """Adjoint map: class block k accumulates
    sum_l [y(l,k) - delta_{k=z_l} sum_j y(l,j)] * phi~(u_l).

    The appended constant of phi~ makes the offsets accumulate too.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (dataset.n_samples, dataset.n_classes):
        raise ValueError("margin vector shape must be (L, K)")
    return ModelVector.from_augmented(_apply_T_adjoint_aug(y, dataset))


def _power_iteration(matvec, rmatvec, v0, tol, max_iter):
    """sqrt of the largest eigenvalue of A^T A via power iteration on A^T A.

    Stops when successive Rayleigh-quotient square roots agree to a
    relative `tol`.
    """
    v = v0 / max(np.linalg.norm(v0), 1e-300)
    est = 0.0
    for it in range(1, max_iter + 1):
        w = matvec(v)
        new_est = float(np.linalg.norm(w))
        if new_est == 0.0:
            return 0.0, True, it
        v = rmatvec(w)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return new_est, True, it
        v = v / nv
        if abs(new_est - est) <= tol * max(new_est, 1e-300):
            return new_est, True, it
        est = new_est
    return est, False, max_iter


# A start vector must not have all class blocks equal: such vectors are
# annihilated by T. A fixed seeded draw keeps step sizes reproducible.
_START_SEED = 0


def operator_norm(dataset: Dataset, tol: float = 1e-9, max_iter: int = 1000) -> NormEstimate:
    """Estimate of ||T|| inflated by a 1.01 safety factor.

    Power iteration on T^T T from a deterministic start vector; a
    non-converged run returns the best estimate with `converged=False`.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    K, M = dataset.n_classes, dataset.n_features
    v0 = np.random.default_rng(_START_SEED).standard_normal((K, M + 1))
    est, converged, its = _power_iteration(
        lambda v: _apply_T_aug(v, dataset),
        lambda w: _apply_T_adjoint_aug(w, dataset),
        v0, tol, max_iter)
    return NormEstimate(1.01 * est, converged, its)


def features_aug_norm(dataset: Dataset, tol: float = 1e-9, max_iter: int = 1000) -> NormEstimate:
    """Estimate of the norm of the augmented feature matrix [features, 1].

    Used by the single-block binary solvers, same contract as
    `operator_norm`.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    feats = dataset.features

    def matvec(v):
        return feats @ v[:-1] + v[-1]

    def rmatvec(s):
        w = feats.T @ s
        if sp.issparse(feats):
            w = np.asarray(w).ravel()
        return np.append(w, s.sum())

    v0 = np.random.default_rng(_START_SEED).standard_normal(dataset.n_features + 1)
    est, converged, its = _power_iteration(matvec, rmatvec, v0, tol, max_iter)
    return NormEstimate(1.01 * est, converged, its)
