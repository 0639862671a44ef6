"""Proximity operators and projections: scaled simplex, max-hinge prox,
epigraphical projection, half-space, l1 ball, and the regularizer proxes."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .model import ModelVector, RegularizerSpec


class EpiProjResult(NamedTuple):
    """Projection onto the epigraph of a max-hinge function: the projected
    point (K reals) and its height."""

    point: np.ndarray
    height: float


# ---------------------------------------------------------------------------
# simplex and l1-ball projections

def project_simplex_rows(U, radius):
    """Row-wise Euclidean projection onto the scaled simplex
    {v >= 0 : sum(v) = radius}.

    Sort-based threshold search, O(K log K) per row; adequate for the small
    class counts we target and easy to swap out for the partial-sort
    methods if K ever grows.
    """
    if not radius > 0:
        raise ValueError("simplex radius must be positive")
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    n = U.shape[1]
    s = -np.sort(-U, axis=1)  # descending
    cumsum = np.cumsum(s, axis=1)
    j = np.arange(1, n + 1)
    # largest j with s_j > (cumsum_j - radius) / j
    cond = s > (cumsum - radius) / j
    rho = n - np.argmax(cond[:, ::-1], axis=1)  # cond[:, 0] always holds
    theta = (cumsum[np.arange(U.shape[0]), rho - 1] - radius) / rho
    return np.maximum(U - theta[:, None], 0.0)


def project_simplex(u, radius):
    """Euclidean projection of a single vector onto {v >= 0 : sum(v) = radius}."""
    u = np.asarray(u, dtype=np.float64)
    return project_simplex_rows(u[None, :], radius)[0]


def project_l1_ball(v, radius):
    """Euclidean projection onto the l1 ball {w : sum |w_i| <= radius}."""
    if not radius > 0:
        raise ValueError("l1-ball radius must be positive")
    v = np.asarray(v, dtype=np.float64)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    return np.sign(v) * project_simplex(a, radius)


# ---------------------------------------------------------------------------
# max-hinge prox and epigraphical projection

def prox_hinge_max(y_block, r_block, scale):
    """prox of scale * max_k(. + r) at y_block: y - P_{S_scale}(y + r)."""
    y = np.asarray(y_block, dtype=np.float64)
    r = np.asarray(r_block, dtype=np.float64)
    return y - project_simplex(y + r, scale)


def prox_hinge_max_rows(Y, R, scale):
    """Blockwise `prox_hinge_max` over the rows of (L, K) arrays."""
    return Y - project_simplex_rows(Y + R, scale)


def project_epigraph_max_rows(Y, R, heights):
    """Row-wise projection onto the epigraphs of y -> max_k(y^(k) + r^(k)).

    For each row: sort nu = ascending(y + r) with sentinels nu^0 = -inf and
    nu^(K+1) = +inf, locate the unique index kbar in {1..K+1} with
    nu^(kbar-1) < theta <= nu^(kbar) where

        theta = (height + sum_{k >= kbar} nu^(k)) / (K - kbar + 2),

    then return p = min(y, theta - r) at height theta. Rows already in the
    epigraph pass through unchanged.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    heights = np.atleast_1d(np.asarray(heights, dtype=np.float64))
    if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(heights))):
        raise ValueError("epigraphical projection needs finite inputs")
    L, K = Y.shape

    shifted = Y + R
    nu = np.sort(shifted, axis=1)  # ascending
    # suffix[j] = sum of nu[:, j:]; candidates kbar = 1..K+1 map to j = kbar-1
    suffix = np.zeros((L, K + 1))
    suffix[:, :K] = np.cumsum(nu[:, ::-1], axis=1)[:, ::-1]
    denom = K - np.arange(1, K + 2) + 2.0
    thetas = (heights[:, None] + suffix) / denom
    lower = np.concatenate([np.full((L, 1), -np.inf), nu], axis=1)
    upper = np.concatenate([nu, np.full((L, 1), np.inf)], axis=1)
    ok = (lower < thetas) & (thetas <= upper)
    # uniqueness is guaranteed in exact arithmetic; under floating-point
    # ties fall back to the candidate violating the sandwich the least
    kbar_idx = np.argmax(ok, axis=1)
    no_hit = ~ok.any(axis=1)
    if np.any(no_hit):
        viol = np.maximum(lower - thetas, 0.0) + np.maximum(thetas - upper, 0.0)
        kbar_idx[no_hit] = np.argmin(viol[no_hit], axis=1)

    theta = thetas[np.arange(L), kbar_idx]
    inside = shifted.max(axis=1) <= heights
    theta = np.where(inside, heights, theta)
    P = np.where(inside[:, None], Y, np.minimum(Y, theta[:, None] - R))
    return P, theta


def project_epigraph_max(y_block, r_block, height):
    """Projection of (y_block, height) onto the epigraph of
    y -> max_k(y^(k) + r^(k)); total function, identity inside the set."""
    y = np.asarray(y_block, dtype=np.float64)
    r = np.asarray(r_block, dtype=np.float64)
    P, theta = project_epigraph_max_rows(y[None, :], r[None, :], [height])
    return EpiProjResult(P[0], float(theta[0]))


# ---------------------------------------------------------------------------
# half-space

def project_halfspace_sum(z, bound):
    """Projection onto {z : sum(z) <= bound}: shift all entries equally."""
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ValueError("cannot project an empty vector")
    excess = z.sum() - bound
    if excess <= 0:
        return z.copy()
    return z - excess / z.size


# ---------------------------------------------------------------------------
# regularizer prox and value

def _soft_threshold(w, t):
    return np.sign(w) * np.maximum(np.abs(w) - t, 0.0)


def _group_row_batches(W, blocks):
    """View the groups of the (K, M) weight matrix as batches of equal-length
    rows, one batch per distinct group size.

    Yields (rows, put) pairs where `rows` is an (n, s) array holding one
    group per row and `put(new_rows)` scatters a replacement back into a
    copy-safe buffer. Batching keeps the per-group work vectorized.
    """
    buckets = {}
    for g in blocks.groups:
        buckets.setdefault(g.size, []).append(g)
    for size, gs in buckets.items():
        idx = np.vstack(gs)  # (B_s, size)
        if blocks.mode == "per-class":
            rows = W[:, idx].reshape(-1, size)  # (K*B_s, size)

            def put(new, idx=idx, size=size):
                W[:, idx] = new.reshape(W.shape[0], -1, size)
        else:  # cross-class: a group joins all K class rows over its features
            rows = W[:, idx].transpose(1, 0, 2).reshape(len(gs), -1)

            def put(new, idx=idx, size=size, n=len(gs)):
                W[:, idx] = new.reshape(n, W.shape[0], size).transpose(1, 0, 2)
        yield rows, put


def _block_soft_threshold_rows(rows, step):
    norms = np.linalg.norm(rows, axis=1)
    scale = np.zeros_like(norms)
    np.divide(step, norms, out=scale, where=norms > 0)
    return rows * np.maximum(1.0 - scale, 0.0)[:, None]


def _linf_prox_rows(rows, step):
    """prox of step*||.||_inf per row: w - P_{l1 ball radius step}(w)."""
    out = np.zeros_like(rows)
    over = np.abs(rows).sum(axis=1) > step  # feasible rows collapse to 0
    if np.any(over):
        w = rows[over]
        out[over] = w - np.sign(w) * project_simplex_rows(np.abs(w), step)
    return out


def _prox_weights(W, spec, step):
    if spec.kind == "l1":
        return _soft_threshold(W, step)
    if spec.kind == "l2sq":
        return W / (1.0 + 2.0 * step)
    out = W.copy()
    for rows, put in _group_row_batches(out, spec.blocks):
        if spec.kind == "l12":
            put(_block_soft_threshold_rows(rows, step))
        else:
            put(_linf_prox_rows(rows, step))
    return out


def prox_regularizer(x: ModelVector, spec: RegularizerSpec, step: float) -> ModelVector:
    """prox of step * g at x; offsets pass through untouched.

    l1: componentwise soft threshold. l12: per-group block soft threshold.
    l1inf: per-group Moreau complement of the l1-ball projection. l2sq
    (g = sum of squared class norms): scaling by 1/(1 + 2*step).
    """
    if not step > 0:
        raise ValueError("prox step must be positive")
    spec.validate(x.n_features)
    return ModelVector(_prox_weights(x.weights, spec, step), x.offsets)


def prox_regularizer_aug(x_aug, spec, step):
    """`prox_regularizer` on a raw (K, M+1) augmented array (solver hot path)."""
    out = np.empty_like(x_aug)
    out[:, :-1] = _prox_weights(x_aug[:, :-1], spec, step)
    out[:, -1] = x_aug[:, -1]
    return out


def regularizer_value(x: ModelVector | np.ndarray, spec: RegularizerSpec) -> float:
    """g(x) for the spec's penalty; offsets never contribute."""
    W = x.weights if isinstance(x, ModelVector) else np.asarray(x)[:, :-1]
    if spec.kind == "l1":
        return float(np.abs(W).sum())
    if spec.kind == "l2sq":
        return float((W ** 2).sum())
    total = 0.0
    for rows, _ in _group_row_batches(W, spec.blocks):
        if spec.kind == "l12":
            total += np.linalg.norm(rows, axis=1).sum()
        else:
            total += np.abs(rows).max(axis=1).sum()
    return float(total)
