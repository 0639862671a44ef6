"""Domain types shared by all modules: parameter vectors, datasets, block
structures, margin offsets and the multiclass hinge function."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

REGULARIZER_KINDS = ("l1", "l12", "l1inf", "l2sq")
GROUP_MODES = ("per-class", "cross-class")


def _readonly(a):
    a = np.asarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelVector:
    """Stacked classifier parameters: K class blocks of M weights plus one offset.

    The full parameter vector has length K*(M+1); class block k is the
    augmented vector [weights[k], offsets[k]].

    Parameters
    ----------
    weights : ndarray, shape (K, M)
        Per-class weight vectors.
    offsets : ndarray, shape (K,)
        Per-class scalar offsets (never regularized).
    """

    weights: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        w = _readonly(self.weights)
        b = _readonly(self.offsets)
        if w.ndim != 2:
            raise ValueError(f"weights must be (K, M), got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(f"offsets must be (K,), got {b.shape} for K={w.shape[0]}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "offsets", b)

    @property
    def n_classes(self):
        return self.weights.shape[0]

    @property
    def n_features(self):
        return self.weights.shape[1]

    def augmented(self):
        """Return the (K, M+1) array whose row k is [weights[k], offsets[k]]."""
        return np.hstack([self.weights, self.offsets[:, None]])

    def ravel(self):
        """Flatten to length K*(M+1), blocks ordered [w^(1), b^(1), ..., w^(K), b^(K)]."""
        return self.augmented().ravel()

    @classmethod
    def from_augmented(cls, aug):
        aug = np.asarray(aug, dtype=np.float64)
        if aug.ndim != 2 or aug.shape[1] < 1:
            raise ValueError(f"augmented array must be (K, M+1), got {aug.shape}")
        return cls(weights=aug[:, :-1].copy(), offsets=aug[:, -1].copy())

    @classmethod
    def from_ravel(cls, flat, n_classes, n_features):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != n_classes * (n_features + 1):
            raise ValueError("flat vector length does not match K*(M+1)")
        return cls.from_augmented(flat.reshape(n_classes, n_features + 1))

    @classmethod
    def zeros(cls, n_classes, n_features):
        return cls(np.zeros((n_classes, n_features)), np.zeros(n_classes))


@dataclass(frozen=True)
class Sample:
    """One training pair: an already feature-mapped input, a 1-based class
    label and a positive margin (default 1)."""

    features: np.ndarray
    label: int
    margin: float = 1.0

    def __post_init__(self):
        f = _readonly(self.features)
        if f.ndim != 1:
            raise ValueError("sample features must be one-dimensional")
        if self.label < 1:
            raise ValueError(f"labels are 1-based, got {self.label}")
        if not self.margin > 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        object.__setattr__(self, "features", f)


@dataclass(frozen=True)
class Dataset:
    """L samples with M features each and labels in {1..K}.

    Features may be a dense ndarray or a scipy CSR matrix; zero entries of
    sparse rows never enter dot products. Labels are stored 0-based
    internally; converters at ingestion accept the external 1-based
    convention. Immutable after construction.
    """

    features: np.ndarray | sp.csr_matrix
    labels: np.ndarray  # (L,), 0-based
    n_classes: int
    margins: np.ndarray  # (L,), all > 0

    def __post_init__(self):
        feats = self.features
        if sp.issparse(feats):
            feats = sp.csr_matrix(feats, dtype=np.float64)
        else:
            feats = _readonly(feats)
            if feats.ndim != 2:
                raise ValueError("features must be a 2-d array")
        labels = np.asarray(self.labels, dtype=np.int64)
        margins = _readonly(self.margins)
        L = feats.shape[0]
        if L < 1:
            raise ValueError("a dataset needs at least one sample")
        if labels.shape != (L,) or margins.shape != (L,):
            raise ValueError("labels/margins length must match the number of samples")
        if self.n_classes < 1:
            raise ValueError("n_classes must be at least 1")
        if labels.min() < 0 or labels.max() >= self.n_classes:
            raise ValueError("labels out of range for n_classes")
        if not np.all(margins > 0):
            raise ValueError("margins must be positive")
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "margins", margins)

    @classmethod
    def from_arrays(cls, features, labels, n_classes=None, margins=None, one_based=False):
        """Build a dataset from raw arrays.

        `labels` may use the external 1-based convention (`one_based=True`,
        the loaders' default) or the internal 0-based one.
        """
        labels = np.asarray(labels, dtype=np.int64)
        if one_based:
            labels = labels - 1
        L = labels.shape[0]
        if n_classes is None:
            n_classes = int(labels.max()) + 1 if L else 0
        if margins is None:
            margins = np.ones(L)
        return cls(features, labels, int(n_classes), np.asarray(margins, dtype=np.float64))

    @classmethod
    def from_samples(cls, samples, n_classes=None):
        samples = list(samples)
        if not samples:
            raise ValueError("a dataset needs at least one sample")
        M = samples[0].features.shape[0]
        if any(s.features.shape[0] != M for s in samples):
            raise ValueError("all samples must share the same feature dimension")
        feats = np.vstack([s.features for s in samples])
        labels = np.array([s.label for s in samples])
        margins = np.array([s.margin for s in samples])
        return cls.from_arrays(feats, labels, n_classes=n_classes, margins=margins,
                               one_based=True)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def sample(self, i):
        """Return sample i with its external 1-based label."""
        row = self.features[i]
        if sp.issparse(row):
            row = np.asarray(row.todense()).ravel()
        return Sample(np.array(row), int(self.labels[i]) + 1, float(self.margins[i]))

    def dense_features(self):
        if sp.issparse(self.features):
            return np.asarray(self.features.todense())
        return self.features

    def subset(self, indices):
        """Dataset restricted to `indices` (order preserved, classes kept)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.n_classes,
                       self.margins[idx])


@dataclass(frozen=True)
class BlockStructure:
    """Partition of the M weight indices into B disjoint groups.

    `mode` selects how the groups apply to the (K, M) weight matrix:
    "per-class" treats group b of every class vector separately (K*B groups
    in total), "cross-class" joins the rows of all classes over the same
    feature group (B groups of size K*M_b).
    """

    groups: tuple
    mode: str = "per-class"

    def __post_init__(self):
        if self.mode not in GROUP_MODES:
            raise ValueError(f"unknown group mode {self.mode!r}")
        groups = tuple(np.asarray(g, dtype=np.int64) for g in self.groups)
        for g in groups:
            g.setflags(write=False)
        object.__setattr__(self, "groups", groups)

    @classmethod
    def contiguous(cls, n_features, size, mode="per-class"):
        """Contiguous runs of `size` indices; the last group may be shorter."""
        if size < 1:
            raise ValueError("block size must be at least 1")
        groups = [np.arange(lo, min(lo + size, n_features))
                  for lo in range(0, n_features, size)]
        return cls(tuple(groups), mode=mode)

    @property
    def n_groups(self):
        return len(self.groups)

    def validate(self, n_features):
        """Check the groups are disjoint and cover exactly {0..M-1}."""
        flat = np.concatenate(self.groups) if self.groups else np.empty(0, dtype=np.int64)
        if flat.size != n_features or not np.array_equal(np.sort(flat), np.arange(n_features)):
            raise ValueError("groups must partition the feature indices exactly")


@dataclass(frozen=True)
class RegularizerSpec:
    """Which sparsity penalty to apply to the weights (offsets are exempt).

    kind is one of "l1", "l12", "l1inf", "l2sq"; the mixed norms need a
    BlockStructure, the others ignore it.
    """

    kind: str
    blocks: BlockStructure | None = None

    def __post_init__(self):
        if self.kind not in REGULARIZER_KINDS:
            raise ValueError(f"unknown regularizer {self.kind!r}; expected one of {REGULARIZER_KINDS}")

    @property
    def needs_blocks(self):
        return self.kind in ("l12", "l1inf")

    def validate(self, n_features):
        if self.needs_blocks:
            if self.blocks is None:
                raise ValueError(f"regularizer {self.kind!r} needs a block structure")
            self.blocks.validate(n_features)


def make_margin_offsets(dataset):
    """Per-sample margin offset vectors r_l.

    Returns an (L, K) array whose row l is mu_l everywhere except for an
    exact zero at the sample's own class.
    """
    L, K = dataset.n_samples, dataset.n_classes
    r = np.repeat(dataset.margins[:, None], K, axis=1)
    r[np.arange(L), dataset.labels] = 0.0
    return r


def multiclass_hinge(y_block, r_block):
    """Margin violation of one sample: max_k (y^(k) + r^(k)).

    Applied to y = T_l x this equals max{0, mu_l + max_{k != z_l}
    score-gap}, the component at the true class contributing the zero.
    """
    y = np.asarray(y_block, dtype=np.float64)
    r = np.asarray(r_block, dtype=np.float64)
    if y.shape != r.shape or y.ndim != 1:
        raise ValueError("y_block and r_block must be 1-d of equal length")
    if y.size == 0:
        raise ValueError("need at least one class")
    return float(np.max(y + r))
