"""Bag-of-ngram features, with and without naive Bayes weighting.

Feature ids are vocabulary ids. The NB weight for feature i is the
log-count ratio

    r_i = log( (p_i / ||p||_1) / (q_i / ||q||_1) )

where p = alpha + sum of binarized positive rows and q = alpha + sum of
binarized negative rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse


@dataclass
class SparseFeatureVector:
    """Strictly increasing ids with nonzero weights."""

    ids: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.ids.shape != self.weights.shape or self.ids.ndim != 1:
            raise ValueError("ids and weights must be parallel 1-d arrays")
        if np.any(np.diff(self.ids) <= 0):
            raise ValueError("ids must be strictly increasing")
        if np.any(self.weights == 0.0):
            raise ValueError("zero weights must not be stored")

    @property
    def nnz(self) -> int:
        return len(self.ids)

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.ids] = self.weights
        return out


def bag_of_ngram_features(token_ids, weighting: str = "binary") -> SparseFeatureVector:
    """Distinct token ids of a document with weight 1 ("binary") or the
    occurrence count ("tf")."""
    if weighting not in ("binary", "tf"):
        raise ValueError("weighting must be 'binary' or 'tf'")
    ids, counts = np.unique(np.asarray(token_ids, dtype=np.int64),
                            return_counts=True)
    weights = counts.astype(np.float64) if weighting == "tf" \
        else np.ones(len(ids))
    return SparseFeatureVector(ids=ids, weights=weights)


@dataclass
class NbWeights:
    log_ratio: np.ndarray
    alpha: float


def fit_nb_weights(vectors, labels, feature_dim: int,
                   alpha: float = 1.0) -> NbWeights:
    """Log-count ratios from labeled training vectors (binarized: any
    stored weight counts as presence)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    labels = np.asarray(labels)
    if len(vectors) != len(labels):
        raise ValueError("one label per vector required")
    p = np.full(feature_dim, alpha)
    q = np.full(feature_dim, alpha)
    for vec, label in zip(vectors, labels):
        if label == 1:
            p[vec.ids] += 1.0
        elif label == -1:
            q[vec.ids] += 1.0
        else:
            raise ValueError(f"labels must be +1/-1, got {label!r}")
    ratio = np.log(p / p.sum()) - np.log(q / q.sum())
    return NbWeights(log_ratio=ratio, alpha=alpha)


def nb_weighted_features(vector: SparseFeatureVector,
                         weights: NbWeights) -> SparseFeatureVector:
    """Scale each stored weight by its feature's log-count ratio; entries
    whose ratio is exactly zero drop out."""
    w = vector.weights * weights.log_ratio[vector.ids]
    keep = w != 0.0
    return SparseFeatureVector(ids=vector.ids[keep], weights=w[keep])


def concat_features(dense: np.ndarray, sparse: SparseFeatureVector,
                    dense_scale: float = 1.0) -> SparseFeatureVector:
    """Dense block first (ids 0..dim-1, scaled by dense_scale), then the
    sparse ids shifted past it. Exact zeros in the scaled dense block are
    not stored, so dense_scale=0 reduces to the shifted sparse vector."""
    dense = np.asarray(dense, dtype=np.float64).ravel()
    dvals = dense * dense_scale
    dids = np.flatnonzero(dvals != 0.0)
    return SparseFeatureVector(
        ids=np.concatenate([dids, sparse.ids + len(dense)]),
        weights=np.concatenate([dvals[dids], sparse.weights]))


def vectors_to_csr(vectors, feature_dim: int) -> scipy.sparse.csr_matrix:
    """Stack sparse vectors into a CSR matrix for the classifier."""
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + v.nnz
    indices = np.concatenate([v.ids for v in vectors]) if vectors \
        else np.empty(0, dtype=np.int64)
    values = np.concatenate([v.weights for v in vectors]) if vectors \
        else np.empty(0)
    return scipy.sparse.csr_matrix((values, indices, indptr),
                                   shape=(len(vectors), feature_dim))


def save_sparse_dataset(path, vectors, labels) -> None:
    """One line per document: label then id:weight pairs, ids ascending."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(vectors) != len(labels):
        raise ValueError("one label per vector required")
    with open(path, "w", encoding="utf-8") as fh:
        for vec, label in zip(vectors, labels):
            fh.write(f"{int(label):+d}")
            for i, w in zip(vec.ids, vec.weights):
                fh.write(f" {int(i)}:{repr(float(w))}")
            fh.write("\n")


def load_sparse_dataset(path):
    """Inverse of save_sparse_dataset: (vectors, labels)."""
    vectors, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            labels.append(int(parts[0]))
            ids, weights = [], []
            for pair in parts[1:]:
                i, w = pair.split(":", 1)
                ids.append(int(i))
                weights.append(float(w))
            vectors.append(SparseFeatureVector(
                ids=np.array(ids, dtype=np.int64),
                weights=np.array(weights)))
    return vectors, np.array(labels, dtype=np.int64)
