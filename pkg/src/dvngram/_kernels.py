"""Numba kernels for the training hot path.

Everything here operates on plain numpy arrays so the same code services
both float32 and float64 parameter storage. Dot products and objective
terms always accumulate in float64.

The random stream is a splitmix64 generator whose state lives in a
caller-owned uint64 array of length 1; every draw mutates it in place.
Using one tiny integer generator for both the Python-level sampling API
and the jitted training loop keeps the two paths bit-identical.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_MIX2 = np.uint64(0x94D049BB133111EB)
_DOUBLE_SCALE = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, nogil=True)
def rng_next(state):
    """Advance the splitmix64 state and return the next uint64."""
    state[0] = state[0] + _U64_GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def rng_double(state):
    """Uniform double in [0, 1), 53 random bits."""
    return float(rng_next(state) >> np.uint64(11)) * _DOUBLE_SCALE


@njit(cache=True, nogil=True)
def sample_cumulative(cum, state):
    """Draw an index with probability proportional to the weight steps in
    `cum` (monotone cumulative weights, cum[-1] = total weight)."""
    u = rng_double(state) * cum[cum.shape[0] - 1]
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, nogil=True)
def log_sigmoid(x):
    """log(1 / (1 + exp(-x))) without overflow for any x."""
    return min(x, 0.0) - np.log1p(np.exp(-abs(x)))


@njit(cache=True, nogil=True)
def sigmoid(x):
    """1 / (1 + exp(-x)) without overflow for any x."""
    return np.exp(min(x, 0.0)) / (1.0 + np.exp(-abs(x)))


@njit(cache=True, nogil=True)
def pair_objective_fixed(doc_vecs, token_vecs, doc_id, target, negatives):
    """Objective for one pair with the given negatives, no mutation:

        log s(x_target . x_doc) + sum_j log s(-x_neg_j . x_doc)
    """
    dim = doc_vecs.shape[1]
    s = 0.0
    for i in range(dim):
        s += float(token_vecs[target, i] * doc_vecs[doc_id, i])
    obj = log_sigmoid(s)
    for j in range(negatives.shape[0]):
        sj = 0.0
        neg = negatives[j]
        for i in range(dim):
            sj += float(token_vecs[neg, i] * doc_vecs[doc_id, i])
        obj += log_sigmoid(-sj)
    return obj


@njit(cache=True, nogil=True)
def apply_pair_update(doc_vecs, token_vecs, doc_id, target, negatives, lr):
    """One gradient-ascent step on a (document, target token) pair with the
    given negative token ids. Returns the pair objective evaluated at the
    pre-update parameters.

    All sigmoids are computed against the pre-update parameters: the doc
    gradient is accumulated before any token row changes, and token rows
    are updated against the original doc vector. Duplicate negatives (or a
    negative equal to the target) therefore contribute additively.
    """
    dim = doc_vecs.shape[1]
    k = negatives.shape[0]

    s = 0.0
    for i in range(dim):
        s += float(token_vecs[target, i] * doc_vecs[doc_id, i])
    g_target = 1.0 - sigmoid(s)
    obj = log_sigmoid(s)

    grad_doc = np.zeros(dim)
    for i in range(dim):
        grad_doc[i] = g_target * float(token_vecs[target, i])

    g_neg = np.empty(k)
    for j in range(k):
        neg = negatives[j]
        sj = 0.0
        for i in range(dim):
            sj += float(token_vecs[neg, i] * doc_vecs[doc_id, i])
        g_neg[j] = sigmoid(sj)
        obj += log_sigmoid(-sj)
        for i in range(dim):
            grad_doc[i] -= g_neg[j] * float(token_vecs[neg, i])

    for i in range(dim):
        token_vecs[target, i] += lr * g_target * float(doc_vecs[doc_id, i])
    for j in range(k):
        neg = negatives[j]
        for i in range(dim):
            token_vecs[neg, i] -= lr * g_neg[j] * float(doc_vecs[doc_id, i])
    for i in range(dim):
        doc_vecs[doc_id, i] += lr * grad_doc[i]

    return obj


@njit(cache=True, nogil=True)
def train_pairs(doc_vecs, token_vecs, pair_docs, pair_tokens, order,
                start, stop, lr, k, cum, state, neg_buf):
    """Process pairs order[start:stop] sequentially with per-pair updates.

    Negatives come from the cumulative table via the caller-owned rng
    state. Returns the summed pre-update pair objective.
    """
    total = 0.0
    for p in range(start, stop):
        idx = order[p]
        for j in range(k):
            neg_buf[j] = sample_cumulative(cum, state)
        total += apply_pair_update(doc_vecs, token_vecs,
                                   pair_docs[idx], pair_tokens[idx],
                                   neg_buf[:k], lr)
    return total


@njit(cache=True, nogil=True)
def estimate_objective(doc_vecs, token_vecs, pair_docs, pair_tokens,
                       k, cum, state, neg_buf):
    """Sum of pair objectives over all pairs with fresh negative draws.

    Pure evaluation: no parameters change.
    """
    total = 0.0
    for p in range(pair_docs.shape[0]):
        for j in range(k):
            neg_buf[j] = sample_cumulative(cum, state)
        total += pair_objective_fixed(doc_vecs, token_vecs,
                                      pair_docs[p], pair_tokens[p],
                                      neg_buf[:k])
    return total


@njit(cache=True, nogil=True)
def infer_pairs(doc_vec, token_vecs, tokens, order, lr, k, cum, state, neg_buf):
    """Frozen-token inference step: update only `doc_vec` (a 1-row view)
    against the document's tokens in the given order."""
    dim = doc_vec.shape[1]
    total = 0.0
    for p in range(order.shape[0]):
        target = tokens[order[p]]
        s = 0.0
        for i in range(dim):
            s += float(token_vecs[target, i] * doc_vec[0, i])
        g_target = 1.0 - sigmoid(s)
        total += log_sigmoid(s)
        grad = np.zeros(dim)
        for i in range(dim):
            grad[i] = g_target * float(token_vecs[target, i])
        for j in range(k):
            neg = sample_cumulative(cum, state)
            neg_buf[j] = neg
            sj = 0.0
            for i in range(dim):
                sj += float(token_vecs[neg, i] * doc_vec[0, i])
            gj = sigmoid(sj)
            total += log_sigmoid(-sj)
            for i in range(dim):
                grad[i] -= gj * float(token_vecs[neg, i])
        for i in range(dim):
            doc_vec[0, i] += lr * grad[i]
    return total
