"""Negative-sampling SGD over (document, token) pairs.

The training stream is every token occurrence of every document, shuffled
once per epoch. Each pair gets one gradient-ascent step on

    log sigmoid(x_t . x_d) + sum_j log sigmoid(-x_nj . x_d)

with k negatives drawn from the noise distribution. Updates are applied
per pair; the sigmoids of a step are all evaluated at the pre-update
parameters, so repeated token ids within one step contribute additively.

Multi-worker mode runs the same per-pair kernel from several threads
(the kernels release the GIL) over disjoint mini-batch-sized chunks of
the shuffled stream, claimed from a shared cursor; parameter rows are
updated without locks, so results are only reproducible with workers=1.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .corpus import EncodedDocument
from .model import EmbeddingModel, TrainConfig, config_hash, save_vectors
from .noise import NoiseTable, Rng, build_noise_table

# lr never decays below this fraction of its starting value
_MIN_LR_FRACTION = 1e-4


class NonFiniteParameterError(RuntimeError):
    """Raised when a parameter matrix picks up a NaN or infinity."""


@dataclass
class TrainingPair:
    doc_id: int
    token_id: int


@dataclass
class EpochReport:
    epoch: int
    mean_objective: float
    pairs_processed: int
    wall_seconds: float


def build_pair_stream(corpus: list[EncodedDocument]):
    """Flatten a corpus into parallel (doc_id, token_id) arrays, one entry
    per token occurrence."""
    n = sum(len(doc.token_ids) for doc in corpus)
    pair_docs = np.empty(n, dtype=np.int32)
    pair_tokens = np.empty(n, dtype=np.int32)
    at = 0
    for doc in corpus:
        m = len(doc.token_ids)
        pair_docs[at:at + m] = doc.doc_id
        pair_tokens[at:at + m] = doc.token_ids
        at += m
    return pair_docs, pair_tokens


def pair_objective(model: EmbeddingModel, doc_id: int, target: int,
                   negatives) -> float:
    """Objective of one pair with fixed negatives; no parameters change."""
    negatives = np.asarray(negatives, dtype=np.int64)
    return float(_kernels.pair_objective_fixed(
        model.doc_vectors, model.token_vectors, doc_id, target, negatives))


def sgd_step_fixed(model: EmbeddingModel, doc_id: int, target: int,
                   negatives, lr: float) -> float:
    """One update with caller-chosen negatives. Returns the pair objective
    at the pre-update parameters."""
    negatives = np.asarray(negatives, dtype=np.int64)
    if negatives.size and (negatives.min() < 0
                           or negatives.max() >= model.vocab_size):
        raise IndexError("negative token id out of range")
    return float(_kernels.apply_pair_update(
        model.doc_vectors, model.token_vectors, doc_id, target,
        negatives, lr))


def sgd_step(model: EmbeddingModel, pair: TrainingPair, noise: NoiseTable,
             rng: Rng, lr: float, k: int) -> float:
    """One update on `pair` with k negatives drawn from `noise`.

    Draws exactly k samples from `rng` (duplicates and collisions with the
    target are kept), then applies the same kernel the epoch loop uses.
    """
    negatives = np.empty(k, dtype=np.int64)
    for j in range(k):
        negatives[j] = _kernels.sample_cumulative(noise.cumulative_weights,
                                                  rng.state)
    return sgd_step_fixed(model, pair.doc_id, pair.token_id, negatives, lr)


def _corpus_noise(model: EmbeddingModel, pair_tokens: np.ndarray,
                  exponent: float) -> NoiseTable:
    counts = np.bincount(pair_tokens, minlength=model.vocab_size)
    return build_noise_table(counts, exponent=exponent)


def _check_finite(model: EmbeddingModel) -> None:
    if not np.all(np.isfinite(model.doc_vectors)):
        raise NonFiniteParameterError("document vectors are not finite")
    if not np.all(np.isfinite(model.token_vectors)):
        raise NonFiniteParameterError("token vectors are not finite")


def _chunk_lr(config: TrainConfig, done_pairs: int, total_pairs: int) -> float:
    if not config.lr_decay:
        return config.learning_rate
    progress = done_pairs / total_pairs
    return max(config.learning_rate * (1.0 - progress),
               config.learning_rate * _MIN_LR_FRACTION)


def train(model: EmbeddingModel, corpus: list[EncodedDocument],
          config: TrainConfig | None = None, noise: NoiseTable | None = None,
          *, workers: int = 1, checkpoint_dir=None,
          log=None) -> list[EpochReport]:
    """Run `config.epochs` epochs of negative-sampling SGD in place.

    The pair stream is reshuffled each epoch with a generator seeded by
    config.seed, and negatives come from per-(epoch, worker) splitmix64
    streams forked from the same seed, so workers=1 is fully
    deterministic. `noise` defaults to a table built from the corpus
    token counts with config.noise_exponent.

    Returns one EpochReport per epoch. Raises NonFiniteParameterError if
    any parameter matrix leaves the finite range (checked after every
    epoch), and ValueError on an empty corpus or id out of model range.
    """
    if config is None:
        config = model.config
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if not corpus:
        raise ValueError("corpus is empty")
    pair_docs, pair_tokens = build_pair_stream(corpus)
    n_pairs = len(pair_docs)
    if n_pairs == 0:
        raise ValueError("corpus has no token occurrences")
    if pair_docs.max() >= model.num_docs or pair_docs.min() < 0:
        raise ValueError("corpus doc_id out of model range")
    if pair_tokens.max() >= model.vocab_size or pair_tokens.min() < 0:
        raise ValueError("corpus token id out of model range")
    if noise is None:
        noise = _corpus_noise(model, pair_tokens, config.noise_exponent)
    if len(noise) != model.vocab_size:
        raise ValueError("noise table size does not match vocabulary")

    shuffle_rng = np.random.default_rng(config.seed)
    rng_root = Rng(config.seed)
    cum = noise.cumulative_weights
    k = config.negative_k
    total_pairs = max(config.epochs * n_pairs, 1)

    reports: list[EpochReport] = []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(n_pairs)
        starts = list(range(0, n_pairs, config.mini_batch))
        worker_rngs = [rng_root.fork(epoch * workers + w)
                       for w in range(workers)]
        objective_parts = [0.0] * workers
        cursor = {"next": 0}
        lock = threading.Lock()

        def run_worker(w: int) -> None:
            rng = worker_rngs[w]
            neg_buf = np.empty(k, dtype=np.int64)
            acc = 0.0
            while True:
                with lock:
                    i = cursor["next"]
                    if i >= len(starts):
                        break
                    cursor["next"] = i + 1
                start = starts[i]
                stop = min(start + config.mini_batch, n_pairs)
                lr = _chunk_lr(config, epoch * n_pairs + start, total_pairs)
                acc += _kernels.train_pairs(
                    model.doc_vectors, model.token_vectors,
                    pair_docs, pair_tokens, order, start, stop,
                    lr, k, cum, rng.state, neg_buf)
            objective_parts[w] = acc

        if workers == 1:
            run_worker(0)
        else:
            threads = [threading.Thread(target=run_worker, args=(w,))
                       for w in range(workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()

        _check_finite(model)
        report = EpochReport(epoch=epoch,
                             mean_objective=sum(objective_parts) / n_pairs,
                             pairs_processed=n_pairs,
                             wall_seconds=time.perf_counter() - t0)
        reports.append(report)
        if log is not None:
            log(f"epoch {epoch}: mean objective {report.mean_objective:.6f} "
                f"({report.wall_seconds:.1f}s)")
        if checkpoint_dir is not None:
            save_checkpoint(model, checkpoint_dir, epoch, config,
                            rng_root.state[0])
    return reports


def save_checkpoint(model: EmbeddingModel, directory, epoch: int,
                    config: TrainConfig, rng_state) -> None:
    """Snapshot both matrices (rows named by index) plus a small header."""
    os.makedirs(directory, exist_ok=True)
    save_vectors(os.path.join(directory, f"docvecs-epoch{epoch}.txt"),
                 [str(i) for i in range(model.num_docs)], model.doc_vectors)
    save_vectors(os.path.join(directory, f"tokvecs-epoch{epoch}.txt"),
                 [str(i) for i in range(model.vocab_size)],
                 model.token_vectors)
    header = {"epoch": epoch, "config_hash": config_hash(config),
              "rng_state": int(rng_state)}
    with open(os.path.join(directory, f"header-epoch{epoch}.json"),
              "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")


def exact_softmax_logprob(model: EmbeddingModel, doc_id: int,
                          token_id: int) -> float:
    """log P(token | doc) under the full softmax over the vocabulary.

    O(vocab * dim); an oracle for small models, not a training path.
    """
    if not 0 <= doc_id < model.num_docs:
        raise IndexError(f"doc_id {doc_id} out of range")
    if not 0 <= token_id < model.vocab_size:
        raise IndexError(f"token_id {token_id} out of range")
    d = model.doc_vectors[doc_id].astype(np.float64, copy=False)
    scores = model.token_vectors.astype(np.float64, copy=False) @ d
    if model.biases is not None:
        scores = scores + model.biases.astype(np.float64, copy=False)
    m = scores.max()
    log_z = m + np.log(np.exp(scores - m).sum())
    return float(scores[token_id] - log_z)


def corpus_objective_estimate(model: EmbeddingModel,
                              corpus: list[EncodedDocument],
                              noise: NoiseTable, rng: Rng,
                              k: int | None = None) -> float:
    """Mean pair objective over the whole corpus with fresh negative
    draws from `rng`. Pure evaluation: parameters do not change."""
    if k is None:
        k = model.config.negative_k
    pair_docs, pair_tokens = build_pair_stream(corpus)
    if len(pair_docs) == 0:
        raise ValueError("corpus has no token occurrences")
    neg_buf = np.empty(k, dtype=np.int64)
    total = _kernels.estimate_objective(
        model.doc_vectors, model.token_vectors, pair_docs, pair_tokens,
        k, noise.cumulative_weights, rng.state, neg_buf)
    return float(total) / len(pair_docs)


def infer_vector(model: EmbeddingModel, token_ids, noise: NoiseTable,
                 config: TrainConfig | None = None,
                 seed: int | None = None) -> np.ndarray:
    """Embed an unseen document against frozen token vectors.

    Runs the usual per-pair updates for config.epochs passes over the
    document's tokens, touching only a fresh document vector. Returns
    that vector (dtype matches the model).
    """
    if config is None:
        config = model.config
    if seed is None:
        seed = config.seed
    token_ids = np.asarray(token_ids, dtype=np.int32)
    if token_ids.size == 0:
        raise ValueError("cannot infer a vector for an empty document")
    if token_ids.min() < 0 or token_ids.max() >= model.vocab_size:
        raise ValueError("token id out of model range")
    init_rng = np.random.default_rng(seed)
    doc_vec = init_rng.uniform(-0.001, 0.001, size=(1, model.dim)) \
        .astype(model.token_vectors.dtype)
    shuffle_rng = np.random.default_rng(seed + 1)
    rng = Rng(seed)
    neg_buf = np.empty(config.negative_k, dtype=np.int64)
    n = token_ids.size
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        lr = _chunk_lr(config, epoch * n, max(config.epochs * n, 1))
        _kernels.infer_pairs(doc_vec, model.token_vectors, token_ids, order,
                             lr, config.negative_k,
                             noise.cumulative_weights, rng.state, neg_buf)
    if not np.all(np.isfinite(doc_vec)):
        raise NonFiniteParameterError("inferred vector is not finite")
    return doc_vec[0]
