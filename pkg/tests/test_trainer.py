import json
import math
import os

import numpy as np
import pytest

from dvngram.corpus import EncodedDocument
from dvngram.model import EmbeddingModel, TrainConfig, init_model
from dvngram.noise import Rng, build_noise_table
from dvngram.trainer import (EpochReport, NonFiniteParameterError,
                             TrainingPair, build_pair_stream,
                             corpus_objective_estimate,
                             exact_softmax_logprob, infer_vector,
                             pair_objective, sgd_step, sgd_step_fixed, train)


def _model(doc, tok):
    return EmbeddingModel(doc_vectors=np.array(doc, dtype=np.float64),
                          token_vectors=np.array(tok, dtype=np.float64))


def _np_logsig(x):
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


def _np_sig(x):
    return np.exp(np.minimum(x, 0.0)) / (1.0 + np.exp(-np.abs(x)))


def test_update_hand_worked_single_negative():
    # doc [1,0], target [0.5,0], one negative [0.2,0], lr 0.1
    m = _model([[1.0, 0.0]], [[0.5, 0.0], [0.2, 0.0]])
    obj = sgd_step_fixed(m, 0, 0, [1], lr=0.1)

    sig_t = 1.0 / (1.0 + math.exp(-0.5))
    sig_n = 1.0 / (1.0 + math.exp(-0.2))
    assert obj == pytest.approx(math.log(sig_t) + math.log(1.0 - sig_n),
                                rel=1e-12)
    assert m.token_vectors[0, 0] == pytest.approx(0.5 + 0.1 * (1.0 - sig_t),
                                                  rel=1e-12)
    assert m.token_vectors[1, 0] == pytest.approx(0.2 - 0.1 * sig_n,
                                                  rel=1e-12)
    expected_doc = 1.0 + 0.1 * ((1.0 - sig_t) * 0.5 - sig_n * 0.2)
    assert m.doc_vectors[0, 0] == pytest.approx(expected_doc, rel=1e-12)
    # second components never move: all vectors are zero there
    assert m.doc_vectors[0, 1] == 0.0
    assert np.all(m.token_vectors[:, 1] == 0.0)


@pytest.mark.parametrize("seed", range(8))
def test_update_matches_numpy_mirror(seed):
    rng = np.random.default_rng(seed)
    dim, vocab, docs = (int(rng.integers(2, 10)), int(rng.integers(3, 20)),
                        int(rng.integers(1, 5)))
    k = int(rng.integers(1, 6))
    doc = rng.normal(0, 0.7, (docs, dim))
    tok = rng.normal(0, 0.7, (vocab, dim))
    d, t = int(rng.integers(docs)), int(rng.integers(vocab))
    negs = rng.integers(0, vocab, size=k)
    lr = float(rng.uniform(0.01, 0.5))

    m = _model(doc, tok)
    obj = sgd_step_fixed(m, d, t, negs, lr)

    # mirror with vectorized numpy, all sigmoids at the old parameters
    s = float(tok[t] @ doc[d])
    sn = tok[negs] @ doc[d]
    exp_obj = _np_logsig(s) + _np_logsig(-sn).sum()
    new_tok = tok.copy()
    new_tok[t] += lr * (1.0 - _np_sig(s)) * doc[d]
    for j, g in zip(negs, _np_sig(sn)):  # duplicates accumulate
        new_tok[j] -= lr * g * doc[d]
    new_doc = doc.copy()
    new_doc[d] += lr * ((1.0 - _np_sig(s)) * tok[t]
                        - (_np_sig(sn)[:, None] * tok[negs]).sum(axis=0))

    assert obj == pytest.approx(exp_obj, rel=1e-10)
    assert np.allclose(m.token_vectors, new_tok, rtol=1e-10, atol=1e-12)
    assert np.allclose(m.doc_vectors, new_doc, rtol=1e-10, atol=1e-12)


def test_duplicate_negatives_add_up():
    m1 = _model([[0.3, -0.2]], [[0.5, 0.1], [-0.4, 0.2]])
    m2 = _model([[0.3, -0.2]], [[0.5, 0.1], [-0.4, 0.2]])
    sgd_step_fixed(m1, 0, 0, [1, 1], lr=0.2)
    # the doubled negative moves twice as far as a single one would,
    # measured against the same pre-update gradient
    pre = np.array([[0.5, 0.1], [-0.4, 0.2]])
    doc = np.array([0.3, -0.2])
    g = _np_sig(float(pre[1] @ doc))
    expected = pre[1] - 2 * 0.2 * g * doc
    assert np.allclose(m1.token_vectors[1], expected, rtol=1e-12)
    # and differs from the single-negative step
    sgd_step_fixed(m2, 0, 0, [1], lr=0.2)
    assert not np.allclose(m1.token_vectors[1], m2.token_vectors[1])


def test_negative_equal_to_target_is_kept():
    m = _model([[0.4, 0.0]], [[0.6, 0.0]])
    sgd_step_fixed(m, 0, 0, [0], lr=0.1)
    s = 0.4 * 0.6
    sig = 1.0 / (1.0 + math.exp(-s))
    # target pull and negative push both apply to the same row
    expected = 0.6 + 0.1 * (1.0 - sig) * 0.4 - 0.1 * sig * 0.4
    assert m.token_vectors[0, 0] == pytest.approx(expected, rel=1e-12)


def test_sgd_step_draws_from_noise_like_fixed_path():
    rng = np.random.default_rng(2)
    doc, tok = rng.normal(size=(3, 4)), rng.normal(size=(8, 4))
    table = build_noise_table(np.arange(1, 9))
    m1, m2 = _model(doc, tok), _model(doc, tok)

    draw, replay = Rng(77), Rng(77)
    obj1 = sgd_step(m1, TrainingPair(1, 3), table, draw, lr=0.15, k=4)
    negs = [np.searchsorted(table.cumulative_weights,
                            replay.next_double() * table.total_weight,
                            side="right") for _ in range(4)]
    obj2 = sgd_step_fixed(m2, 1, 3, negs, lr=0.15)
    assert obj1 == obj2
    assert np.array_equal(m1.token_vectors, m2.token_vectors)
    assert np.array_equal(m1.doc_vectors, m2.doc_vectors)


def test_pair_objective_does_not_mutate():
    rng = np.random.default_rng(4)
    m = _model(rng.normal(size=(2, 3)), rng.normal(size=(5, 3)))
    before = (m.doc_vectors.copy(), m.token_vectors.copy())
    val = pair_objective(m, 0, 1, [2, 2, 4])
    assert np.array_equal(m.doc_vectors, before[0])
    assert np.array_equal(m.token_vectors, before[1])
    # value matches the formula
    s = float(m.token_vectors[1] @ m.doc_vectors[0])
    sn = m.token_vectors[[2, 2, 4]] @ m.doc_vectors[0]
    assert val == pytest.approx(_np_logsig(s) + _np_logsig(-sn).sum(),
                                rel=1e-12)


def test_sgd_step_fixed_rejects_bad_negative():
    m = _model(np.zeros((1, 2)), np.zeros((3, 2)))
    with pytest.raises(IndexError):
        sgd_step_fixed(m, 0, 0, [3], lr=0.1)


def _topic_corpus(n_docs=24, vocab=12, length=30, seed=0):
    rng = np.random.default_rng(seed)
    half = vocab // 2
    docs = []
    for i in range(n_docs):
        lo, hi = (0, half) if i < n_docs // 2 else (half, vocab)
        docs.append(EncodedDocument(
            doc_id=i,
            token_ids=rng.integers(lo, hi, size=length).astype(np.int32)))
    return docs


def test_build_pair_stream():
    docs = [EncodedDocument(0, np.array([3, 1], dtype=np.int32)),
            EncodedDocument(1, np.array([2], dtype=np.int32))]
    pd, pt = build_pair_stream(docs)
    assert list(pd) == [0, 0, 1]
    assert list(pt) == [3, 1, 2]


def test_train_improves_objective_and_reports():
    docs = _topic_corpus()
    cfg = TrainConfig(dim=8, epochs=6, seed=1, mini_batch=32)
    model = init_model(len(docs), 12, cfg)
    reports = train(model, docs, cfg)
    assert len(reports) == 6
    assert all(isinstance(r, EpochReport) for r in reports)
    assert reports[-1].mean_objective > reports[0].mean_objective
    assert all(r.pairs_processed == 24 * 30 for r in reports)
    assert all(r.wall_seconds >= 0 for r in reports)


def test_train_zero_epochs_is_noop():
    docs = _topic_corpus()
    cfg = TrainConfig(dim=4, epochs=0, seed=2)
    model = init_model(len(docs), 12, cfg)
    before = model.doc_vectors.copy()
    reports = train(model, docs, cfg)
    assert reports == []
    assert np.array_equal(model.doc_vectors, before)


def test_train_single_worker_is_deterministic():
    docs = _topic_corpus()
    cfg = TrainConfig(dim=6, epochs=3, seed=9)
    m1 = init_model(len(docs), 12, cfg)
    m2 = init_model(len(docs), 12, cfg)
    train(m1, docs, cfg)
    train(m2, docs, cfg)
    assert np.array_equal(m1.doc_vectors, m2.doc_vectors)
    assert np.array_equal(m1.token_vectors, m2.token_vectors)


def test_train_multiworker_finishes_finite():
    docs = _topic_corpus(n_docs=40)
    cfg = TrainConfig(dim=6, epochs=2, seed=3, mini_batch=16)
    model = init_model(len(docs), 12, cfg)
    reports = train(model, docs, cfg, workers=3)
    assert len(reports) == 2
    assert np.all(np.isfinite(model.doc_vectors))
    assert reports[0].pairs_processed == 40 * 30


def test_train_float32_storage():
    docs = _topic_corpus()
    cfg = TrainConfig(dim=6, epochs=2, seed=3, dtype="float32")
    model = init_model(len(docs), 12, cfg)
    train(model, docs, cfg)
    assert model.doc_vectors.dtype == np.float32
    assert np.all(np.isfinite(model.doc_vectors))


def test_train_input_validation():
    cfg = TrainConfig(dim=4, epochs=1)
    model = init_model(3, 5, cfg)
    with pytest.raises(ValueError):
        train(model, [], cfg)
    with pytest.raises(ValueError):
        train(model, [EncodedDocument(0, np.array([], dtype=np.int32))], cfg)
    with pytest.raises(ValueError):  # doc id beyond the matrix
        train(model, [EncodedDocument(7, np.array([1], dtype=np.int32))], cfg)
    with pytest.raises(ValueError):  # token id beyond the matrix
        train(model, [EncodedDocument(0, np.array([5], dtype=np.int32))], cfg)
    with pytest.raises(ValueError):
        train(model, _topic_corpus(), cfg, workers=0)
    with pytest.raises(ValueError):  # noise table sized for another vocab
        table = build_noise_table(np.ones(3))
        train(model, [EncodedDocument(0, np.array([1], dtype=np.int32))],
              cfg, table)


def test_train_detects_nonfinite():
    docs = _topic_corpus()
    cfg = TrainConfig(dim=4, epochs=1, seed=0)
    model = init_model(len(docs), 12, cfg)
    model.doc_vectors[0, 0] = np.nan
    with pytest.raises(NonFiniteParameterError):
        train(model, docs, cfg)


def test_checkpoints_written_per_epoch(tmp_path):
    docs = _topic_corpus()
    cfg = TrainConfig(dim=4, epochs=2, seed=5)
    model = init_model(len(docs), 12, cfg)
    train(model, docs, cfg, checkpoint_dir=tmp_path)
    for epoch in range(2):
        assert (tmp_path / f"docvecs-epoch{epoch}.txt").exists()
        assert (tmp_path / f"tokvecs-epoch{epoch}.txt").exists()
        header = json.loads((tmp_path / f"header-epoch{epoch}.json")
                            .read_text())
        assert header["epoch"] == epoch
        assert "config_hash" in header and "rng_state" in header


def test_lr_decay_changes_trajectory():
    docs = _topic_corpus()
    base = TrainConfig(dim=4, epochs=3, seed=11)
    decayed = TrainConfig(dim=4, epochs=3, seed=11, lr_decay=True)
    m1, m2 = init_model(24, 12, base), init_model(24, 12, decayed)
    train(m1, docs, base)
    train(m2, docs, decayed)
    assert not np.array_equal(m1.doc_vectors, m2.doc_vectors)


def test_exact_softmax_normalizes():
    rng = np.random.default_rng(6)
    m = _model(rng.normal(size=(3, 5)), rng.normal(size=(11, 5)))
    logprobs = [exact_softmax_logprob(m, 1, t) for t in range(11)]
    assert sum(np.exp(logprobs)) == pytest.approx(1.0, abs=1e-12)
    assert all(lp < 0 for lp in logprobs)


def test_exact_softmax_uses_bias():
    m = EmbeddingModel(doc_vectors=np.zeros((1, 2)),
                       token_vectors=np.zeros((2, 2)),
                       biases=np.array([math.log(3.0), 0.0]))
    # scores are the biases: P(token 0) = 3/4
    assert math.exp(exact_softmax_logprob(m, 0, 0)) == pytest.approx(0.75)


def test_exact_softmax_bounds():
    m = _model(np.zeros((1, 2)), np.zeros((2, 2)))
    with pytest.raises(IndexError):
        exact_softmax_logprob(m, 1, 0)
    with pytest.raises(IndexError):
        exact_softmax_logprob(m, 0, 2)


def test_corpus_objective_single_pair_is_exact():
    rng = np.random.default_rng(13)
    m = _model(rng.normal(size=(1, 4)), rng.normal(size=(6, 4)))
    corpus = [EncodedDocument(0, np.array([2], dtype=np.int32))]
    table = build_noise_table(np.arange(1, 7))
    k = 3
    est = corpus_objective_estimate(m, corpus, table, Rng(55), k=k)
    replay = Rng(55)
    negs = [np.searchsorted(table.cumulative_weights,
                            replay.next_double() * table.total_weight,
                            side="right") for _ in range(k)]
    assert est == pair_objective(m, 0, 2, negs)


def test_corpus_objective_does_not_mutate():
    docs = _topic_corpus()
    cfg = TrainConfig(dim=4, epochs=1, seed=1)
    model = init_model(len(docs), 12, cfg)
    table = build_noise_table(np.ones(12))
    before = model.doc_vectors.copy()
    corpus_objective_estimate(model, docs, table, Rng(1), k=2)
    assert np.array_equal(model.doc_vectors, before)


def test_infer_vector_freezes_tokens():
    docs = _topic_corpus()
    cfg = TrainConfig(dim=8, epochs=5, seed=1)
    model = init_model(len(docs), 12, cfg)
    table = build_noise_table(np.ones(12))
    train(model, docs, cfg, table)
    tokens_before = model.token_vectors.copy()
    docs_before = model.doc_vectors.copy()
    vec = infer_vector(model, docs[0].token_ids, table, cfg, seed=101)
    assert vec.shape == (8,)
    assert np.all(np.isfinite(vec))
    assert np.array_equal(model.token_vectors, tokens_before)
    assert np.array_equal(model.doc_vectors, docs_before)
    # deterministic in the seed
    vec2 = infer_vector(model, docs[0].token_ids, table, cfg, seed=101)
    assert np.array_equal(vec, vec2)
    assert not np.array_equal(
        vec, infer_vector(model, docs[0].token_ids, table, cfg, seed=102))


def test_infer_vector_rejects_empty_and_oov():
    model = init_model(2, 4, TrainConfig(dim=3, epochs=1))
    table = build_noise_table(np.ones(4))
    with pytest.raises(ValueError):
        infer_vector(model, np.array([], dtype=np.int32), table)
    with pytest.raises(ValueError):
        infer_vector(model, np.array([9], dtype=np.int32), table)


def test_checkpoint_roundtrip_via_vector_files(tmp_path):
    from dvngram.model import load_vectors
    docs = _topic_corpus()
    cfg = TrainConfig(dim=4, epochs=1, seed=5)
    model = init_model(len(docs), 12, cfg)
    train(model, docs, cfg, checkpoint_dir=tmp_path)
    names, mat = load_vectors(os.path.join(tmp_path, "docvecs-epoch0.txt"))
    assert names == [str(i) for i in range(24)]
    assert np.array_equal(mat, model.doc_vectors)
