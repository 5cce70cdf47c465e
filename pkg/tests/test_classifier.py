import math

import numpy as np
import pytest
import scipy.sparse

from dvngram.classifier import (LabeledDataset, LinearModel, dev_split_select,
                                evaluate, gradient_tolerance, load_model,
                                objective_gradient_norm, predict, save_model,
                                train_logreg)


def _blobs(n=60, dim=5, gap=2.0, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.vstack([rng.normal(gap, 1.0, (half, dim)),
                   rng.normal(-gap, 1.0, (n - half, dim))])
    y = np.array([1] * half + [-1] * (n - half))
    return LabeledDataset(x, y)


def test_gradient_norm_at_solution():
    data = _blobs()
    for c in (0.01, 1.0, 50.0):
        model = train_logreg(data, c, tol=1e-7)
        assert objective_gradient_norm(model, data) <= 1e-7


def test_default_tolerance_scales_with_problem():
    # large C on many examples: an absolute 1e-5 target is out of reach,
    # the relative default must still be met
    data = _blobs(n=2000, dim=40, gap=0.3, seed=5)
    for c in (0.01, 100.0):
        target = gradient_tolerance(data, c)
        model = train_logreg(data, c)
        assert objective_gradient_norm(model, data) <= target
    assert gradient_tolerance(data, 100.0) > gradient_tolerance(data, 0.01)


def test_separable_data_is_fit():
    data = _blobs(gap=3.0)
    model = train_logreg(data, 1.0)
    assert evaluate(model, data) == 1.0
    assert model.c_value == 1.0


def test_sparse_features_supported():
    data = _blobs(n=40)
    sparse = LabeledDataset(scipy.sparse.csr_matrix(data.features),
                            data.labels)
    dense_model = train_logreg(data, 0.5, tol=1e-8)
    sparse_model = train_logreg(sparse, 0.5, tol=1e-8)
    assert np.allclose(dense_model.weights, sparse_model.weights, atol=1e-6)
    assert evaluate(sparse_model, sparse) == evaluate(dense_model, data)


def test_intercept_absorbs_class_prior_unregularized():
    # no informative features: the optimum is w=0, b=log(n+/n-)
    x = np.zeros((8, 3))
    y = np.array([1, 1, 1, 1, 1, 1, -1, -1])
    model = train_logreg(LabeledDataset(x, y), 10.0, tol=1e-9)
    assert np.allclose(model.weights, 0.0, atol=1e-9)
    assert model.intercept == pytest.approx(math.log(6 / 2), abs=1e-6)


def test_predict_sign_and_tie():
    model = LinearModel(weights=np.array([1.0, -1.0]), intercept=0.0,
                        c_value=1.0)
    assert predict(model, [2.0, 0.5]) == 1
    assert predict(model, [0.0, 3.0]) == -1
    assert predict(model, [1.0, 1.0]) == 1  # exactly on the boundary


def test_predict_rejects_wrong_dim():
    model = LinearModel(weights=np.zeros(3), intercept=0.0, c_value=1.0)
    with pytest.raises(ValueError):
        predict(model, [1.0, 2.0])


def test_evaluate_known_accuracy():
    model = LinearModel(weights=np.array([1.0]), intercept=0.0, c_value=1.0)
    data = LabeledDataset(np.array([[2.0], [-1.0], [0.5], [-0.5]]),
                          np.array([1, -1, -1, 1]))
    assert evaluate(model, data) == 0.5


def test_dataset_validation():
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 2)), np.array([1, 0]))
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 2)), np.array([1]))
    with pytest.raises(ValueError):
        train_logreg(LabeledDataset(np.zeros((0, 2)),
                                    np.array([], dtype=int)), 1.0)
    with pytest.raises(ValueError):  # single class
        train_logreg(LabeledDataset(np.ones((3, 2)), np.array([1, 1, 1])),
                     1.0)
    with pytest.raises(ValueError):
        train_logreg(_blobs(), -1.0)
    with pytest.raises(ValueError):
        evaluate(LinearModel(np.zeros(2), 0.0, 1.0),
                 LabeledDataset(np.zeros((0, 2)), np.array([], dtype=int)))


def test_dev_split_prefers_working_c():
    # C=1e-9 cannot move the weights away from ~0, so the intercept
    # predicts one class everywhere and dev accuracy sits near 50%
    data = _blobs(n=100, gap=3.0, seed=2)
    assert dev_split_select(data, (1e-9, 1.0), seed=0) == 1.0


def test_dev_split_tie_takes_smaller_c():
    data = _blobs(n=100, gap=6.0, seed=3)  # easy: both C values are perfect
    assert dev_split_select(data, (5.0, 0.5), seed=1) == 0.5


def test_dev_split_validation():
    data = _blobs(n=20)
    with pytest.raises(ValueError):
        dev_split_select(data, ())
    with pytest.raises(ValueError):
        dev_split_select(data, (0.0, 1.0))
    tiny = LabeledDataset(np.zeros((2, 1)), np.array([1, -1]))
    with pytest.raises(ValueError):
        dev_split_select(tiny, (1.0,))


def test_dev_split_deterministic_in_seed():
    data = _blobs(n=80, gap=0.5, seed=4)  # noisy enough that C matters
    grid = (0.01, 0.1, 1.0, 10.0)
    assert dev_split_select(data, grid, seed=7) == \
        dev_split_select(data, grid, seed=7)


def test_save_load_roundtrip_bit_exact(tmp_path):
    data = _blobs(n=30, seed=5)
    model = train_logreg(data, 3.0)
    path = tmp_path / "clf.txt"
    save_model(model, path)
    back = load_model(path)
    assert back.c_value == model.c_value
    assert back.intercept == model.intercept
    assert np.array_equal(back.weights, model.weights)


def test_load_rejects_truncated(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1.0\n")
    with pytest.raises(ValueError):
        load_model(path)
