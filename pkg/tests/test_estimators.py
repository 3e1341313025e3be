import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline

from ltm_texture import LBPTransformer, LTMTransformer, RandomForest, generate_synthetic
from ltm_texture._validation import ValidationError


@pytest.fixture(scope="module")
def synthetic():
    split = generate_synthetic(4, 10, 32, seed=1)
    X = [img.pixels for img, _ in split.all_samples()]
    y = np.array([label for _, label in split.all_samples()])
    return X, y


def test_get_set_params_and_clone():
    t = LTMTransformer(kernel_size=3, orders=("M00", "M11"), weights=(1, 2))
    assert t.get_params()["kernel_size"] == 3
    t.set_params(kernel_size=5)
    assert clone(t).get_params()["kernel_size"] == 5
    rf = RandomForest(n_trees=3, seed=4)
    assert clone(rf).get_params() == rf.get_params()


def test_ltm_transformer_shapes(synthetic):
    X, _ = synthetic
    F = LTMTransformer().fit_transform(X[:3])
    assert F.shape == (3, 120)
    assert np.all(F.sum(axis=1) == 28 * 28)
    assert np.allclose(LTMTransformer(normalize=True).fit_transform(X[:3]).sum(axis=1), 1.0)


def test_lbp_transformer_shapes(synthetic):
    X, _ = synthetic
    assert LBPTransformer("olbp").fit_transform(X[:2]).shape == (2, 256)
    assert LBPTransformer("csldp").fit_transform(X[:2]).shape == (2, 16)


def test_invalid_params_raise_on_fit():
    with pytest.raises(ValidationError):
        LTMTransformer(kernel_size=4).fit()
    with pytest.raises(ValidationError):
        LBPTransformer(kind="nope").fit()


def test_pipeline_with_sklearn_cv(synthetic):
    X, y = synthetic
    pipe = make_pipeline(LTMTransformer(), RandomForest(seed=0))
    scores = cross_val_score(pipe, X, y, cv=4)
    assert scores.mean() >= 0.9


def test_random_forest_predict_proba(synthetic):
    X, y = synthetic
    F = LTMTransformer().fit_transform(X)
    rf = RandomForest(n_trees=6, seed=1).fit(F, y)
    proba = rf.predict_proba(F)
    assert proba.shape == (len(y), 4)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert list(rf.classes_) == [0, 1, 2, 3]
    assert rf.score(F, y) == 1.0
