import numpy as np
import pytest

from fair_context import correlation
from fair_context.errors import ConstantSensitive, DimensionMismatch
from fair_context.tabular import Dataset


def _dataset(features, sensitive):
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    return Dataset(features=features, sensitive=sensitive, target=[i % 2 for i in range(n)],
                   feature_names=tuple(f"z{j}" for j in range(features.shape[1])))


def test_fit_closed_form_hand_example(tiny_dataset):
    model = correlation.fit(tiny_dataset, alpha=1.0, mode="s1")
    # cov([1,2,3,4], s)=0.5, var(s)=0.25 -> w*=2
    assert model.s_mean == 0.5
    assert model.w_star[0] == pytest.approx(2.0, abs=1e-12)


def test_fit_uncorrelated_feature_gives_zero_weight():
    ds = _dataset([[1.0], [-1.0], [-1.0], [1.0]], [0, 0, 1, 1])
    model = correlation.fit(ds)
    assert model.w_star[0] == pytest.approx(0.0, abs=1e-12)


def test_fit_constant_sensitive_raises():
    ds = _dataset([[1.0], [2.0]], [1, 1])
    with pytest.raises(ConstantSensitive):
        correlation.fit(ds)


def test_transform_hand_examples(tiny_dataset):
    model = correlation.fit(tiny_dataset, alpha=1.0)
    out = correlation.transform(model, tiny_dataset.features, tiny_dataset.sensitive)
    assert out[:, 0].tolist() == [2.0, 3.0, 2.0, 3.0]

    half = correlation.fit(tiny_dataset, alpha=0.5)
    out = correlation.transform(half, tiny_dataset.features, tiny_dataset.sensitive)
    assert out[:, 0].tolist() == [1.5, 2.5, 2.5, 3.5]

    ident = correlation.fit(tiny_dataset, alpha=0.0)
    out = correlation.transform(ident, tiny_dataset.features, tiny_dataset.sensitive)
    assert np.array_equal(out, tiny_dataset.features)


def test_transform_dimension_mismatch(tiny_dataset):
    model = correlation.fit(tiny_dataset)
    with pytest.raises(DimensionMismatch):
        correlation.transform(model, np.zeros((2, 3)), np.array([0, 1]))
    with pytest.raises(DimensionMismatch):
        correlation.transform(model, np.zeros((2, 1)), np.array([0, 1, 1]))


def test_orthogonality_after_full_removal():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(10, 200))
        m = int(rng.integers(1, 8))
        s = rng.integers(0, 2, n)
        if len(np.unique(s)) < 2:
            continue
        feats = rng.normal(size=(n, m)) + np.outer(s, rng.normal(size=m))
        ds = _dataset(feats, s)
        model = correlation.fit(ds, alpha=1.0)
        out = correlation.transform(model, ds.features, ds.sensitive)
        centered = s - s.mean()
        for j in range(m):
            assert abs(np.mean(centered * out[:, j])) <= 1e-8


def test_lstsq_matches_cov_var_closed_form():
    rng = np.random.default_rng(6)
    for _ in range(50):
        n = int(rng.integers(5, 300))
        m = int(rng.integers(1, 10))
        s = rng.integers(0, 2, n)
        if len(np.unique(s)) < 2:
            continue
        feats = rng.normal(size=(n, m)) * rng.uniform(0.1, 10)
        ds = _dataset(feats, s)
        model = correlation.fit(ds)
        sf = s.astype(float)
        cov = ((feats - feats.mean(axis=0)) * (sf - sf.mean())[:, None]).mean(axis=0)
        var = sf.var()
        np.testing.assert_allclose(model.w_star, cov / var, atol=1e-10)


def test_transform_linear_in_alpha():
    rng = np.random.default_rng(7)
    feats = rng.normal(size=(40, 3))
    s = rng.integers(0, 2, 40)
    ds = _dataset(feats, s)
    full = correlation.transform(correlation.fit(ds, 1.0), feats, s)
    none = correlation.transform(correlation.fit(ds, 0.0), feats, s)
    for alpha in (0.25, 0.5, 0.9):
        out = correlation.transform(correlation.fit(ds, alpha), feats, s)
        assert np.array_equal(out, alpha * full + (1 - alpha) * none)


def test_apply_mode_s2_leaves_test_untouched(tiny_dataset):
    test = _dataset([[10.0], [20.0]], [0, 1])
    model = correlation.fit(tiny_dataset, alpha=1.0, mode="s2")
    train_out, test_out = correlation.apply_mode(model, tiny_dataset, test)
    assert test_out is test
    assert not np.array_equal(train_out.features, tiny_dataset.features)


def test_apply_mode_s1_transforms_both_with_train_weights(tiny_dataset):
    test = _dataset([[10.0], [20.0]], [0, 1])
    model = correlation.fit(tiny_dataset, alpha=1.0, mode="s1")
    train_out, test_out = correlation.apply_mode(model, tiny_dataset, test)
    # test rows shift by their own centered sensitive value times train w*=2
    assert test_out.features[:, 0].tolist() == [10.0 + 1.0, 20.0 - 1.0]
    centered = tiny_dataset.sensitive - 0.5
    assert abs(np.mean(centered * train_out.features[:, 0])) <= 1e-8


def test_apply_mode_alpha_zero_identity_both_modes(tiny_dataset):
    test = _dataset([[10.0], [20.0]], [0, 1])
    for mode in ("s1", "s2"):
        model = correlation.fit(tiny_dataset, alpha=0.0, mode=mode)
        train_out, test_out = correlation.apply_mode(model, tiny_dataset, test)
        assert np.array_equal(train_out.features, tiny_dataset.features)
        assert np.array_equal(test_out.features, test.features)


def test_degenerate_constant_feature_gets_zero_weight():
    ds = _dataset([[3.0, 1.0], [3.0, 2.0], [3.0, 3.0], [3.0, 4.0]], [0, 1, 0, 1])
    model = correlation.fit(ds)
    assert model.w_star[0] == pytest.approx(0.0, abs=1e-12)


def test_model_json_round_trip(tiny_dataset):
    model = correlation.fit(tiny_dataset, alpha=0.7, mode="s2")
    back = correlation.CRModel.from_json(model.to_json())
    assert np.array_equal(back.w_star, model.w_star)
    assert back.s_mean == model.s_mean
    assert back.alpha == model.alpha
    assert back.mode == model.mode
