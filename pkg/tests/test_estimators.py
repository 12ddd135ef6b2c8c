import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from integral_uncertainty.estimators import ConcentrationOperator, IntegralTransformer, MissingDataRecovery
from integral_uncertainty.families import gaussian, random_combinations
from integral_uncertainty.transforms import TransformSpec

SMALL = dict(radius=12.0, panels=24, nodes_per_panel=12)


@pytest.mark.parametrize("cls", [IntegralTransformer, ConcentrationOperator, MissingDataRecovery])
def test_params_roundtrip(cls):
    est = cls(param=1.0, radius=10.0)
    params = est.get_params()
    assert params["param"] == 1.0 and params["radius"] == 10.0
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(param=2.0)
    assert est.param == 2.0


@pytest.mark.parametrize("cls, method", [
    (IntegralTransformer, "transform"),
    (ConcentrationOperator, "transform"),
    (MissingDataRecovery, "predict"),
])
def test_not_fitted(cls, method):
    with pytest.raises(NotFittedError):
        getattr(cls(), method)(np.zeros((1, 4)))


def test_transformer_gaussian_fixed_point():
    est = IntegralTransformer(**SMALL).fit()
    g = est.sample(gaussian())
    out = est.transform(g)
    assert out.shape == (1, g.size)
    np.testing.assert_allclose(out[0], g, atol=1e-12)
    np.testing.assert_allclose(est.inverse_transform(out)[0], g, atol=1e-12)


def test_transformer_dunkl_complex_rows():
    est = IntegralTransformer(kind="dunkl1d", param=1.0, **SMALL).fit()
    X = np.vstack([est.sample(f) for f in random_combinations(TransformSpec.dunkl1d(1.0), draws=3)])
    back = est.inverse_transform(est.transform(X))
    np.testing.assert_allclose(back, X, atol=1e-10)


@pytest.mark.parametrize("bad, err", [
    (np.zeros((2, 3)), ValueError),
    (np.zeros((2, 2, 2)), ValueError),
    (np.empty((0, 10)), ValueError),
    (np.array([[np.nan]]), ValueError),
    (np.array([["a"]], dtype=object), TypeError),
])
def test_transformer_rejects_bad_input(bad, err):
    est = IntegralTransformer(**SMALL).fit()
    with pytest.raises(err):
        est.transform(bad)


@pytest.mark.parametrize("kwargs", [{"radius": -1.0}, {"kind": "fourier"}, {"param": -1.0}])
def test_invalid_params_raise_at_fit(kwargs):
    with pytest.raises(ValueError):
        IntegralTransformer(**kwargs).fit()


def test_concentration_operator():
    est = ConcentrationOperator(n_components=3).fit()
    assert est.op_norm_ == pytest.approx(0.4702285228, rel=1e-8)
    assert est.eigenvalues_[0] == pytest.approx(est.op_norm_ ** 2, rel=1e-8)
    assert np.all(np.diff(est.eigenvalues_) <= 0)
    assert est.annihilation_constant_ == pytest.approx((1 - est.op_norm_) ** -2)
    coef = est.transform(est.components_)
    np.testing.assert_allclose(coef, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(est.inverse_transform(coef), est.components_, atol=1e-10)


@pytest.mark.parametrize("n", [0, 2.5, -1])
def test_concentration_operator_rejects_components(n):
    with pytest.raises(ValueError, match="n_components"):
        ConcentrationOperator(n_components=n).fit()


def test_missing_data_recovery():
    est = MissingDataRecovery().fit()
    spec = TransformSpec.hankel(0.0)
    F = np.vstack([est.pair_.grid.sample(f) for f in random_combinations(spec, draws=3)])
    obs = est.observe(F)
    assert obs.shape == (3, est.n_features_in_)
    pred = est.predict(obs)
    np.testing.assert_allclose(pred, F, atol=1e-9)
    assert len(est.n_iter_) == 3


def test_missing_data_recovery_ignores_masked_entries():
    est = MissingDataRecovery().fit()
    F = est.pair_.grid.sample(gaussian())[None, :]
    obs = est.observe(F)
    noisy = obs.copy()
    noisy[0, : est.n_nodes_][est.pair_.s_mask] = 7.0
    np.testing.assert_allclose(est.predict(noisy), est.predict(obs))
