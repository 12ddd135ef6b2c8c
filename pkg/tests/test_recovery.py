import json

import numpy as np
import pytest

from integral_uncertainty.concentration import make_pair, op_norm
from integral_uncertainty.families import gaussian, laguerre_gaussian, random_combinations
from integral_uncertainty.recovery import (
    Observation,
    RecoveryRefused,
    direct_solve,
    export_reconstruction,
    observe,
    observed_rate,
    reconstruct,
    stability_certificate,
)
from integral_uncertainty.transforms import TransformSpec

from conftest import SHIPPED_PAIRS

H0 = TransformSpec.hankel(0.0)


def _relerr(pair, a, b):
    return float(pair.grid.norm(a - b) / pair.grid.norm(b))


@pytest.mark.parametrize("alpha", [0.0, 1.0])
@pytest.mark.parametrize("S, Sigma", SHIPPED_PAIRS)
def test_exact_recovery(pair_factory, alpha, S, Sigma):
    pair = pair_factory(alpha, S, Sigma)
    spec = pair.spec
    for f in [gaussian(), laguerre_gaussian(spec, 2)] + random_combinations(spec, draws=3):
        rec = reconstruct(observe(f, pair))
        assert _relerr(pair, rec.f_hat, pair.grid.sample(f)) < 1e-9


def test_rate_matches_operator_norm(pair_factory):
    pair = pair_factory(0.0, (0.5, 1.5), (0.0, 2.0))
    rho = op_norm(pair).value
    rec = reconstruct(observe(random_combinations(H0, draws=1)[0], pair), tol=1e-14)
    assert rec.iterations > 5
    assert observed_rate(rec.history) <= 1.1 * rho ** 2


def test_direct_solve_agrees(unit_pair):
    obs = observe(gaussian(), unit_pair)
    rec = reconstruct(obs, tol=1e-14)
    assert _relerr(unit_pair, rec.f_hat, direct_solve(obs)) < 1e-12


def test_empty_support_returns_g1():
    pair = make_pair(H0, [], [(0, 1)])
    obs = observe(gaussian(), pair)
    rec = reconstruct(obs)
    assert rec.iterations == 0
    np.testing.assert_array_equal(rec.f_hat, obs.g1)


def test_dunkl_recovery():
    spec = TransformSpec.dunkl1d(1.0)
    pair = make_pair(spec, [(-0.5, 0.5)], [(-1, 1)])
    f = laguerre_gaussian(spec, 1, odd=True)
    rec = reconstruct(observe(f, pair))
    assert np.iscomplexobj(rec.f_hat)
    assert _relerr(pair, rec.f_hat, pair.grid.sample(f)) < 1e-9


def test_refuses_non_contraction():
    pair = make_pair(H0, [(0, 6)], [(0, 6)], panels=24, nodes_per_panel=12)
    assert op_norm(pair).value >= 1 - 1e-6
    obs = observe(gaussian(), pair)
    with pytest.raises(RecoveryRefused):
        reconstruct(obs)
    with pytest.raises(RecoveryRefused):
        stability_certificate(obs, gaussian(), 1e-3)


def test_observation_masks(unit_pair):
    obs = observe(gaussian(), unit_pair)
    assert np.all(obs.g1[unit_pair.s_mask] == 0)
    assert np.all(obs.g2[unit_pair.sigma_mask] == 0)
    with pytest.raises(ValueError, match="vanish on S"):
        Observation(obs.g1 + 1, obs.g2, unit_pair)
    with pytest.raises(ValueError, match="vanish on Sigma"):
        Observation(obs.g1, obs.g2 + 1, unit_pair)


@pytest.mark.parametrize("level", [1e-4, 1e-3, 1e-2, 1e-1])
def test_stability_bound(pair_factory, level):
    pair = pair_factory(0.0, (0.0, 0.5), (0.0, 1.0))
    rep = stability_certificate(observe(gaussian(), pair), gaussian(), level, seed=3)
    assert rep.passed and rep.slack > 0
    assert rep.noise1 == pytest.approx(level) and rep.noise2 == pytest.approx(level)


def test_zero_noise_is_exact(unit_pair):
    rep = stability_certificate(observe(gaussian(), unit_pair), gaussian(), 0.0)
    assert rep.passed and rep.error < 1e-11


def test_error_scales_linearly_with_noise(unit_pair):
    obs = observe(gaussian(), unit_pair)
    e1 = stability_certificate(obs, gaussian(), 1e-3, seed=5).error
    e2 = stability_certificate(obs, gaussian(), 1e-2, seed=5).error
    assert e2 / e1 == pytest.approx(10, rel=1e-6)


def test_export(tmp_path, unit_pair):
    obs = observe(gaussian(), unit_pair)
    rec = reconstruct(obs)
    export_reconstruction(obs, gaussian(), rec, str(tmp_path / "rec"), extra={"note": 1})
    files = sorted(p.name for p in tmp_path.iterdir())
    assert any(n.endswith(".json") for n in files) and any(n.endswith(".csv") for n in files)
    meta = json.loads(next(p for p in tmp_path.iterdir() if p.suffix == ".json").read_text())
    assert meta["iterations"] == rec.iterations
