"""Ensemble machinery: reproducibility, parallel invariance, statistics.

Monte Carlo outputs are compared against exact finite-horizon moment
recursions (tests/oracles.py), not only against asymptotic constants, so
the checks have power at small n.
"""

import math
import os

import numpy as np
import pytest

from erwalk.core import ModelParams, Regime, WalkState, run_path, step
from erwalk import montecarlo as mc

import oracles


DIFF = ModelParams.create(2, 0.55)
D1 = ModelParams.create(1, 0.5)


def test_stable_hash_spreads_seeds():
    seen = {mc.stable_hash(123, r) for r in range(200)}
    assert len(seen) == 200
    assert all(0 <= s < (1 << 64) for s in seen)
    assert mc.stable_hash(123, 7) == mc.stable_hash(123, 7)
    assert mc.stable_hash(123, 7) != mc.stable_hash(124, 7)


def test_two_pass_cov_matches_numpy():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(500, 3)) @ np.diag([1.0, 2.0, 0.5])
    mean, cov = mc.two_pass_cov(X)
    np.testing.assert_allclose(mean, X.mean(axis=0), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(cov, np.cov(X, rowvar=False), rtol=1e-10)


def test_single_replica_matches_run_path():
    """Ensemble replica r is bit-identical to run_path at the hashed seed."""
    n = 5000
    ens = mc.run_ensemble(DIFF, n, R=3, base_seed=321)
    for r in range(3):
        rec = run_path(DIFF, n, seed=mc.stable_hash(321, r), record_every=n)
        assert ens.terminal_G[r].tobytes() == rec.G[-1].tobytes()
        np.testing.assert_array_equal(ens.terminal_S[r], rec.S[-1])
        assert ens.terminal_M[r].tobytes() == rec.M[-1].tobytes()
        assert ens.terminal_N[r].tobytes() == rec.N[-1].tobytes()
    assert ens.residual_max.max() < 1e-9


def test_parallelism_does_not_change_results():
    n, R = 2000, 32
    a = mc.run_ensemble(DIFF, n, R, base_seed=77, max_parallelism=1)
    b = mc.run_ensemble(DIFF, n, R, base_seed=77, max_parallelism=4)
    assert a.G.tobytes() == b.G.tobytes()
    assert a.M.tobytes() == b.M.tobytes()
    assert a.N.tobytes() == b.N.tobytes()
    np.testing.assert_array_equal(a.S, b.S)


def test_parallelism_env_override(monkeypatch):
    monkeypatch.setenv("ERWALK_PARALLELISM", "3")
    assert mc._resolve_parallelism(None) == 3
    assert mc._resolve_parallelism(2) == 2
    monkeypatch.delenv("ERWALK_PARALLELISM")
    assert mc._resolve_parallelism(None) >= 1


def test_horizon_slices_match_shorter_runs():
    """A snapshot at horizon m equals the terminal state of an m-step run."""
    ens = mc.run_ensemble(DIFF, 4000, R=4, base_seed=9,
                          horizons=[500, 2000])
    np.testing.assert_array_equal(ens.horizons, [500, 2000, 4000])
    short = mc.run_ensemble(DIFF, 2000, R=4, base_seed=9)
    assert ens.G[:, 1, :].tobytes() == short.terminal_G.tobytes()
    np.testing.assert_array_equal(ens.S[:, 1, :], short.terminal_S)


def test_horizon_validation():
    with pytest.raises(ValueError):
        mc.run_ensemble(D1, 100, R=2, base_seed=1, horizons=[0, 50])
    with pytest.raises(ValueError):
        mc.run_ensemble(D1, 100, R=2, base_seed=1, horizons=[200])
    with pytest.raises(ValueError):
        mc.run_ensemble(D1, 0, R=2, base_seed=1)
    with pytest.raises(ValueError):
        mc.run_ensemble(D1, 100, R=0, base_seed=1)
    with pytest.raises(ValueError):
        mc.run_ensemble(ModelParams.create(1, 0.0), 100, R=2, base_seed=1)


def test_checkpoint_resume_reproduces_full_run(tmp_path):
    path = str(tmp_path / "ens.npz")
    n, R = 1000, 12
    fresh = mc.run_ensemble(DIFF, n, R, base_seed=55)
    full = mc.run_ensemble(DIFF, n, R, base_seed=55, checkpoint=path,
                           checkpoint_every=4)
    assert full.G.tobytes() == fresh.G.tobytes()
    assert os.path.exists(path)
    # craft a partial checkpoint: 5 good replicas, garbage beyond
    hs = fresh.horizons
    meta = mc._checkpoint_meta(DIFF, n, R, 55, hs)
    arrays = {"G": fresh.G.copy(), "S": fresh.S.copy(),
              "M": fresh.M.copy(), "N": fresh.N.copy(),
              "res": fresh.residual_max.copy()}
    for k in arrays:
        arrays[k][5:] = -1
    mc._save_checkpoint(path, meta, 5, arrays)
    resumed = mc.run_ensemble(DIFF, n, R, base_seed=55, checkpoint=path)
    assert resumed.G.tobytes() == fresh.G.tobytes()
    assert resumed.M.tobytes() == fresh.M.tobytes()
    # mismatched run settings must refuse the file
    with pytest.raises(ValueError):
        mc.run_ensemble(DIFF, n, R, base_seed=56, checkpoint=path)


def test_clt_normalizer():
    assert mc.clt_normalizer(Regime.DIFFUSIVE, 400) == 20.0
    assert mc.clt_normalizer(Regime.CRITICAL, 100) == pytest.approx(
        math.sqrt(100 * math.log(100)))
    with pytest.raises(ValueError):
        mc.clt_normalizer(Regime.CRITICAL, 1)
    with pytest.raises(ValueError):
        mc.clt_normalizer(Regime.SUPERDIFFUSIVE, 100)


def test_clt_check_against_exact_moments_diffusive():
    params = ModelParams.create(1, 0.7)
    n, R = 2000, 5000
    tables = oracles.exact_moment_tables(n, params.a)
    ens = mc.run_ensemble(params, n, R, base_seed=4242)
    rep = mc.clt_check(ens)
    exact_var = tables["G2"][n] / n  # per-coordinate, d = 1
    se = exact_var * math.sqrt(2.0 / R)
    assert abs(rep.pooled_var - exact_var) < 5.0 * se
    assert rep.normalizer == math.sqrt(n)
    assert rep.offdiag_max == 0.0
    assert len(rep.normality) == 1


def test_clt_check_against_exact_moments_critical():
    params = ModelParams.create(1, 0.75)
    n, R = 20000, 3000
    tables = oracles.exact_moment_tables(n, params.a)
    ens = mc.run_ensemble(params, n, R, base_seed=4243)
    rep = mc.clt_check(ens)
    exact_var = tables["G2"][n] / (n * math.log(n))
    se = exact_var * math.sqrt(2.0 / R)
    assert abs(rep.pooled_var - exact_var) < 5.0 * se
    assert rep.regime is Regime.CRITICAL


def test_clt_check_refuses_superdiffusive():
    ens = mc.run_ensemble(ModelParams.create(1, 0.9), 50, R=3, base_seed=1)
    assert ens.normality is None
    with pytest.raises(ValueError):
        mc.clt_check(ens)


def test_offline_functionals_match_online_kernel():
    """qsl_functional / lil_statistic on records == in-kernel accumulation."""
    for params, seed in ((ModelParams.create(2, 0.55), 14),
                        (ModelParams.create(1, 0.75), 15)):
        n = 4000
        rec = run_path(params, n, seed=seed)
        online = mc.path_functionals(params, n, seed=seed)
        off_q = mc.qsl_functional(rec)
        assert off_q.trace == pytest.approx(online.qsl_trace_running, rel=1e-9)
        np.testing.assert_allclose(off_q.matrix, online.qsl_running, rtol=1e-9)
        off_l = mc.lil_statistic(rec)
        assert off_l.max_stat == pytest.approx(online.lil_running_max, rel=1e-9)


def test_functionals_validate_input():
    params = ModelParams.create(1, 0.5)
    rec = run_path(params, 50, seed=2, record_every=5)
    with pytest.raises(ValueError):
        mc.qsl_functional(rec)  # needs full resolution
    with pytest.raises(ValueError):
        mc.qsl_functional(run_path(params, 5, seed=2))
    sup = run_path(ModelParams.create(1, 0.9), 100, seed=2)
    with pytest.raises(ValueError):
        mc.lil_statistic(sup)
    with pytest.raises(ValueError):
        mc.path_functionals(params, 5, seed=2)


def test_path_functionals_superdiffusive_mode():
    params = ModelParams.create(1, 0.85)
    n = 2000
    f = mc.path_functionals(params, n, seed=7)
    assert f.lil_running_max is None and f.lil_max_at is None
    rec = run_path(params, n, seed=7)
    np.testing.assert_allclose(f.super_G_hat, rec.G[-1] / n ** params.a,
                               rtol=1e-12)


def test_qsl_ensemble_mean_tracks_exact_recursion():
    params = ModelParams.create(1, 0.5)
    n, paths = 3000, 200
    fe = mc.ensemble_functionals(params, n, paths, base_seed=999)
    vals = fe.qsl_trace[:, -1]
    exact = oracles.exact_qsl_mean(n, params.a, critical=False)
    se = vals.std(ddof=1) / math.sqrt(paths)
    assert abs(vals.mean() - exact) < 5.0 * se
    assert fe.mean_qsl_trace[-1] == pytest.approx(vals.mean())


def test_lil_statistic_threshold():
    params = ModelParams.create(1, 0.5)
    rec = run_path(params, 1000, seed=4)
    stat = mc.lil_statistic(rec)
    assert stat.threshold == mc.LIL_MIN_STEP
    assert stat.max_stat > 0.0
    crit = mc.lil_statistic(run_path(ModelParams.create(1, 0.75), 1000, seed=4))
    assert crit.normalizer_below_one is True


def test_superdiffusive_check_against_exact_moments():
    params = ModelParams.create(1, 0.85)
    n, R = 10 ** 4, 2000
    rep = mc.superdiffusive_check(params, n, R, base_seed=808)
    # mean of the scaled position is 0 by symmetry
    assert np.all(np.abs(rep.mean_G_hat) < 4.0 * rep.mean_se)
    # exact finite-n second moment from the recursion tables
    tables = oracles.exact_moment_tables(n, params.a)
    exact = tables["G2"][n] / n ** (2.0 * params.a)
    assert abs(rep.second_pooled - exact) < 5.0 * rep.second_se
    # L2 curve decreases to exactly zero at the terminal horizon
    ms = [v for _, v in rep.ms_curve]
    assert ms[-1] == 0.0
    assert all(x > y for x, y in zip(ms, ms[1:]))
    with pytest.raises(ValueError):
        mc.superdiffusive_check(D1, 1000, 10, base_seed=1)


def test_slln_quantiles_decay():
    rep = mc.slln_check(D1, [100, 1000, 10000], R=300, base_seed=606)
    assert rep.normalizer == "m"
    assert rep.decreasing
    assert np.all(np.diff(rep.q99) < 0)
    crit = mc.slln_check(ModelParams.create(1, 0.75), [100, 1000, 10000],
                         R=300, base_seed=607)
    assert crit.normalizer == "sqrt(m) log m"


def test_resample_frequencies_match_distribution():
    from erwalk.core import increment_distribution
    params = ModelParams.create(2, 0.8)
    state = WalkState(2, seed=3)
    for _ in range(40):
        step(state, params)
    freq = mc.resample_step_frequencies(state, params, resamples=200000, seed=6)
    probs = increment_distribution(state, params)
    assert np.abs(freq - probs).sum() < 4.0 / math.sqrt(200000) * 2.0


def test_ks_calibration_near_nominal_level():
    rate = mc.ks_gaussian_rejection_rate(batches=200, samples=400, level=0.05,
                                         seed=11)
    assert 0.005 <= rate <= 0.12
