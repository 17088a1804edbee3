"""Walk mechanics: sampler law, regime classification, path recording."""

from fractions import Fraction

import numpy as np
import pytest

from erwalk import core
from erwalk.core import (
    ModelParams, Regime, WalkState, classify_regime, conditional_mean_increment,
    critical_p, direction_vector, fundamental_a, increment_distribution,
    increment_probabilities, run_path, step,
)

import oracles


def test_fundamental_a_values():
    assert fundamental_a(1, 1.0) == 1.0
    assert fundamental_a(1, 0.0) == -1.0
    assert fundamental_a(1, 0.5) == 0.0
    assert fundamental_a(2, 0.5) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert fundamental_a(3, Fraction(7, 12)) == 0.5
    # uniform walk: p = 1/(2d) kills the memory term
    for d in (1, 2, 3, 5):
        assert fundamental_a(d, Fraction(1, 2 * d)) == 0.0


def test_parameter_validation():
    with pytest.raises(ValueError):
        fundamental_a(0, 0.5)
    with pytest.raises(ValueError):
        fundamental_a(-2, 0.5)
    with pytest.raises(ValueError):
        fundamental_a(True, 0.5)
    with pytest.raises(ValueError):
        fundamental_a(1, -0.1)
    with pytest.raises(ValueError):
        fundamental_a(1, 1.0000001)
    with pytest.raises(ValueError):
        critical_p(0)


def test_critical_p_values():
    assert critical_p(1) == 0.75
    assert critical_p(2) == 0.625
    assert critical_p(3) == pytest.approx(7.0 / 12.0, abs=1e-16)


def test_regime_classification_exact_rationals():
    assert classify_regime(1, Fraction(3, 4)) is Regime.CRITICAL
    assert classify_regime(1, Fraction(3, 4) - Fraction(1, 10 ** 12)) is Regime.DIFFUSIVE
    assert classify_regime(1, Fraction(3, 4) + Fraction(1, 10 ** 12)) is Regime.SUPERDIFFUSIVE
    assert classify_regime(3, Fraction(7, 12)) is Regime.CRITICAL
    assert classify_regime(2, 1) is Regime.SUPERDIFFUSIVE
    assert classify_regime(2, 0) is Regime.DIFFUSIVE


def test_regime_classification_float_window():
    # floats within the tiny window around the critical value count as critical
    assert classify_regime(1, 0.75) is Regime.CRITICAL
    assert classify_regime(3, 7.0 / 12.0) is Regime.CRITICAL
    assert classify_regime(1, 0.75 + 1e-9) is Regime.SUPERDIFFUSIVE
    assert classify_regime(1, 0.75 - 1e-9) is Regime.DIFFUSIVE
    band = core.CRITICAL_BAND
    assert classify_regime(1, 0.75 + 2.0 * band) is Regime.SUPERDIFFUSIVE


def test_model_params_create():
    params = ModelParams.create(2, Fraction(5, 8))
    assert params.d == 2
    assert params.p == 0.625
    assert params.a == 0.5
    assert params.regime is Regime.CRITICAL


def test_direction_vectors():
    d = 3
    vecs = [direction_vector(v, d) for v in range(2 * d)]
    for j in range(d):
        assert vecs[j][j] == 1 and np.count_nonzero(vecs[j]) == 1
        assert vecs[d + j][j] == -1 and np.count_nonzero(vecs[d + j]) == 1
    with pytest.raises(ValueError):
        direction_vector(6, 3)
    with pytest.raises(ValueError):
        direction_vector(-1, 3)


def test_increment_probabilities_uniform_start():
    for d in (1, 2, 4):
        probs = increment_probabilities(np.zeros(2 * d, dtype=np.int64), 0, d, 0.7)
        assert probs == [1.0 / (2 * d)] * (2 * d)


def test_increment_distribution_matches_enumeration():
    """Marginal sampler law == exact enumeration over (past index, copy/deviate)."""
    rng = np.random.default_rng(4242)
    for d, p in ((1, Fraction(3, 5)), (2, Fraction(1, 4)), (3, Fraction(9, 10))):
        history = [int(v) for v in rng.integers(0, 2 * d, size=40)]
        counts = np.bincount(history, minlength=2 * d)
        exact = oracles.enumerate_increment_distribution(history, d, p)
        rational = increment_probabilities(
            [Fraction(int(c)) for c in counts], len(history), d, p)
        for v in range(2 * d):
            assert rational[v] == exact[v]
        assert sum(rational) == 1
        floats = increment_probabilities(counts, len(history), d, float(p))
        for v in range(2 * d):
            assert abs(floats[v] - float(exact[v])) < 5e-15


def test_conditional_mean_matches_distribution():
    """Mean of the sampler law equals the closed-form drift (a/n) S_n."""
    params = ModelParams.create(2, 0.7)
    state = WalkState(2, seed=99)
    for _ in range(60):
        step(state, params)
    probs = increment_distribution(state, params)
    mean_from_law = sum(probs[v] * direction_vector(v, 2) for v in range(4))
    drift = conditional_mean_increment(state, params)
    np.testing.assert_allclose(mean_from_law, drift, atol=1e-12)
    np.testing.assert_allclose(drift, (params.a / state.n) * state.S, atol=0)


def test_conditional_mean_needs_steps():
    params = ModelParams.create(1, 0.5)
    state = WalkState(1, seed=0)
    with pytest.raises(ValueError):
        conditional_mean_increment(state, params)
    with pytest.raises(ValueError):
        state.G


def test_step_updates_counts_and_position():
    params = ModelParams.create(3, 0.8)
    state = WalkState(3, seed=7)
    pos = np.zeros(3, dtype=np.int64)
    for k in range(1, 201):
        before = state.counts
        step(state, params)
        diff = state.counts - before
        assert diff.sum() == 1 and diff.max() == 1
        v = int(np.argmax(diff))
        pos += direction_vector(v, 3)
        assert state.n == k
        assert state.counts.sum() == k
        np.testing.assert_array_equal(state.S, pos)
    ax = state.counts[:3] + state.counts[3:]
    np.testing.assert_allclose(state.Sigma, np.diag(ax.astype(float)))


def test_step_rejects_mismatched_dimension():
    params = ModelParams.create(2, 0.5)
    with pytest.raises(ValueError):
        step(WalkState(3, seed=1), params)


def test_memory_strength_minus_one_refused():
    # d=1 with p=0 drives the gain recurrence through a division by zero
    params = ModelParams.create(1, 0.0)
    with pytest.raises(ValueError):
        run_path(params, 10, seed=1)
    with pytest.raises(ValueError):
        step(WalkState(1, seed=1), params)
    # p=0 is fine in higher dimension
    rec = run_path(ModelParams.create(2, 0.0), 50, seed=1)
    assert rec.n[-1] == 50


def test_persistent_walk_goes_straight():
    # p=1 copies a past step forever, so every step repeats the first one
    params = ModelParams.create(1, 1.0)
    rec = run_path(params, 100, seed=3)
    s = rec.S[:, 0]
    assert abs(s[-1]) == 100
    np.testing.assert_array_equal(np.abs(s), np.arange(1, 101))
    # gain sequence collapses to 1/n, so M = S/n is frozen at the first step
    np.testing.assert_allclose(rec.a_n, 1.0 / rec.n, rtol=1e-12)
    np.testing.assert_allclose(rec.M[:, 0], s / rec.n, rtol=1e-12)
    np.testing.assert_allclose(rec.b_n, rec.n * (rec.n + 1) / 2.0, rtol=1e-12)


def test_run_path_center_of_mass_is_position_average():
    params = ModelParams.create(2, 0.6)
    rec = run_path(params, 500, seed=11)
    csum = np.cumsum(rec.S.astype(np.float64), axis=0)
    expected = csum / rec.n[:, None]
    np.testing.assert_allclose(rec.G, expected, rtol=1e-12, atol=1e-12)


def test_run_path_determinism_and_seed_sensitivity():
    params = ModelParams.create(2, 0.7)
    r1 = run_path(params, 300, seed=42)
    r2 = run_path(params, 300, seed=42)
    np.testing.assert_array_equal(r1.S, r2.S)
    assert r1.G.tobytes() == r2.G.tobytes()
    assert r1.M.tobytes() == r2.M.tobytes()
    r3 = run_path(params, 300, seed=43)
    assert (r1.S != r3.S).any()


def test_run_path_stride_subsamples_the_same_path():
    params = ModelParams.create(2, 0.55)
    full = run_path(params, 1000, seed=5)
    strided = run_path(params, 1000, seed=5, record_every=7)
    # same walk, recorded sparsely; the terminal step is always included
    expect_n = list(range(7, 1001, 7)) + [1000]
    np.testing.assert_array_equal(strided.n, expect_n)
    idx = strided.n - 1
    np.testing.assert_array_equal(strided.S, full.S[idx])
    assert strided.G.tobytes() == full.G[idx].tobytes()
    assert strided.M.tobytes() == full.M[idx].tobytes()
    assert strided.N.tobytes() == full.N[idx].tobytes()
    assert not strided.full_resolution and full.full_resolution


def test_run_path_row_count_examples():
    params = ModelParams.create(1, 0.5)
    assert run_path(params, 100, seed=1).n.shape == (100,)
    assert run_path(params, 100, seed=1, record_every=9).n.shape == (12,)
    with pytest.raises(ValueError):
        run_path(params, 0, seed=1)
    with pytest.raises(ValueError):
        run_path(params, 10, seed=1, record_every=0)


def test_detailed_runs_carry_quadratic_variation():
    params = ModelParams.create(2, 0.6)
    rec = run_path(params, 50, seed=9, detailed=True)
    assert rec.qv is not None and rec.qv.shape == (50, 3, 2, 2)
    assert np.isfinite(rec.qv).all()
    assert run_path(params, 50, seed=9).qv is None


def test_state_track_snapshot_is_consistent():
    params = ModelParams.create(2, 0.7)
    state = WalkState(2, seed=21)
    for _ in range(80):
        step(state, params)
    track = state.track
    np.testing.assert_array_equal(track.M, state.M)
    np.testing.assert_array_equal(track.M_sum, state.M_innovation_sum)
    np.testing.assert_array_equal(track.N, state.N)
    assert track.a_n == state.a_n and track.b_n == state.b_n
    assert track.tau == track.sum_a2_b2
