from __future__ import annotations

import math

import numpy as np
import pytest

import nodesync.queue_model as qm
from nodesync.queue_model import (
    RateParams,
    TailEstimate,
    estimate_tail,
    fit_decay_slope,
    poisson_counts,
    sample_poisson,
    simulate_walk,
    step_queue,
)
from nodesync.seeding import derive_seed, make_rng


def test_rate_params_require_stability():
    RateParams(lam=3.0, mu=6.0)
    with pytest.raises(ValueError):
        RateParams(lam=0.0, mu=6.0)
    with pytest.raises(ValueError):
        RateParams(lam=-1.0, mu=6.0)
    with pytest.raises(ValueError):
        RateParams(lam=3.0, mu=3.0)


def test_sample_poisson_rejects_unsupported_rates():
    rng = make_rng(1)
    with pytest.raises(ValueError):
        sample_poisson(0.0, rng)
    with pytest.raises(ValueError):
        sample_poisson(-2.0, rng)
    with pytest.raises(ValueError):
        sample_poisson(30.5, rng)


def test_sample_poisson_tiny_rate_is_almost_surely_zero():
    rng = make_rng(7)
    assert all(sample_poisson(1e-9, rng) == 0 for _ in range(1000))


def test_sample_poisson_matches_poisson_moments():
    rng = make_rng(2024)
    n = 1_000_000
    draws = np.array([sample_poisson(3.0, rng) for _ in range(n)])
    assert draws.mean() == pytest.approx(3.0, abs=0.01)
    assert draws.var(ddof=1) == pytest.approx(3.0, abs=0.05)


def test_sample_poisson_deterministic_given_stream():
    a = [sample_poisson(3.0, make_rng(99)) for _ in range(1)]
    b = [sample_poisson(3.0, make_rng(99)) for _ in range(1)]
    assert a == b
    rng1, rng2 = make_rng(5), make_rng(5)
    assert [sample_poisson(6.0, rng1) for _ in range(200)] == [
        sample_poisson(6.0, rng2) for _ in range(200)
    ]


def test_poisson_counts_matches_scalar_inversion():
    block = poisson_counts(3.0, 300, make_rng(11))
    rng = make_rng(11)
    scalar = [sample_poisson(3.0, rng) for _ in range(300)]
    assert block.tolist() == scalar


def test_poisson_counts_large_rate_moments():
    draws = poisson_counts(3000.0, 20_000, make_rng(3))
    assert draws.mean() == pytest.approx(3000.0, abs=2.0)
    assert draws.var(ddof=1) == pytest.approx(3000.0, rel=0.05)


@pytest.mark.parametrize(
    "q, a, r, expected",
    [(0, 0, 0, 0), (2, 3, 4, 1), (1, 0, 5, 0), (10, 2, 3, 9)],
)
def test_step_queue_examples(q, a, r, expected):
    assert step_queue(q, a, r) == expected


def test_step_queue_rejects_negative_inputs():
    for bad in [(-1, 0, 0), (0, -1, 0), (0, 0, -1)]:
        with pytest.raises(ValueError):
            step_queue(*bad)


def test_step_queue_positive_part_identity():
    rng = make_rng(13)
    for _ in range(500):
        q, a, r = (int(v) for v in rng.integers(0, 50, size=3))
        out = step_queue(q, a, r)
        assert out >= 0
        assert out >= q + a - r
        assert out == max(q + a - r, 0)


def test_simulate_walk_basics():
    params = RateParams(lam=3.0, mu=6.0)
    result = simulate_walk(params, 500, make_rng(1))
    assert result.sup_backlog >= 0
    assert result.horizon == 500
    with pytest.raises(ValueError):
        simulate_walk(params, 0, make_rng(1))


def test_simulate_walk_draw_order_contract():
    params = RateParams(lam=3.0, mu=6.0)
    horizon = 200
    result = simulate_walk(params, horizon, make_rng(77))
    rng = make_rng(77)
    arrivals = poisson_counts(3.0, horizon, rng)
    responses = poisson_counts(6.0, horizon, rng)
    walk = np.cumsum(arrivals - responses)
    assert result.sup_backlog == max(int(walk.max()), 0)


def test_simulate_walk_overwhelming_response_rate():
    # Drift of -2997 per slot: the first-slot arrivals never beat the
    # responses, so the supremum stays at the floor.
    params = RateParams(lam=3.0, mu=3000.0)
    for seed in range(10):
        assert simulate_walk(params, 10_000, make_rng(seed)).sup_backlog == 0


def test_estimate_tail_shares_one_run_set():
    params = RateParams(lam=3.0, mu=6.0)
    estimates = estimate_tail(params, [0, 3, 6], runs=2000, horizon=300, master_seed=42)
    p = [e.p_hat for e in estimates]
    assert 0 < p[0] < 1
    assert p[0] >= p[1] >= p[2]
    for e in estimates:
        assert e.runs == 2000
        assert e.hits == round(e.p_hat * e.runs)
        assert e.std_err == pytest.approx(math.sqrt(e.p_hat * (1 - e.p_hat) / e.runs))


def test_estimate_tail_validation():
    params = RateParams(lam=3.0, mu=6.0)
    with pytest.raises(ValueError):
        estimate_tail(params, [], runs=10, horizon=10, master_seed=0)
    with pytest.raises(ValueError):
        estimate_tail(params, [3, 3], runs=10, horizon=10, master_seed=0)
    with pytest.raises(ValueError):
        estimate_tail(params, [5, 3], runs=10, horizon=10, master_seed=0)
    with pytest.raises(ValueError):
        estimate_tail(params, [1], runs=0, horizon=10, master_seed=0)
    with pytest.raises(ValueError):
        estimate_tail(params, [1], runs=10, horizon=0, master_seed=0)


def test_estimate_tail_equals_independent_walks():
    params = RateParams(lam=3.0, mu=6.0)
    runs, horizon = 40, 120
    estimates = estimate_tail(params, [2, 5], runs=runs, horizon=horizon, master_seed=9)
    sups = [
        simulate_walk(params, horizon, make_rng(derive_seed(9, i))).sup_backlog
        for i in range(runs)
    ]
    assert estimates[0].hits == sum(s > 2 for s in sups)
    assert estimates[1].hits == sum(s > 5 for s in sups)


def test_estimate_tail_independent_of_batch_size(monkeypatch):
    params = RateParams(lam=3.0, mu=6.0)
    baseline = estimate_tail(params, [1, 4], runs=300, horizon=100, master_seed=3)
    monkeypatch.setattr(qm, "_WALK_BATCH", 7)
    rebatched = estimate_tail(params, [1, 4], runs=300, horizon=100, master_seed=3)
    assert baseline == rebatched


def test_estimate_tail_deterministic_and_seed_sensitive():
    params = RateParams(lam=3.0, mu=6.0)
    first = estimate_tail(params, [2], runs=500, horizon=100, master_seed=10)
    second = estimate_tail(params, [2], runs=500, horizon=100, master_seed=10)
    other = estimate_tail(params, [2], runs=500, horizon=100, master_seed=11)
    assert first == second
    assert first != other


def test_mean_supremum_shrinks_with_faster_responses():
    runs, horizon = 10_000, 200
    means = []
    for mu in (5.0, 8.0):
        params = RateParams(lam=3.0, mu=mu)
        sups = [
            simulate_walk(params, horizon, make_rng(derive_seed(21, i))).sup_backlog
            for i in range(runs)
        ]
        means.append(sum(sups) / runs)
    assert means[1] < means[0]


def test_decay_slope_recovered_from_moderate_sample():
    params = RateParams(lam=3.0, mu=6.0)
    estimates = estimate_tail(
        params, list(range(2, 9)), runs=20_000, horizon=1500, master_seed=5
    )
    fit = fit_decay_slope(estimates)
    assert fit.slope == pytest.approx(math.log(2.0), rel=0.20)


def _synthetic(gammas, rate):
    return [
        TailEstimate(gamma=g, runs=1, hits=1, p_hat=math.exp(-rate * g), std_err=0.0)
        for g in gammas
    ]


def test_fit_decay_slope_exact_on_synthetic_exponential():
    fit = fit_decay_slope(_synthetic([1, 2, 3, 4, 5], 0.7))
    assert fit.slope == pytest.approx(0.7, abs=1e-12)
    assert fit.n_used == 5
    assert fit.n_excluded == 0


def test_fit_decay_slope_constant_input_gives_zero():
    estimates = [
        TailEstimate(gamma=g, runs=1, hits=1, p_hat=0.25, std_err=0.0) for g in (1.0, 4.0)
    ]
    assert fit_decay_slope(estimates).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_decay_slope_excludes_zero_cells():
    estimates = _synthetic([1, 2, 3], 0.5)
    estimates.append(TailEstimate(gamma=9.0, runs=10, hits=0, p_hat=0.0, std_err=0.0))
    fit = fit_decay_slope(estimates)
    assert fit.n_excluded == 1
    assert fit.slope == pytest.approx(0.5, abs=1e-12)


def test_fit_decay_slope_needs_two_usable_points():
    lone = _synthetic([1], 0.5)
    with pytest.raises(ValueError):
        fit_decay_slope(lone)
    lone.append(TailEstimate(gamma=2.0, runs=10, hits=0, p_hat=0.0, std_err=0.0))
    with pytest.raises(ValueError):
        fit_decay_slope(lone)
