from __future__ import annotations

import math

import pytest

from nodesync.queue_model import RateParams
from nodesync.sim_harness import (
    CautiousAll,
    Equilibrium,
    FullNode,
    NetSimConfig,
    compare_strategies,
    run_network_sim,
    simulate_detail,
)
from nodesync.sync_game import GameSpec


def _config(m=3, lam=3.0, mu=6.0, capacity=4, n_partial=1, rounds=5000, strategy=None, seed=42):
    nodes = tuple(
        FullNode(params=RateParams(lam=lam, mu=mu), capacity=capacity) for _ in range(m)
    )
    return NetSimConfig(
        full_nodes=nodes,
        n_partial=n_partial,
        strategy=strategy or CautiousAll(),
        rounds=rounds,
        master_seed=seed,
    )


def _combined_error(report, rounds):
    """Quadrature of the realized-rate error and the delta-method error of
    the product-form prediction."""
    s = report.sync_success_rate
    se_realized = math.sqrt(max(s * (1 - s), 1e-12) / rounds)
    fails = [p for p in report.per_node_failure if not math.isnan(p)]
    var_product = 0.0
    for i, p in enumerate(fails):
        rest = math.prod(q for j, q in enumerate(fails) if j != i)
        var_product += (rest**2) * p * (1 - p) / rounds
    return math.sqrt(se_realized**2 + var_product)


def test_huge_capacity_never_fails():
    report = run_network_sim(_config(capacity=10**9, rounds=2000))
    assert report.sync_success_rate == 1.0
    assert report.per_node_failure == (0.0, 0.0, 0.0)
    assert report.predicted_success == 1.0


def test_single_node_success_is_complement_of_failure():
    report = run_network_sim(_config(m=1, mu=3.5, capacity=0, rounds=20_000))
    assert report.sync_success_rate == pytest.approx(1.0 - report.per_node_failure[0])
    assert report.predicted_success == pytest.approx(1.0 - report.per_node_failure[0])


def test_product_form_for_independent_nodes():
    report = run_network_sim(_config(rounds=20_000))
    gap = abs(report.sync_success_rate - report.predicted_success)
    assert gap <= 3 * _combined_error(report, 20_000)


def test_seed_determinism_and_sensitivity():
    first = run_network_sim(_config(rounds=3000, seed=7))
    again = run_network_sim(_config(rounds=3000, seed=7))
    other = run_network_sim(_config(rounds=3000, seed=8))
    assert first == again
    assert first != other


def test_cautious_request_count_is_exact():
    config = _config(n_partial=4, rounds=1000)
    detail = simulate_detail(config)
    assert detail.total_requests == 4 * 3 * 1000


def test_equilibrium_single_sender_requests():
    spec = GameSpec.uniform(3, 0.2, 10.0, 5.0)
    config = _config(n_partial=2, rounds=2000, strategy=Equilibrium(spec=spec))
    detail = simulate_detail(config)
    assert detail.total_requests == 2 * 2000
    assert detail.redundant_responses == 0
    # Nodes outside the equilibrium support never see a request.
    assert math.isnan(detail.report.per_node_failure[1])
    assert math.isnan(detail.report.per_node_failure[2])


def test_equilibrium_sends_everywhere_when_costs_vanish():
    spec = GameSpec.uniform(3, 0.2, 100.0, 1.0)
    config = _config(n_partial=2, rounds=500)
    result = compare_strategies(config, spec)
    assert result.equilibrium_requests == result.cautious_requests


def test_strategy_dominance_on_shared_seeds():
    spec = GameSpec.uniform(3, 0.2, 10.0, 5.0)
    config = _config(n_partial=2, rounds=20_000)
    result = compare_strategies(config, spec)
    assert result.cautious.sync_success_rate >= result.equilibrium.sync_success_rate
    assert result.equilibrium_requests <= result.cautious_requests
    assert result.equilibrium_redundant <= result.cautious_redundant


def test_compare_requires_matching_dimensions():
    spec = GameSpec.uniform(2, 0.2, 10.0, 5.0)
    with pytest.raises(ValueError):
        compare_strategies(_config(m=3), spec)


def test_config_validation():
    with pytest.raises(ValueError):
        _config(rounds=0)
    with pytest.raises(ValueError):
        _config(n_partial=0)
    with pytest.raises(ValueError):
        FullNode(params=RateParams(lam=3.0, mu=6.0), capacity=-1)
    with pytest.raises(ValueError):
        NetSimConfig(
            full_nodes=(),
            n_partial=1,
            strategy=CautiousAll(),
            rounds=10,
            master_seed=0,
        )
    spec = GameSpec.uniform(2, 0.2, 10.0, 5.0)
    with pytest.raises(ValueError):
        _config(m=3, strategy=Equilibrium(spec=spec))


def test_saturated_nodes_fail_every_round():
    # Ten partial nodes add ten requests per round on top of ambient load;
    # every post-arrival backlog overshoots the capacity from round one.
    report = run_network_sim(_config(n_partial=10, rounds=2000))
    assert report.per_node_failure == (1.0, 1.0, 1.0)
    assert report.sync_success_rate == 0.0
    assert report.predicted_success == 0.0
