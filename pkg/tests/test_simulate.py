import numpy as np
import pytest

from access_time import (
    ChainSpec,
    ChainSpecError,
    ProbabilityVector,
    build_chain,
    hitting_time_matrix,
    sample_trajectory,
    simulate_rule,
    tv_distance,
)
from conftest import dirac


def test_tv_examples():
    p = ProbabilityVector(np.array([0.5, 0.5]))
    assert tv_distance(p, p) == 0.0
    assert tv_distance(dirac(0, 3), dirac(1, 3)) == 1.0
    q = ProbabilityVector(np.array([0.25, 0.75]))
    assert tv_distance(p, q) == 0.25
    with pytest.raises(ChainSpecError, match="dimension"):
        tv_distance(p, dirac(0, 3))


def test_trajectory_start_equals_stop():
    chain = build_chain(ChainSpec("complete", n=3))
    assert sample_trajectory(chain, 2, 2, seed=5) == 0


def test_trajectory_leaf_to_center_is_one_step():
    chain = build_chain(ChainSpec("star", n=4))
    assert all(sample_trajectory(chain, 1, 0, seed=s) == 1 for s in range(200))


def test_trajectory_deterministic_given_seed():
    chain = build_chain(ChainSpec("path", n=6))
    runs = [sample_trajectory(chain, 0, 6, seed=42) for _ in range(3)]
    assert runs[0] == runs[1] == runs[2]
    assert sample_trajectory(chain, 0, 6, seed=43) >= 6  # needs at least n steps


def test_trajectory_mean_matches_hitting_time():
    chain = build_chain(ChainSpec("complete", n=3))
    lengths = np.array([sample_trajectory(chain, 0, 1, seed=s) for s in range(20_000)])
    stderr = lengths.std(ddof=1) / np.sqrt(lengths.size)
    assert abs(lengths.mean() - 3.0) <= 4.0 * stderr


def test_simulate_rule_complete_graph():
    chain = build_chain(ChainSpec("complete", n=3))
    nu = ProbabilityVector(np.full(4, 0.25))
    report = simulate_rule(chain, dirac(0, 4), nu, samples=50_000, seed=11)
    assert report.theoretical_mean == pytest.approx(2.25, rel=1e-12)
    assert report.consistent
    assert report.tv_to_target <= 0.02
    # the naive rule is strictly slower than the optimal transport value 0.75
    assert report.mean_t > 0.75


def test_simulate_rule_fixed_point_stops_immediately():
    chain = build_chain(ChainSpec("star", n=4))
    report = simulate_rule(chain, dirac(0, 5), dirac(0, 5), samples=2_000, seed=3)
    assert report.mean_t == 0.0 and report.stderr == 0.0
    assert report.theoretical_mean == 0.0
    assert report.consistent
    np.testing.assert_array_equal(report.empirical_law.weights, dirac(0, 5).weights)


def test_simulate_rule_suboptimal_when_mu_equals_nu():
    chain = build_chain(ChainSpec("complete", n=4))
    uni = ProbabilityVector(np.full(5, 0.2))
    report = simulate_rule(chain, uni, uni, samples=20_000, seed=9)
    assert report.theoretical_mean > 0.0  # H(mu, mu) = 0, the rule is not optimal
    assert report.consistent


def test_simulate_rule_reproducible_bit_for_bit():
    chain = build_chain(ChainSpec("birth_death", n=6, p=0.3))
    mu, nu = dirac(0, 7), ProbabilityVector(np.arange(1.0, 8.0))
    a = simulate_rule(chain, mu, nu, samples=5_000, seed=77)
    b = simulate_rule(chain, mu, nu, samples=5_000, seed=77)
    assert a.mean_t == b.mean_t and a.stderr == b.stderr
    assert a.tv_to_target == b.tv_to_target
    np.testing.assert_array_equal(a.empirical_law.weights, b.empirical_law.weights)
    c = simulate_rule(chain, mu, nu, samples=5_000, seed=78)
    assert c.mean_t != a.mean_t


def test_simulate_rule_stopped_law_is_target():
    chain = build_chain(ChainSpec("winning_streak", n=5))
    nu = ProbabilityVector(np.array([0.4, 0.1, 0.1, 0.1, 0.3]))
    report = simulate_rule(chain, dirac(2, 5), nu, samples=50_000, seed=21)
    assert report.tv_to_target <= 0.02
    assert report.consistent


def test_simulate_rule_validation():
    chain = build_chain(ChainSpec("complete", n=3))
    uni = ProbabilityVector(np.full(4, 0.25))
    with pytest.raises(ChainSpecError, match="unknown stopping rule"):
        simulate_rule(chain, uni, uni, rule="optimal")
    with pytest.raises(ChainSpecError, match="at least"):
        simulate_rule(chain, uni, uni, samples=10)
    with pytest.raises(ChainSpecError, match="state space"):
        simulate_rule(chain, dirac(0, 3), uni)


def test_sim_report_json_shape():
    chain = build_chain(ChainSpec("complete", n=3))
    uni = ProbabilityVector(np.full(4, 0.25))
    report = simulate_rule(chain, dirac(0, 4), uni, samples=1_000, seed=1)
    payload = report.to_json()
    assert set(payload) == {
        "samples",
        "mean_T",
        "stderr",
        "empirical_law",
        "tv_to_target",
        "theoretical_mean",
    }
    assert payload["samples"] == 1_000
    assert len(payload["empirical_law"]) == 4


def test_simulate_rule_reuses_hitting_matrix():
    chain = build_chain(ChainSpec("path", n=5))
    M = hitting_time_matrix(chain)
    nu = ProbabilityVector(np.full(6, 1 / 6))
    a = simulate_rule(chain, dirac(0, 6), nu, samples=2_000, seed=4, hitting=M)
    b = simulate_rule(chain, dirac(0, 6), nu, samples=2_000, seed=4)
    assert a.theoretical_mean == b.theoretical_mean and a.mean_t == b.mean_t
