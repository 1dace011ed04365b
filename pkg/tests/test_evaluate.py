import numpy as np
import pytest

from ankerrank.evaluate import (
    MethodConfig,
    average_ranks,
    competition_ranks,
    format_results_table,
    ranking_loss,
    results_to_csv,
    run_experiment,
    score_external_orderings,
)
from oracles import brute_force_ranking_loss
from synthetic import make_linear_dataset


# ---------------------------------------------------------------------------
# Ranking loss

def test_loss_of_identical_rankings_is_zero():
    pi = np.array([2, 0, 1, 3])
    assert ranking_loss(pi, pi) == 0.0


def test_loss_of_reversed_ranking_is_one():
    pi = np.array([0, 1, 2, 3])
    assert ranking_loss(pi, pi[::-1]) == 1.0


def test_single_adjacent_swap_at_three_items():
    assert ranking_loss(np.array([0, 1, 2]), np.array([1, 0, 2])) == pytest.approx(1 / 3)


def test_loss_is_symmetric():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 10))
        pi, pi_star = rng.permutation(n), rng.permutation(n)
        assert ranking_loss(pi, pi_star) == ranking_loss(pi_star, pi)


def test_loss_is_invariant_under_common_relabeling():
    rng = np.random.default_rng(1)
    n = 8
    pi, pi_star = rng.permutation(n), rng.permutation(n)
    relabel = rng.permutation(n)
    assert ranking_loss(pi[relabel], pi_star[relabel]) == ranking_loss(pi, pi_star)


def test_loss_numerator_is_integral():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(2, 12))
        loss = ranking_loss(rng.permutation(n), rng.permutation(n))
        assert 0.0 <= loss <= 1.0
        scaled = loss * n * (n - 1) / 2
        assert scaled == pytest.approx(round(scaled), abs=1e-9)


def test_loss_matches_brute_force_oracle():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(2, 13))
        pi, pi_star = rng.permutation(n), rng.permutation(n)
        assert ranking_loss(pi, pi_star) == pytest.approx(brute_force_ranking_loss(pi, pi_star))


def test_loss_input_validation():
    with pytest.raises(ValueError):
        ranking_loss(np.array([0, 1]), np.array([0, 1, 2]))
    with pytest.raises(ValueError):
        ranking_loss(np.array([0]), np.array([0]))


# ---------------------------------------------------------------------------
# Rank bookkeeping

def test_competition_ranks_share_lower_rank_on_ties():
    assert np.array_equal(competition_ranks([0.05, 0.02, 0.02]), [3, 1, 1])
    assert np.array_equal(competition_ranks([0.1, 0.2, 0.3]), [1, 2, 3])
    assert np.array_equal(competition_ranks([0.5]), [1])


def test_average_ranks():
    assert np.allclose(average_ranks(np.ones((6, 1))), [1.0])
    assert np.allclose(average_ranks(np.array([[1.0, 2.0], [2.0, 1.0]])), [1.5, 1.5])
    assert np.allclose(average_ranks(np.array([[1.0, 2.0]])), [1.0, 2.0])
    with pytest.raises(ValueError, match="missing"):
        average_ranks(np.array([[1.0, np.nan]]))


# ---------------------------------------------------------------------------
# Benchmark protocol

@pytest.fixture(scope="module")
def small_problem():
    train = make_linear_dataset(3, 8, 3, seed=4)
    test = make_linear_dataset(2, 8, 3, seed=5)
    return train, test


def test_deterministic_method_has_zero_std(small_problem):
    train, test = small_problem
    results = run_experiment(train, test, ["err"], repeats=5, seed=6)
    assert results[0].std_loss == 0.0
    assert np.all(results[0].losses == results[0].losses[0])


def test_run_experiment_stores_one_loss_per_repeat(small_problem):
    train, test = small_problem
    results = run_experiment(train, test, ["err", "able2rank"], repeats=20, seed=7)
    for result in results:
        assert result.losses.shape == (20,)
        assert result.mean_loss == pytest.approx(float(result.losses.mean()))
        assert result.std_loss == pytest.approx(float(result.losses.std(ddof=1)))


def test_run_experiment_assigns_competition_ranks(small_problem):
    train, test = small_problem
    results = run_experiment(train, test, ["err", "able2rank"], repeats=2, seed=8)
    means = [r.mean_loss for r in results]
    assert [r.rank for r in results] == competition_ranks(means).tolist()


def test_run_experiment_is_reproducible(small_problem):
    train, test = small_problem
    config = MethodConfig(C=1.0)
    a = run_experiment(train, test, ["anker", "ranksvm"], repeats=2, seed=9, config=config)
    b = run_experiment(train, test, ["anker", "ranksvm"], repeats=2, seed=9, config=config)
    assert all(np.array_equal(x.losses, y.losses) for x, y in zip(a, b))
    assert results_to_csv(a, "p") == results_to_csv(b, "p")


def test_run_experiment_method_order_does_not_leak_randomness(small_problem):
    # each method draws from its own spawned stream, so adding a method in
    # front must not change another method's losses
    train, test = small_problem
    config = MethodConfig(C=1.0)
    alone = run_experiment(train, test, ["ranksvm"], repeats=2, seed=10, config=config)
    # spawn order is by position, so keep ranksvm in the same slot
    paired = run_experiment(train, test, ["ranksvm", "err"], repeats=2, seed=10, config=config)
    assert np.array_equal(alone[0].losses, paired[0].losses)


def test_run_experiment_rejects_unknown_method(small_problem):
    train, test = small_problem
    with pytest.raises(ValueError, match="unsupported method"):
        run_experiment(train, test, ["ranknet"], repeats=1, seed=0)


def test_results_csv_format(small_problem):
    train, test = small_problem
    results = run_experiment(train, test, ["err"], repeats=2, seed=11)
    text = results_to_csv(results, "train->test")
    lines = text.strip().split("\n")
    assert lines[0] == "problem,method,mean,std,rank"
    fields = lines[1].split(",")
    assert fields[0] == "train->test" and fields[1] == "err"
    float(fields[2]), float(fields[3]), int(fields[4])


def test_format_results_table_mentions_all_methods(small_problem):
    train, test = small_problem
    results = run_experiment(train, test, ["err", "able2rank"], repeats=2, seed=12)
    table = format_results_table(results, "train->test")
    assert "err" in table and "able2rank" in table and "+-" in table


# ---------------------------------------------------------------------------
# Externally produced rankings

def test_score_external_orderings_against_truth(small_problem):
    _, test = small_problem
    perfect = [q.ordering.tolist() for q in test.queries]
    assert score_external_orderings(test, perfect) == 0.0
    reversed_all = [q.ordering.tolist()[::-1] for q in test.queries]
    assert score_external_orderings(test, reversed_all) == 1.0


def test_score_external_orderings_validation(small_problem):
    _, test = small_problem
    with pytest.raises(ValueError, match="test queries"):
        score_external_orderings(test, [[0, 1]])
    bad = [q.ordering.tolist() for q in test.queries]
    bad[0][0] = bad[0][1]
    with pytest.raises(ValueError, match="not a permutation"):
        score_external_orderings(test, bad)


def test_external_method_joins_the_ranking(small_problem):
    train, test = small_problem
    perfect = [q.ordering.tolist() for q in test.queries]
    results = run_experiment(train, test, ["err", "oracle"], repeats=3, seed=13,
                             externals={"oracle": perfect})
    by_name = {r.method: r for r in results}
    assert by_name["oracle"].mean_loss == 0.0
    assert by_name["oracle"].std_loss == 0.0
    assert by_name["oracle"].rank == 1
    assert by_name["oracle"].losses.shape == (3,)
