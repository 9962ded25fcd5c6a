import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from btre import analysis as a
from btre import distributions as d
from btre.streams import ENVIRONMENT, stream
from btre.tournament import enumerate_exact

from conftest import pointmass_sweep, uniform_rank_run


def test_epsilon_examples():
    assert a.epsilon_n(0.0, 0.25, 2000) == pytest.approx(math.sqrt(8 * math.log(2000) / 2000), rel=1e-15)
    assert a.epsilon_n(0.0, 0.25, 2000) == pytest.approx(0.17437, abs=5e-6)
    assert a.epsilon_n(1.0, math.log(2) - 0.5, 10_000) == pytest.approx(0.06905, abs=5e-5)


@given(n=st.integers(2, 10**9))
def test_epsilon_ratio_identity(n):
    ratio = a.epsilon_n(0.0, 0.25, 4 * n) / a.epsilon_n(0.0, 0.25, n)
    assert ratio == pytest.approx(math.sqrt(math.log(4 * n) / (4 * math.log(n))), rel=1e-12)
    assert ratio < 0.5 * math.sqrt(1 + math.log(4) / math.log(n)) * (1 + 1e-12)


def test_epsilon_errors():
    with pytest.raises(ValueError):
        a.epsilon_n(2.0, 0.25, 100)
    with pytest.raises(ValueError):
        a.epsilon_n(0.0, 0.0, 100)
    with pytest.raises(ValueError):
        a.epsilon_n(0.0, 0.25, 1)


def test_mgf_examples():
    exact, lower, upper = a.bernoulli_mgf_bounds(0.5, 0.5)
    assert exact == pytest.approx(math.cosh(0.25), rel=1e-15)
    assert lower == 1.03125
    assert upper == pytest.approx(math.exp(0.0625 * (0.5 + 2 * math.e**2 / 3)), rel=1e-15)
    assert upper == pytest.approx(1.404, abs=5e-4)
    assert a.bernoulli_mgf_bounds(0.7, 0.0) == (1.0, 1.0, 1.0)
    assert a.bernoulli_mgf_bounds(0.0, 0.3) == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        a.bernoulli_mgf_bounds(1.5, 0.3)
    with pytest.raises(ValueError):
        a.bernoulli_mgf_bounds(0.5, -0.1)


@given(a_=st.floats(0, 1), p=st.floats(0, 1))
def test_mgf_upper_bound_everywhere(a_, p):
    exact, _, upper = a.bernoulli_mgf_bounds(a_, p)
    assert exact <= upper


@given(a_=st.floats(0, 1), p=st.floats(0, 0.5))
def test_mgf_lower_bound_up_to_one_half(a_, p):
    exact, lower, _ = a.bernoulli_mgf_bounds(a_, p)
    assert lower <= exact * (1 + 1e-15)


def test_mgf_lower_bound_fails_above_one_half():
    exact, lower, _ = a.bernoulli_mgf_bounds(1.0, 0.75)
    assert exact == pytest.approx(0.75 * math.exp(0.25) + 0.25 * math.exp(-0.75), rel=1e-15)
    assert lower == 1.09375 > exact
    low_bad, up_bad = a.sandwich_violation_counts(50)
    assert up_bad == 0
    assert low_bad == a.sandwich_violations(50) > 0


def test_hoeffding_examples():
    assert a.hoeffding_score_bound([1, 1, 1, 1], 1.0) == pytest.approx(-0.5, abs=1e-15)
    assert a.hoeffding_score_bound([1, 1, 1, 1], 1e12) < -1e6
    with pytest.raises(ValueError):
        a.hoeffding_score_bound([1, 1], 0.0)


def test_bounded_difference_examples():
    bound, radius = a.bounded_difference_tail(99, math.log(100))
    assert bound == pytest.approx(0.01, rel=1e-15)
    assert radius == pytest.approx(math.sqrt(99 * math.log(100) / 2), rel=1e-15)
    assert a.bounded_difference_tail(10, 1e-12)[0] == pytest.approx(1.0)


def test_concentration_check_small():
    checks = a.concentration_check(np.ones(30), [1.0, 2.0], 2000, seed=5)
    assert {c.check for c in checks} == {"max_upper", "max_lower", "best_score_lower"}
    assert all(c.passed for c in checks)
    assert all(c.threshold == pytest.approx(c.bound + 3 * math.sqrt(c.bound / 2000)) for c in checks)


def test_wilson_basics():
    lo, hi = a.wilson_interval(0, 50)
    assert lo == 0.0 and 0 < hi < 0.1
    lo, hi = a.wilson_interval(50, 50)
    assert hi == 1.0
    e = a.proportion(5000, 10_000)
    assert e.width <= 0.03 and e.covers(0.5)
    with pytest.raises(ValueError):
        a.wilson_interval(0, 0)


@given(n=st.integers(1, 10**6), frac=st.floats(0, 1))
def test_wilson_contains_point(n, frac):
    s = round(frac * n)
    e = a.proportion(s, n)
    assert 0 <= e.ci_low <= e.value <= e.ci_high <= 1


def test_non_decreasing_within_ci():
    up = [a.proportion(10, 100), a.proportion(20, 100)]
    flat = [a.proportion(20, 100), a.proportion(18, 100)]
    down = [a.proportion(60, 100), a.proportion(10, 100)]
    assert a.non_decreasing_within_ci(up)
    assert a.non_decreasing_within_ci(flat)
    assert not a.non_decreasing_within_ci(down)


def test_fit_rank_exponent():
    ns = [100, 400, 1600]
    assert a.fit_rank_exponent(ns, [3 * n**0.5 for n in ns]) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        a.fit_rank_exponent(ns[:2], [1, 2])


def test_best_wins_pointmass_matches_oracle():
    exact = enumerate_exact([1.0] * 4)
    strict, co = a.estimate_prob_best_wins(d.pointmass(1.0), 4, 20_000, seed=31)
    for est, p in ((strict, exact.top_k_strict[0]), (co, exact.co_win[3])):
        lo, hi = a.wilson_interval(est.successes, est.replicates, a.Z997)
        assert lo <= p <= hi


def test_best_wins_two_players_reduction():
    # strict P(best wins) at N = 2 is E[max(u, u') / (u + u')]
    x = d.sample(d.exponential(1.0), 2_000_000, stream(32, 0, 0)).reshape(-1, 2)
    direct = np.mean(x.max(axis=1) / x.sum(axis=1))
    reps = 20_000
    strict, _ = a.estimate_prob_best_wins(d.exponential(1.0), 2, reps, seed=33)
    sigma = math.sqrt(direct * (1 - direct) / reps)
    assert abs(strict.value - direct) <= 3 * sigma


def test_best_wins_requires_replicates():
    with pytest.raises(ValueError):
        a.estimate_prob_best_wins(d.uniform01(), 5, 99, seed=1)


def test_estimator_width_and_doubling():
    s1, _ = a.estimate_prob_best_wins(d.exponential(1.0), 6, 10_000, seed=34)
    assert s1.width <= 0.03
    s2, _ = a.estimate_prob_best_wins(d.exponential(1.0), 6, 20_000, seed=34)
    assert 0.6 <= s2.width / s1.width <= 0.8


def test_pointmass_rank_symmetry():
    n = 100
    rd = a.winner_rank_distribution(d.pointmass(1.0), n, 4000, seed=35)
    # given s co-winners, the best label among them has rank (N + 1) / (s + 1) on average
    diff = rd.ranks - (n + 1) / (rd.winner_counts + 1)
    assert abs(diff.mean()) <= 3 * diff.std(ddof=1) / math.sqrt(len(diff))
    unique = rd.ranks[rd.winner_counts == 1]
    se = unique.std(ddof=1) / math.sqrt(len(unique))
    assert abs(unique.mean() - (n + 1) / 2) <= 3 * se
    assert rd.histogram().sum() == 4000


def test_rank_requires_alpha():
    with pytest.raises(ValueError):
        a.winner_rank_distribution(d.exponential(1.0), 10, 10, seed=1)


def test_uniform_median_rank_window():
    rd = uniform_rank_run(1600)
    assert 1600**0.35 <= rd.median <= 1600**0.65
    assert rd.median_ci[0] <= rd.median <= rd.median_ci[1]


def test_heavier_top_tail_exponent_is_larger():
    beta = a.winner_rank_distribution(d.beta(1.0, 0.5), 1600, 300, seed=20261016)
    assert beta.exponent > uniform_rank_run(1600).exponent


def test_top_k_everyone():
    co, strict = a.estimate_prob_top_k_wins(d.exponential(1.0), 7, 7, 200, seed=36)
    assert co.value == 1.0 and strict.value == 1.0
    with pytest.raises(ValueError):
        a.estimate_prob_top_k_wins(d.exponential(1.0), 7, 8, 200, seed=36)


def test_top_k_fixed_environment_matches_oracle():
    seed, n = 37, 4
    co, strict = a.estimate_prob_top_k_wins(d.exponential(1.0), n, 1, 20_000, seed,
                                            fixed_environment=True)
    v = d.order_statistics(d.sample(d.exponential(1.0), n, stream(seed, ENVIRONMENT, n)))
    exact = enumerate_exact(v)
    for est, p in ((co, exact.top_k_cowin[0]), (strict, exact.top_k_strict[0])):
        lo, hi = a.wilson_interval(est.successes, est.replicates, a.Z997)
        assert lo <= p <= hi


def test_uniform_top_k_directional():
    values = []
    for n in (400, 1600):
        co, _ = a.estimate_prob_top_k_wins(d.uniform01(), n, math.ceil(n**0.25), 300, seed=38)
        assert co.value <= 0.5
        values.append(co.value)
    assert values[1] < values[0]


def test_cutoff_sweep_at_zero_and_nesting():
    points = pointmass_sweep()
    assert points[0.0].win_prob.value < 0.5
    for p in points.values():
        assert p.sufficient_prob.value <= p.win_prob.value <= 1 - p.loss_prob.value
        assert p.v_tagged == pytest.approx(1 + p.c * a.epsilon_n(0.0, 0.25, 2000))


def test_cutoff_sweep_validation():
    with pytest.raises(ValueError):
        a.cutoff_sweep(d.exponential(1.0), 10, [1.0], 10, seed=1)
    with pytest.raises(ValueError):
        a.cutoff_sweep(d.pointmass(1.0), 10, [1.0, 0.5], 10, seed=1)
    with pytest.raises(ValueError):
        a.cutoff_sweep(d.pointmass(1.0), 10, [-0.5, 0.5], 10, seed=1)


@pytest.mark.parametrize("v,vt", [([1.0, 1.0, 1.0], None), ([0.4, 1.0, 2.2, 2.3], 1.9),
                                  ([1.0, 1.0, 1.0, 1.0], 1.0)])
def test_event_estimates_close_on_oracle(v, vt):
    est = a.estimate_events(v, 30_000, seed=39, v_tagged=vt, z=a.Z997)
    exact = enumerate_exact(v, vt, exact=True).as_dict()
    assert est.keys() == exact.keys()
    misses = [k for k, p in exact.items() if not est[k].covers(float(p))]
    assert misses == []
