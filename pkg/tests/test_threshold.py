"""random_threshold: sampling, superstars, EKR probability, analytic bounds."""

import math

import pytest

from kneserlab.errors import DomainError
from kneserlab.families import GroundParams
from kneserlab.mis import brute_force_maximum
from kneserlab.threshold import (
    ThresholdParams,
    analytic_bounds,
    count_superstars,
    critical_probabilities,
    critical_probabilities_raw,
    ekr_holds,
    estimate_probability,
    find_threshold,
    sample_subgraph,
    star_survives,
    trial_uniforms,
    wilson_interval,
)

P12 = GroundParams(12, 2)
P5 = GroundParams(5, 2)


def test_critical_probability_examples():
    crit = critical_probabilities(P12)
    assert crit["p_c"] == pytest.approx(math.log(660) / 9, abs=1e-12)
    assert crit["p_c"] == pytest.approx(0.72136, abs=1e-5)
    assert crit["p_0"] == pytest.approx((3 * math.log(12) - 2 * math.log(2)) / 11,
                                        abs=1e-12)
    assert crit["p_0"] == pytest.approx(0.55167, abs=1e-5)
    with pytest.raises(DomainError):
        critical_probabilities(GroundParams(5, 2))


def test_critical_probabilities_asymptotic_agreement():
    # k = o(sqrt(n)) regime: the two critical probabilities approach each other
    crit = critical_probabilities_raw(200, 2)
    assert abs(crit["p_c"] - crit["p_0"]) / crit["p_c"] < 0.15
    crit64 = critical_probabilities(GroundParams(64, 2))
    assert abs(crit64["p_c"] - crit64["p_0"]) / crit64["p_c"] < 0.15


def test_sample_trivial_probabilities():
    empty = sample_subgraph(ThresholdParams(P5, 0.0, 1, 0), 0)
    assert empty.retained_count == 0
    full = sample_subgraph(ThresholdParams(P5, 1.0, 1, 0), 0)
    assert full.retained_count == 15  # C(5,2) C(3,2) / 2


def test_sample_reproducible_and_trialwise_distinct():
    tp = ThresholdParams(P12, 0.5, 10, 42)
    a = sample_subgraph(tp, 3)
    b = sample_subgraph(tp, 3)
    c = sample_subgraph(tp, 4)
    assert a.retained_flags == b.retained_flags
    assert a.retained_flags != c.retained_flags


def test_sample_mean_retained_within_binomial_ci():
    trials = 2000
    tp = ThresholdParams(P5, 0.5, trials, 7)
    total = sum(sample_subgraph(tp, t).retained_count for t in range(trials))
    mean = total / trials
    sigma = math.sqrt(15 * 0.25 / trials)
    assert abs(mean - 7.5) <= 3 * sigma


def test_monotone_coupling():
    lo = ThresholdParams(P12, 0.3, 1, 11)
    hi = ThresholdParams(P12, 0.8, 1, 11)
    for trial in range(5):
        uniforms = trial_uniforms(lo, trial)
        a = sample_subgraph(lo, trial, uniforms=uniforms)
        b = sample_subgraph(hi, trial, uniforms=uniforms)
        assert a.edge_set() <= b.edge_set()
        if ekr_holds(a).holds:
            assert ekr_holds(b).holds


def test_count_superstars_trivial():
    assert count_superstars(sample_subgraph(ThresholdParams(P12, 1.0, 1, 0), 0)) == 0
    empty = sample_subgraph(ThresholdParams(P12, 0.0, 1, 0), 0)
    assert count_superstars(empty) == 12 * math.comb(11, 2)


def test_superstar_mean_matches_expectation_small():
    trials = 3000
    tp = ThresholdParams(P5, 0.4, trials, 5)
    xs = [count_superstars(sample_subgraph(tp, t)) for t in range(trials)]
    mean = sum(xs) / trials
    expected = 5 * math.comb(4, 2) * (0.6) ** math.comb(2, 1)
    std = math.sqrt(sum((x - mean) ** 2 for x in xs) / trials)
    assert abs(mean - expected) <= 3 * std / math.sqrt(trials) + 1e-12


def test_superstar_implies_ekr_fails():
    tp = ThresholdParams(P12, 0.35, 40, 2024)
    seen = 0
    for t in range(40):
        sample = sample_subgraph(tp, t)
        if count_superstars(sample) > 0:
            seen += 1
            assert not ekr_holds(sample).holds
    assert seen > 0  # p = 0.35 is far below threshold; superstars abound


def test_ekr_holds_trivial_and_against_oracle():
    assert ekr_holds(sample_subgraph(ThresholdParams(P5, 1.0, 1, 0), 0)).holds
    assert not ekr_holds(sample_subgraph(ThresholdParams(P5, 0.0, 1, 0), 0)).holds
    tp = ThresholdParams(P5, 0.9, 1, 42)
    sample = sample_subgraph(tp, 0)
    best, _ = brute_force_maximum(list(sample.adjacency))
    assert ekr_holds(sample).holds == (best == math.comb(4, 1))


def test_ekr_uniqueness_mode():
    full = sample_subgraph(ThresholdParams(P5, 1.0, 1, 0), 0)
    rep = ekr_holds(full, uniqueness=True)
    assert rep.holds and rep.only_stars is True


def test_star_survives_consistency():
    tp = ThresholdParams(P12, 0.5, 20, 99)
    for t in range(20):
        sample = sample_subgraph(tp, t)
        all_survive = all(star_survives(sample, x) for x in range(1, 13))
        assert all_survive == (count_superstars(sample) == 0)


def test_estimate_probability_trivial_endpoints():
    assert estimate_probability(ThresholdParams(P5, 1.0, 40, 0))["fraction"] == 1.0
    assert estimate_probability(ThresholdParams(P5, 0.0, 40, 0))["fraction"] == 0.0


def test_estimate_probability_monotone_far_from_threshold():
    lo = estimate_probability(ThresholdParams(P12, 0.3, 120, 1961))
    hi = estimate_probability(ThresholdParams(P12, 0.95, 120, 1961))
    assert lo["fraction"] < hi["fraction"]


def test_estimate_probability_deterministic_across_workers():
    tp = ThresholdParams(P12, 0.55, 48, 77)
    results = [estimate_probability(tp, workers=w) for w in (1, 2, 8)]
    assert results[0] == results[1] == results[2]


def test_estimate_probability_requires_enough_trials():
    with pytest.raises(DomainError):
        estimate_probability(ThresholdParams(P5, 0.5, 5, 0))


def test_wilson_interval_basic():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 50)[0] == pytest.approx(0.0, abs=1e-12)
    assert wilson_interval(50, 50)[1] == pytest.approx(1.0, abs=1e-12)


def test_find_threshold_brackets():
    rep = find_threshold(GroundParams(8, 2), trials=60, seed=5, width_tol=0.1)
    assert 0.0 < rep["p_half"] < 1.0
    assert rep["iterations"] >= 1
    assert rep["p_c"] == pytest.approx(
        math.log(8 * math.comb(7, 2)) / math.comb(5, 1))


def test_find_threshold_exceeds_analytic_upper_bound_region():
    # (1 - (1-p)^C(n-k-1,k-1))^C(n-1,k) bounds the success probability from
    # above, so any p where it sits well below 1/2 lies below the crossing
    rep = find_threshold(GroundParams(8, 2), trials=120, seed=12, width_tol=0.05)
    d = math.comb(5, 1)
    count = math.comb(7, 2)
    p_low = None
    for step in range(1, 100):
        p = step / 100
        if (1 - (1 - p) ** d) ** count <= 0.4:
            p_low = p
    assert p_low is not None
    assert rep["p_half"] > p_low


def test_find_threshold_decreases_with_n():
    halves = [find_threshold(GroundParams(n, 2), trials=160, seed=31,
                             width_tol=0.04)["p_half"]
              for n in (10, 12, 14)]
    assert halves[0] > halves[1] > halves[2]


def test_analytic_bounds_examples():
    rep = analytic_bounds(P12, 1.0, 1, 1)
    assert rep.first_moment_bound == pytest.approx(1.0)
    rep = analytic_bounds(P12, 2.0, 1, 1)
    assert rep.first_moment_bound == pytest.approx(1 / 660)
    rep = analytic_bounds(P12, 1.0, 0, 5)
    assert rep.maximal_family_bound == 0.0
    rep = analytic_bounds(P12, 1.0, 0, 0)
    assert rep.maximal_family_bound == pytest.approx(12.0)


def test_analytic_bounds_exact_expectation_field():
    # at (12,2), p = 0.5: E[X] = 660 * 2^-9
    crit = critical_probabilities(P12)
    zeta = 0.5 / crit["p_c"]
    rep = analytic_bounds(P12, zeta, 1, 1)
    assert rep.p == pytest.approx(0.5)
    assert rep.ex_exact == pytest.approx(660 * 2 ** -9, rel=1e-9)
    assert rep.lower_bound_prob == pytest.approx((1 - 0.5 ** 9) ** 55, rel=1e-9)


def test_analytic_bounds_t0_t1():
    rep = analytic_bounds(P12, 1.1, 1, 1, c_const=2.0, epsilon=0.1)
    assert rep.near_cutoff == math.ceil(0.05 * math.comb(9, 1))
    assert rep.far_cutoff == math.ceil(math.comb(11, 1) / 800)


def test_analytic_bounds_domain_errors():
    with pytest.raises(DomainError):
        analytic_bounds(P12, 1.0, math.comb(11, 1) + 1, 1)
    with pytest.raises(DomainError):
        analytic_bounds(P12, 1.0, 1, math.comb(10, 2) + 1)
    with pytest.raises(DomainError):
        analytic_bounds(GroundParams(4, 2), 1.0, 1, 1)
    with pytest.raises(DomainError):
        analytic_bounds(P12, 0.0, 1, 1)


def test_bound_report_json_serialisable():
    import json

    rep = analytic_bounds(P12, 1.5, 2, 3)
    payload = rep.to_json_dict()
    json.dumps(payload)
    assert payload["near_cutoff"] >= 1 and payload["far_cutoff"] >= 1
