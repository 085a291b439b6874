"""removal: nearest unions of stars, bound checks, case classification."""

import math
from itertools import combinations

import pytest

from kneserlab.errors import DomainError
from kneserlab.families import (
    GroundParams,
    SetFamily,
    build_family,
    elements_from_mask,
    enumerate_masks,
    family_stats,
    sym_diff_size,
)
from kneserlab.removal import (
    RemovalConfig,
    calibrate_constant,
    case_classify,
    case_table,
    center_set_check,
    nearest_union_exact,
    nearest_union_heuristic,
    removal_bound_check,
    union_distance,
)


def exhaustive_union_oracle(family, ell):
    """Independent route: python-set symmetric differences over all centres."""
    params = family.params
    mine = {frozenset(elements_from_mask(m)) for m in family.members}
    best = None
    for centres in combinations(range(1, params.n + 1), ell):
        union = {frozenset(elements_from_mask(m))
                 for m in enumerate_masks(params.n, params.k)
                 if any((m >> (c - 1)) & 1 for c in centres)}
        d = len(mine ^ union)
        if best is None or d < best[1]:
            best = (centres, d)
    return best


def perturbed_star(params, removals, additions, seed):
    star = build_family(params, "star:1")
    import random

    rng = random.Random(seed)
    members = list(star.members)
    for m in rng.sample(members, removals):
        members.remove(m)
    outside = [m for m in enumerate_masks(params.n, params.k)
               if m not in star.member_set]
    members.extend(rng.sample(outside, additions))
    return SetFamily.from_masks(params, members)


def test_nearest_union_exact_examples():
    assert nearest_union_exact(build_family(GroundParams(7, 3), "star:1"), 1) == ((1,), 0)
    anti = build_family(GroundParams(5, 2), "antistar:5")
    assert nearest_union_exact(anti, 1) == ((1,), 4)  # tie broken to {1}
    star6 = build_family(GroundParams(6, 2), "star:1")
    masks = [m for m in star6.members if m != 0b000011] + [0b000110]
    pert = SetFamily.from_masks(GroundParams(6, 2), masks)
    assert nearest_union_exact(pert, 1) == ((1,), 2)


@pytest.mark.parametrize("n,k,ell,seed", [(6, 2, 1, 0), (7, 3, 1, 1),
                                          (8, 2, 2, 2), (7, 3, 2, 3),
                                          (9, 3, 3, 4)])
def test_nearest_union_exact_matches_oracle(n, k, ell, seed):
    params = GroundParams(n, k)
    m = (seed * 23 + 9) % params.slice_size + 1
    fam = build_family(params, f"random:{m}:{seed}")
    assert nearest_union_exact(fam, ell) == exhaustive_union_oracle(fam, ell)


def test_nearest_union_heuristic_examples():
    full = SetFamily.from_masks(GroundParams(5, 2), enumerate_masks(5, 2))
    assert nearest_union_heuristic(full, 1) == ((1,), 6)
    anti = build_family(GroundParams(5, 2), "antistar:5")
    assert nearest_union_heuristic(anti, 1) == ((1,), 4)
    assert nearest_union_heuristic(build_family(GroundParams(8, 3), "star:2"), 1) == ((2,), 0)


@pytest.mark.parametrize("seed", range(10))
def test_heuristic_never_beats_exact(seed):
    params = GroundParams(8, 2)
    m = (seed * 17 + 5) % params.slice_size + 1
    fam = build_family(params, f"random:{m}:{seed}")
    for ell in (1, 2):
        _, d_exact = nearest_union_exact(fam, ell)
        _, d_heur = nearest_union_heuristic(fam, ell)
        assert d_heur >= d_exact


@pytest.mark.parametrize("n,k", [(9, 2), (12, 2), (9, 3), (11, 3)])
def test_heuristic_matches_exact_on_small_perturbations(n, k):
    params = GroundParams(n, k)
    budget = max(1, params.star_size // 4 - 1)
    for seed in range(6):
        fam = perturbed_star(params, removals=min(2, budget),
                             additions=min(1, budget), seed=seed)
        assert nearest_union_heuristic(fam, 1)[1] == nearest_union_exact(fam, 1)[1]


def test_exact_union_distance_is_zero_on_unions():
    for n, k, ell in [(9, 2, 1), (9, 2, 2), (13, 3, 2)]:
        params = GroundParams(n, k)
        fam = build_family(params, "union:" + ",".join(map(str, range(1, ell + 1))))
        centres, dist = nearest_union_exact(fam, ell)
        assert dist == 0
        assert centres == tuple(range(1, ell + 1))


def test_monotone_sanity_adding_counted_set():
    params = GroundParams(7, 2)
    fam = perturbed_star(params, removals=2, additions=0, seed=3)
    centres, dist = nearest_union_exact(fam, 1)
    missing = [m for m in build_family(params, f"star:{centres[0]}").members
               if m not in fam.member_set]
    bigger = SetFamily.from_masks(params, list(fam.members) + [missing[0]])
    assert nearest_union_exact(bigger, 1)[1] <= dist


def test_removal_bound_star_trivial():
    rep = removal_bound_check(build_family(GroundParams(7, 2), "star:1"),
                          RemovalConfig(1, 2.0))
    assert rep.distance == 0
    assert rep.bound == pytest.approx(0.0)
    assert rep.holds and rep.preconditions_met
    assert rep.case_label == "(vi)"


def test_removal_bound_star_minus_two_at_24_2():
    params = GroundParams(24, 2)
    star = build_family(params, "star:1")
    fam = SetFamily.from_masks(params, list(star.members)[2:])
    rep = removal_bound_check(fam, RemovalConfig(1, 2.0))
    assert rep.stats.alpha == pytest.approx(2 / 23)
    assert rep.distance == 2
    # bound = C (2l-1)alpha n/(n-2k) C(n-1,k-1) = 2 * (2/23) * 1.2 * 23
    assert rep.bound == pytest.approx(4.8)
    assert rep.holds


def test_removal_bound_antistar_preconditions_fail_but_report_returns():
    rep = removal_bound_check(build_family(GroundParams(5, 2), "antistar:5"),
                          RemovalConfig(1, 2.0))
    assert not rep.preconditions_met
    assert rep.distance == 4
    assert rep.case_label == "(v)"


def test_removal_bound_requires_large_n():
    with pytest.raises(DomainError):
        removal_bound_check(build_family(GroundParams(8, 2), "star:1"),
                        RemovalConfig(2, 2.0))  # needs n > 2k l^2 = 16


def test_center_set_examples():
    cfg = RemovalConfig(1, 2.0)
    rep = center_set_check(build_family(GroundParams(5, 2), "star:1"), cfg)
    assert (rep.eps_in, rep.s_bound, rep.best_s, rep.closeness) == (0.0, 1, (1,), 0.0)
    assert rep.holds and rep.branch == "direct"
    rep = center_set_check(build_family(GroundParams(5, 2), "antistar:5"), cfg)
    assert rep.branch == "complement"
    assert rep.best_s == (5,)
    assert rep.closeness == 0.0 and rep.holds
    full = SetFamily.from_masks(GroundParams(5, 2), enumerate_masks(5, 2))
    rep = center_set_check(full, cfg)
    assert rep.branch == "complement" and rep.best_s == ()
    assert rep.closeness == 0.0


def test_center_set_requires_k_at_least_2():
    with pytest.raises(DomainError):
        center_set_check(build_family(GroundParams(5, 1), "star:1"), RemovalConfig(1, 2.0))


def test_case_classification_examples():
    assert case_classify(build_family(GroundParams(5, 2), "star:1"),
                         RemovalConfig(1, 2.0)) == "(vi)"
    assert case_classify(build_family(GroundParams(5, 2), "antistar:5"),
                         RemovalConfig(1, 2.0)) == "(v)"
    assert case_classify(build_family(GroundParams(10, 2), "union:1,2"),
                         RemovalConfig(2, 2.0)) == "(vi)"


def test_case_table_rows():
    rows = case_table(build_family(GroundParams(10, 2), "star:1"),
                      RemovalConfig(1, 2.0))
    assert [r["case"] for r in rows] == ["(i)", "(ii)", "(iii)", "(iv)", "(v)", "(vi)"]
    realized = [r for r in rows if r["realized"]]
    assert len(realized) == 1 and realized[0]["case"] == "(vi)"
    vi = rows[-1]
    assert vi["within_window"]
    v_row = rows[4]
    assert "dp_family" in v_row and "dp_lower_threshold" in v_row


ANTISTAR_BENCHMARKS = [(5, 2, 4), (7, 3, 15), (9, 4, 56)]


@pytest.mark.parametrize("n,k,expected", ANTISTAR_BENCHMARKS)
def test_antistar_nearest_star_distance(n, k, expected):
    params = GroundParams(n, k)
    anti = build_family(params, f"antistar:{n}")
    oracle = exhaustive_union_oracle(anti, 1)
    assert oracle[1] == expected == math.comb(n - 1, k - 1)
    assert nearest_union_exact(anti, 1)[1] == expected


def test_union_distance_matches_sym_diff():
    params = GroundParams(7, 3)
    fam = build_family(params, "random:14:2")
    for centres in [(1,), (3,), (1, 2), (2, 5)]:
        union = build_family(params, "union:" + ",".join(map(str, centres)))
        assert union_distance(fam, centres) == sym_diff_size(fam, union)


def test_calibrate_constant_on_star_perturbations():
    entries = []
    for n, k in [(12, 2), (16, 2), (13, 3)]:
        params = GroundParams(n, k)
        star = build_family(params, "star:1")
        entries.append((family_stats(star, 1), 0))
        for removals in (1, 2):
            fam = SetFamily.from_masks(params, list(star.members)[removals:])
            stats = family_stats(fam, 1)
            entries.append((stats, nearest_union_exact(fam, 1)[1]))
    c_star = calibrate_constant(entries)
    assert math.isfinite(c_star)
    cfg_c = max(c_star, 1.000001)
    for stats, dist in entries:
        if stats.removal_precondition_met(cfg_c):
            from kneserlab.removal import removal_bound_base

            assert dist <= cfg_c * float(removal_bound_base(stats)) + 1e-9
