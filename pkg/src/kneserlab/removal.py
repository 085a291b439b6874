"""Nearest unions of stars and the removal bound.

G_S denotes the family of all k-sets meeting a centre set S; its indicator is
max_{i in S} x_i.  Distances |F delta G_S| reduce to miss counts
#{A in F : A cap S = empty}, which for |S| <= 2 come from the degree and
co-degree tables in O(1) per centre set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .errors import DomainError, GuardError
from .families import (
    FamilyStats,
    SetFamily,
    degree_profile,
    disjoint_pairs,
    family_stats,
)
from .spectral import FLOAT_TOL, decompose_affine

CENTER_ENUM_GUARD = 1_000_000
CENTER_SET_SEARCH_GUARD = 2_000_000

DEFAULT_C_CONST = 2.0


@dataclass(frozen=True)
class RemovalConfig:
    """l and the configurable stand-in C for the absolute constant."""

    ell: int
    c_const: float = DEFAULT_C_CONST

    def __post_init__(self) -> None:
        if self.ell < 1:
            raise DomainError(f"l must be a positive integer, got {self.ell}")
        if not self.c_const > 1:
            raise DomainError(f"c_const must exceed 1, got {self.c_const}")


def union_size(params, s: int) -> int:
    """|G_S| for |S| = s: C(n,k) - C(n-s,k)."""
    return params.slice_size - math.comb(params.n - s, params.k)


def union_distance(family: SetFamily, centres: Sequence[int]) -> int:
    """|F delta G_S| by the miss-count identity."""
    params = family.params
    smask = 0
    for c in centres:
        if not (1 <= c <= params.n):
            raise DomainError(f"centre {c} out of range 1..{params.n}")
        smask |= 1 << (c - 1)
    miss = sum(1 for m in family.members if not m & smask)
    return union_size(params, len(set(centres))) - len(family) + 2 * miss


def _pair_degrees(family: SetFamily) -> dict[tuple[int, int], int]:
    """Co-degree table d_ij = #{A : i, j in A}, keys i < j (1-based)."""
    table: dict[tuple[int, int], int] = {}
    for mask in family.members:
        elems = []
        m = mask
        while m:
            low = m & -m
            elems.append(low.bit_length())
            m ^= low
        for i, a in enumerate(elems):
            for b in elems[i + 1:]:
                table[(a, b)] = table.get((a, b), 0) + 1
    return table


def nearest_union_exact(family: SetFamily, ell: int) -> tuple[tuple[int, ...], int]:
    """Exhaustive minimiser of |F delta G_S| over l-element centre sets.

    Ties break to the lexicographically smallest S.  Guarded by C(n,l).
    """
    params = family.params
    if ell > params.n:
        raise DomainError(f"l={ell} exceeds n={params.n}")
    if math.comb(params.n, ell) > CENTER_ENUM_GUARD:
        raise GuardError(f"C({params.n},{ell}) centre sets exceed the guard")
    size = len(family)
    base = union_size(params, ell) - size
    best_s: tuple[int, ...] | None = None
    best_d = None
    if ell <= 2:
        degrees = degree_profile(family)
        pairs = _pair_degrees(family) if ell == 2 else {}
        for combo in combinations(range(1, params.n + 1), ell):
            if ell == 1:
                miss = size - degrees[combo[0] - 1]
            else:
                i, j = combo
                miss = size - degrees[i - 1] - degrees[j - 1] + pairs.get((i, j), 0)
            d = base + 2 * miss
            if best_d is None or d < best_d:
                best_d, best_s = d, combo
        return best_s, best_d
    for combo in combinations(range(1, params.n + 1), ell):
        smask = 0
        for c in combo:
            smask |= 1 << (c - 1)
        miss = sum(1 for m in family.members if not m & smask)
        d = base + 2 * miss
        if best_d is None or d < best_d:
            best_d, best_s = d, combo
    return best_s, best_d


def nearest_union_heuristic(family: SetFamily, ell: int) -> tuple[tuple[int, ...], int]:
    """Top-l-degree centre set (ties to smallest element) and its exact distance."""
    if ell > family.params.n:
        raise DomainError(f"l={ell} exceeds n={family.params.n}")
    degrees = degree_profile(family)
    order = sorted(range(1, family.params.n + 1), key=lambda i: (-degrees[i - 1], i))
    centres = tuple(sorted(order[:ell]))
    return centres, union_distance(family, centres)


# ── bound checks ─────────────────────────────────────────────────

@dataclass(frozen=True)
class CenterSetReport:
    eps_in: float
    s_bound: int
    best_s: tuple[int, ...]
    closeness: float
    branch: str  # 'direct' (f) or 'complement' (1-f)
    holds: bool
    eps_within_range: bool

    def to_json_dict(self) -> dict:
        return {
            "eps_in": self.eps_in,
            "s_bound": self.s_bound,
            "best_s": list(self.best_s),
            "closeness": self.closeness,
            "branch": self.branch,
            "holds": self.holds,
            "eps_within_range": self.eps_within_range,
        }


def center_set_check(family: SetFamily, cfg: RemovalConfig) -> CenterSetReport:
    """Search for a small centre set S with f or 1-f close to max_{i in S} x_i.

    s_bound = max(1, ceil(C n sqrt(eps)/k)); all centre sets of size
    0..s_bound are tried on both branches; holds = (closeness <= C * eps).
    """
    params = family.params
    n, k = params.n, params.k
    if not (n >= 2 * k and k >= 2):
        raise DomainError("centre-set check needs n >= 2k >= 4")
    eps_in = decompose_affine(family).f2_norm_sq
    s_bound = max(1, math.ceil(cfg.c_const * n * math.sqrt(max(eps_in, 0.0)) / k))
    s_bound = min(s_bound, n)
    total_candidates = sum(math.comb(n, s) for s in range(s_bound + 1))
    if total_candidates > CENTER_SET_SEARCH_GUARD:
        raise GuardError(
            f"centre-set search over {total_candidates} sets exceeds the guard")
    size = len(family)
    slice_size = params.slice_size
    best = None  # (closeness, branch_rank, s, S)
    for s in range(s_bound + 1):
        gs = union_size(params, s)
        for combo in combinations(range(1, n + 1), s):
            smask = 0
            for c in combo:
                smask |= 1 << (c - 1)
            miss = sum(1 for m in family.members if not m & smask)
            d_direct = gs - size + 2 * miss
            # complement branch: |F delta complement(G_S)| with
            # |complement(G_S)| = C(n-s,k) and F cap complement(G_S) = misses
            d_comp = size + math.comb(n - s, k) - 2 * miss
            for rank, dist in ((0, d_direct), (1, d_comp)):
                key = (dist, rank, s, combo)
                if best is None or key < best:
                    best = key
    dist, rank, s, combo = best
    closeness = dist / slice_size
    return CenterSetReport(
        eps_in=eps_in,
        s_bound=s_bound,
        best_s=combo,
        closeness=closeness,
        branch="direct" if rank == 0 else "complement",
        holds=closeness <= cfg.c_const * eps_in + FLOAT_TOL,
        eps_within_range=eps_in < k / (128.0 * n),
    )


CASE_LABELS = ("(i)", "(ii)", "(iii)", "(iv)", "(v)", "(vi)")


def case_classify(family: SetFamily, cfg: RemovalConfig) -> str:
    """Which of the six approximant cases the best centre set realises."""
    report = center_set_check(family, cfg)
    s = len(report.best_s)
    if report.branch == "direct":
        if s == cfg.ell:
            return "(vi)"
        return "(i)" if s < cfg.ell else "(ii)"
    if s == 0:
        return "(iii)"
    return "(v)" if s == 1 else "(iv)"


def case_table(family: SetFamily, cfg: RemovalConfig) -> list[dict]:
    """One diagnostic row per candidate case: sizes against the proof windows.

    The size window for the approximant is (l +- 1/4) C(n-1,k-1); the union
    lower estimate for case (ii) uses the (l + 1/2) multiplier.  Case (v)
    additionally reports the disjoint-pair threshold.
    """
    params = family.params
    n, k, ell = params.n, params.k, cfg.ell
    star = params.star_size
    lo = (ell - 0.25) * star
    hi = (ell + 0.25) * star
    report = center_set_check(family, cfg)
    realized = case_classify(family, cfg)
    eps = decompose_affine(family).f2_norm_sq
    rows = []

    def row(label, description, size_val, extra=None):
        entry = {
            "case": label,
            "approximant": description,
            "size": size_val,
            "window_lo": lo,
            "window_hi": hi,
            "within_window": lo <= size_val <= hi,
            "realized": label == realized,
        }
        if extra:
            entry.update(extra)
        rows.append(entry)

    if ell >= 1:
        row("(i)", f"G_s, s <= {ell - 1}", union_size(params, ell - 1))
    lower_ii = (ell + 0.5) * star
    row("(ii)", f"G_s, s >= {ell + 1}", union_size(params, ell + 1),
        {"proof_lower_estimate": lower_ii})
    row("(iii)", "complement of G_0", params.slice_size)
    s_iv = max(2, report.s_bound)
    row("(iv)", f"complement of G_s, s >= 2 (at s={s_iv})",
        math.comb(n - s_iv, k) if s_iv <= n else 0)
    dp_f = disjoint_pairs(family)
    dp_threshold = (0.5 - 2 * cfg.c_const * eps) * math.comb(n - 1, k) \
        * math.comb(n - k - 1, k)
    row("(v)", "complement of G_1 (anti-star)", math.comb(n - 1, k),
        {"dp_family": dp_f, "dp_lower_threshold": dp_threshold})
    row("(vi)", f"G_{ell}", union_size(params, ell))
    return rows


@dataclass(frozen=True)
class RemovalReport:
    stats: FamilyStats
    epsilon: float
    best_centers: tuple[int, ...]
    distance: int
    bound: float
    preconditions_met: bool
    holds: bool
    case_label: str | None
    c_const: float

    def to_json_dict(self) -> dict:
        payload = self.stats.to_json_dict()
        payload.update({
            "epsilon": self.epsilon,
            "best_centers": list(self.best_centers),
            "distance": self.distance,
            "bound": self.bound,
            "preconditions_met": self.preconditions_met,
            "holds": self.holds,
            "case_label": self.case_label,
            "c_const": self.c_const,
        })
        return payload


def removal_bound_base(stats: FamilyStats) -> Fraction:
    """((2l-1) alpha + 2 beta) * n/(n-2k) * C(n-1,k-1); the bound is C times this."""
    params = stats.params
    return ((2 * stats.ell - 1) * stats.alpha + 2 * stats.beta) \
        * Fraction(params.n, params.n - 2 * params.k) * params.star_size


def removal_bound_check(family: SetFamily, cfg: RemovalConfig) -> RemovalReport:
    """Removal-bound check: distance to the nearest union of l stars vs bound.

    Requires n > 2k l^2.  The report is produced even when the alpha/beta
    preconditions fail; `holds` then simply records the observed comparison.
    """
    params = family.params
    n, k, ell = params.n, params.k, cfg.ell
    if n <= 2 * k * ell * ell:
        raise DomainError(f"removal_bound_check needs n > 2k l^2, got n={n} k={k} l={ell}")
    stats = family_stats(family, ell)
    eps_exact = ((2 * ell - 1) * stats.alpha + 2 * stats.beta) * Fraction(k, n - 2 * k)
    centres, distance = nearest_union_exact(family, ell)
    bound = cfg.c_const * float(removal_bound_base(stats))
    preconditions = (n > 2 * k * ell * ell) and stats.removal_precondition_met(cfg.c_const)
    try:
        label = case_classify(family, cfg)
    except (GuardError, DomainError):
        label = None
    return RemovalReport(
        stats=stats,
        epsilon=float(eps_exact),
        best_centers=centres,
        distance=distance,
        bound=bound,
        preconditions_met=preconditions,
        holds=distance <= bound + FLOAT_TOL,
        case_label=label,
        c_const=cfg.c_const,
    )


def calibrate_constant(entries: Iterable[tuple[FamilyStats, int]],
                       floor: float = 1.000001) -> float:
    """Smallest C >= floor making the removal bound hold on every entry whose
    preconditions are met at that same C.

    entries: (stats, exact nearest-union distance).  The qualifying set
    shrinks as C grows while the bound grows, so g(C) = max ratio over
    qualifying entries is non-increasing and the smallest fixed point is found
    by bisection.  Returns inf when some qualifying entry has a zero bound but
    positive distance.
    """
    data = []
    for stats, dist in entries:
        base = float(removal_bound_base(stats))
        data.append((stats, dist, base))

    def g(c: float) -> float:
        worst = floor
        for stats, dist, base in data:
            if not stats.removal_precondition_met(c):
                continue
            if base <= 0:
                if dist > 0:
                    return math.inf
                continue
            worst = max(worst, dist / base)
        return worst

    hi = g(floor)
    if hi <= floor:
        return floor
    if math.isinf(hi):
        return math.inf
    if g(hi) > hi:
        # g is non-increasing, so g(g(floor)) <= g(floor) = hi; defensive only
        return math.inf
    lo = floor
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g(mid) <= mid:
            hi = mid
        else:
            lo = mid
    return hi
