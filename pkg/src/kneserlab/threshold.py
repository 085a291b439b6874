"""Random Kneser subgraphs K_p(n,k): superstars, EKR probability, bounds.

Each trial gets its own counter-based RNG stream keyed by
(master_seed, trial_index), so results are reproducible and independent of
how trials are scheduled across workers.  Analytic evaluators work in
log-space: the exponents reach C(n-1,k-1) and overflow doubles quickly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .errors import DomainError, GuardError
from .families import GroundParams
from .graphs import KneserGraph, build_graph
from .mis import DEFAULT_NODE_CAP, max_independent_set_masks

DEFAULT_EPSILON = 0.1
WILSON_Z = 1.959963984540054  # 95% two-sided normal quantile


@dataclass(frozen=True)
class ThresholdParams:
    """Simulation inputs: graph parameters, edge probability, trial budget."""

    params: GroundParams
    p: float
    trials: int
    master_seed: int
    zeta: float = 1.0 + DEFAULT_EPSILON
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if not (0.0 <= self.p <= 1.0):
            raise DomainError(f"p must lie in [0,1], got {self.p}")
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")


class _SampleContext:
    """Per-(n,k) immutable data shared by all trials."""

    def __init__(self, params: GroundParams) -> None:
        self.params = params
        self.graph: KneserGraph = build_graph(params)
        edges: list[tuple[int, int]] = []
        for u in range(self.graph.vertex_count):
            m = self.graph.adjacency[u] >> (u + 1)
            v = u + 1
            while m:
                if m & 1:
                    edges.append((u, v))
                m >>= 1
                v += 1
        self.edges = tuple(edges)
        # vertices avoiding each element, for the superstar scan
        self.avoiding: tuple[tuple[int, ...], ...] = tuple(
            tuple(i for i, mask in enumerate(self.graph.vertices)
                  if not (mask >> x) & 1)
            for x in range(params.n)
        )


_CONTEXTS: dict[GroundParams, _SampleContext] = {}


def _context(params: GroundParams) -> _SampleContext:
    ctx = _CONTEXTS.get(params)
    if ctx is None:
        ctx = _SampleContext(params)
        _CONTEXTS[params] = ctx
    return ctx


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by (master_seed, trial_index)."""
    key = np.array([master_seed & (2**64 - 1), trial_index & (2**64 - 1)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class EdgeSample:
    """A sampled subgraph: retained edge flags plus derived adjacency masks."""

    params: GroundParams
    p: float
    trial_index: int
    retained_flags: tuple[bool, ...]
    adjacency: tuple[int, ...]

    @property
    def retained_count(self) -> int:
        return sum(self.retained_flags)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        edges = _context(self.params).edges
        return frozenset(e for e, keep in zip(edges, self.retained_flags) if keep)


def trial_uniforms(tp: ThresholdParams, trial_index: int) -> np.ndarray:
    """The trial's uniform draws, one per K(n,k) edge (for coupled sampling)."""
    ctx = _context(tp.params)
    return trial_rng(tp.master_seed, trial_index).random(len(ctx.edges))


def sample_subgraph(tp: ThresholdParams, trial_index: int,
                    uniforms: np.ndarray | None = None) -> EdgeSample:
    """Retain each Kneser edge independently with probability p.

    Passing the same `uniforms` with a larger p yields a coupled supersample
    (retained(p) is a subset of retained(p')).
    """
    ctx = _context(tp.params)
    if uniforms is None:
        uniforms = trial_uniforms(tp, trial_index)
    keep = uniforms < tp.p
    adjacency = [0] * ctx.graph.vertex_count
    for (u, v), flag in zip(ctx.edges, keep):
        if flag:
            adjacency[u] |= 1 << v
            adjacency[v] |= 1 << u
    return EdgeSample(
        params=tp.params,
        p=tp.p,
        trial_index=trial_index,
        retained_flags=tuple(bool(b) for b in keep),
        adjacency=tuple(adjacency),
    )


def count_superstars(sample: EdgeSample) -> int:
    """Pairs (star S_x, F not containing x) with no retained edge between them."""
    ctx = _context(sample.params)
    count = 0
    for x in range(sample.params.n):
        star_mask = ctx.graph.star_vertex_masks[x]
        for f in ctx.avoiding[x]:
            if not sample.adjacency[f] & star_mask:
                count += 1
    return count


def star_survives(sample: EdgeSample, centre: int) -> bool:
    """True iff the star at `centre` is maximal independent in the sample
    (it admits no superstar extension)."""
    ctx = _context(sample.params)
    star_mask = ctx.graph.star_vertex_masks[centre - 1]
    for f in ctx.avoiding[centre - 1]:
        if not sample.adjacency[f] & star_mask:
            return False
    return True


@dataclass(frozen=True)
class EkrSampleResult:
    holds: bool
    only_stars: bool | None = None


def ekr_holds(sample: EdgeSample, *, uniqueness: bool = False,
              node_cap: int = DEFAULT_NODE_CAP) -> EkrSampleResult:
    """alpha(K_p) == C(n-1,k-1)?  Decided by searching for a larger set.

    Removing edges can only create independent sets, so alpha >= C(n-1,k-1)
    always (the stars persist); equality fails exactly when some independent
    set of size C(n-1,k-1)+1 exists.
    """
    target = sample.params.star_size + 1
    size, _, _ = max_independent_set_masks(
        sample.adjacency, stop_at=target, node_cap=node_cap)
    holds = size < target
    if not holds or not uniqueness:
        return EkrSampleResult(holds=holds)
    from .graphs import is_star
    from .mis import enumerate_maximum_independent_sets

    ctx = _context(sample.params)
    masks, _ = enumerate_maximum_independent_sets(
        sample.adjacency, sample.params.star_size, node_cap=node_cap)
    only = all(is_star(ctx.graph.family_from_vertex_mask(m)) for m in masks)
    return EkrSampleResult(holds=True, only_stars=only)


# ── probability estimation ───────────────────────────────────────────────

def _run_trial(tp: ThresholdParams, trial_index: int) -> tuple[bool, int]:
    sample = sample_subgraph(tp, trial_index)
    return ekr_holds(sample).holds, count_superstars(sample)


def _worker_chunk(args: tuple) -> tuple[int, int, float, float]:
    tp, lo, hi = args
    successes = 0
    x_sum = 0
    x_sumsq = 0.0
    for t in range(lo, hi):
        try:
            ok, x = _run_trial(tp, t)
        except GuardError as exc:
            raise GuardError(
                f"trial {t} aborted ({exc}); partial results: "
                f"{t - lo} trials of [{lo},{hi}) done, "
                f"{successes} successes, X sum {x_sum}") from exc
        successes += ok
        x_sum += x
        x_sumsq += float(x) * x
    return successes, x_sum, x_sumsq, 0.0


def wilson_interval(successes: int, trials: int,
                    z: float = WILSON_Z) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise DomainError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials
                         + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def estimate_probability(tp: ThresholdParams, *, workers: int = 1,
                         ci_min_trials: int = 30) -> dict:
    """Fraction of trials with the EKR property, with a Wilson 95% interval.

    Deterministic for fixed (params, p, trials, master_seed) regardless of
    worker count: each trial derives its stream from its own index and the
    aggregation is a commutative reduce.
    """
    if tp.trials < ci_min_trials:
        raise DomainError(
            f"need at least {ci_min_trials} trials for the interval, got {tp.trials}")
    _context(tp.params)  # build before forking so children inherit it
    if workers <= 1:
        chunks = [_worker_chunk((tp, 0, tp.trials))]
    else:
        bounds = [tp.trials * w // workers for w in range(workers + 1)]
        jobs = [(tp, bounds[w], bounds[w + 1]) for w in range(workers)
                if bounds[w] < bounds[w + 1]]
        with get_context("fork").Pool(processes=workers) as pool:
            chunks = pool.map(_worker_chunk, jobs)
    successes = sum(c[0] for c in chunks)
    x_sum = sum(c[1] for c in chunks)
    x_sumsq = sum(c[2] for c in chunks)
    fraction = successes / tp.trials
    lo, hi = wilson_interval(successes, tp.trials)
    mean_x = x_sum / tp.trials
    var_x = max(0.0, x_sumsq / tp.trials - mean_x * mean_x)
    return {
        "n": tp.params.n,
        "k": tp.params.k,
        "p": tp.p,
        "trials": tp.trials,
        "successes": successes,
        "fraction": fraction,
        "ci_lo": lo,
        "ci_hi": hi,
        "mean_x": mean_x,
        "std_x": math.sqrt(var_x),
        "seed": tp.master_seed,
    }


def critical_probabilities_raw(n: int, k: int) -> dict:
    """Formula-level evaluator; no bit vectors, so n may exceed the word cap."""
    if n < 2 * k + 2:
        raise DomainError(f"critical probabilities need n >= 2k+2, got n={n} k={k}")
    p_c = math.log(n * math.comb(n - 1, k)) / math.comb(n - k - 1, k - 1)
    p_0 = ((k + 1) * math.log(n) - k * math.log(k)) / math.comb(n - 1, k - 1)
    return {"p_c": p_c, "p_0": p_0}


def critical_probabilities(params: GroundParams) -> dict:
    """p_c = log(n C(n-1,k)) / C(n-k-1,k-1) and
    p_0 = ((k+1) log n - k log k) / C(n-1,k-1), natural logs."""
    return critical_probabilities_raw(params.n, params.k)


def find_threshold(params: GroundParams, trials: int, seed: int, *,
                   workers: int = 1, width_tol: float = 0.02,
                   max_iter: int = 30) -> dict:
    """Bisection for the p where the EKR-property frequency crosses 1/2.

    Each evaluation is an estimate_probability call; the bracket moves only
    when the Wilson interval separates from 1/2, and the search stops at an
    undecided midpoint (flagged) or once the bracket is narrower than
    width_tol.  Reported alongside p_c and p_0 for comparison.
    """
    crit = critical_probabilities(params)
    lo, hi = 0.0, 1.0
    iterations = 0
    separated = True
    evaluations = []
    while hi - lo > width_tol and iterations < max_iter:
        mid = 0.5 * (lo + hi)
        est = estimate_probability(
            ThresholdParams(params, mid, trials, seed), workers=workers)
        evaluations.append({"p": mid, "fraction": est["fraction"],
                            "ci_lo": est["ci_lo"], "ci_hi": est["ci_hi"]})
        iterations += 1
        if est["ci_lo"] > 0.5:
            hi = mid
        elif est["ci_hi"] < 0.5:
            lo = mid
        else:
            separated = False
            lo = hi = mid
            break
    return {
        "n": params.n,
        "k": params.k,
        "p_half": 0.5 * (lo + hi),
        "bracket_lo": lo,
        "bracket_hi": hi,
        "iterations": iterations,
        "separated_cleanly": separated,
        "p_c": crit["p_c"],
        "p_0": crit["p_0"],
        "trials_per_point": trials,
        "seed": seed,
        "evaluations": evaluations,
    }


# ── analytic bound evaluators (log-space) ────────────────────────────────

def _log_comb(a: float, b: float) -> float:
    """log C(a,b) via lgamma; 0 when b in {0,a}, -inf when out of range."""
    if b < 0 or b > a:
        return -math.inf
    return (math.lgamma(a + 1.0) - math.lgamma(b + 1.0)
            - math.lgamma(a - b + 1.0))


@dataclass(frozen=True)
class BoundReport:
    p_c: float
    p_0: float
    zeta: float
    p: float
    p_effective: float
    ex_exact: float
    log_ex: float
    lower_bound_prob: float
    first_moment_bound: float
    log_first_moment_bound: float
    near_star_base: float
    log_near_star_base: float
    far_family_bound: float
    log_far_family_bound: float
    near_cutoff: int
    far_cutoff: int
    maximal_family_bound: float
    log_maximal_family_bound: float
    i: int
    j: int
    c_const: float
    epsilon: float

    def to_json_dict(self) -> dict:
        from dataclasses import asdict

        payload = asdict(self)
        for key, value in payload.items():
            if isinstance(value, float) and math.isinf(value):
                payload[key] = "-inf" if value < 0 else "inf"
        return payload


def analytic_bounds(params: GroundParams, zeta: float, i: int, j: int, *,
                    c_const: float = 2.0,
                    epsilon: float = DEFAULT_EPSILON) -> BoundReport:
    """Evaluate the union-bound machinery at p = zeta * p_c.

    first_moment_bound = (n C(n-1,k))^(1-zeta) caps the expected superstar
    count; near_star_base(i) is the base of the i-th power in the
    moderate-distance sum; far_family_bound is the trivial union bound over
    all families of star size; maximal_family_bound caps the expected number
    of maximal independent families at distance pattern (i,j) from a star;
    near_cutoff/far_cutoff are the boundaries of the three distance ranges.
    All in log-space.
    """
    n, k = params.n, params.k
    if n <= 2 * k:
        raise DomainError(f"analytic bounds need n > 2k, got n={n} k={k}")
    if zeta <= 0:
        raise DomainError(f"zeta must be positive, got {zeta}")
    crit = critical_probabilities(params)
    p_c = crit["p_c"]
    p = zeta * p_c
    p_eff = min(p, 1.0)
    star = params.star_size          # C(n-1,k-1)
    cross = params.star_disjoint_degree  # C(n-k-1,k-1)
    big = math.comb(n - 1, k)
    log_nbig = math.log(n) + math.log(big)

    if i < 0 or i > star:
        raise DomainError(f"i must lie in 0..C(n-1,k-1)={star}, got {i}")
    if j < 0:
        raise DomainError(f"j must be nonnegative, got {j}")
    j_cap = i * params.kneser_degree
    if i >= 1 and j > j_cap:
        # for i = 0 the count is identically zero (empty A forces empty B)
        raise DomainError(f"j must lie in 0..i*C(n-k,k)={j_cap}, got {j}")

    log1mp = math.log1p(-p_eff) if p_eff < 1.0 else -math.inf

    # exact E[X] = n C(n-1,k) (1-p)^C(n-k-1,k-1)
    log_ex = log_nbig + cross * log1mp
    # one-star failure probability (1 - (1-p)^cross)^C(n-1,k)
    inner = cross * log1mp
    if inner == -math.inf:
        log_lower = 0.0
    else:
        eim = -math.expm1(inner)  # 1 - (1-p)^cross
        log_lower = big * math.log(eim) if eim > 0 else -math.inf
    log_first_moment_bound = (1.0 - zeta) * log_nbig
    if i >= 1:
        log_eq2 = (math.log(k) + 2.0 + 2.0 * math.log(big) - math.log(n - k)
                   - 2.0 * math.log(i)
                   - zeta * (n - 2 * k) / (c_const * n) * log_nbig)
    else:
        log_eq2 = math.inf  # the moderate-range sum starts at i = 1
    log_far_family_bound = star * (math.log(n) + 1.0 - math.log(k)
                      - zeta * (n - 2 * k) / (400.0 * c_const * c_const * n)
                      * log_nbig)
    near_cutoff = math.ceil(0.5 * epsilon * cross)
    far_cutoff = math.ceil(star / (400.0 * c_const))

    # maximal_family_bound = n C(star,i) C(i*deg, j) (j p)^i (1-p)^(j (cross - i))
    if i == 0:
        log_z = math.log(n) if j == 0 else -math.inf
    elif j == 0:
        log_z = -math.inf  # (j p)^i vanishes
    else:
        jp = j * p_eff
        log_z = (math.log(n) + _log_comb(star, i)
                 + _log_comb(i * params.kneser_degree, j)
                 + i * (math.log(jp) if jp > 0 else -math.inf)
                 + j * (cross - i) * log1mp)

    def safe_exp(x: float) -> float:
        if x == -math.inf:
            return 0.0
        if x > 700.0:
            return math.inf
        return math.exp(x)

    return BoundReport(
        p_c=p_c,
        p_0=crit["p_0"],
        zeta=zeta,
        p=p,
        p_effective=p_eff,
        ex_exact=safe_exp(log_ex),
        log_ex=log_ex,
        lower_bound_prob=safe_exp(log_lower),
        first_moment_bound=safe_exp(log_first_moment_bound),
        log_first_moment_bound=log_first_moment_bound,
        near_star_base=safe_exp(log_eq2) if i >= 1 else math.inf,
        log_near_star_base=log_eq2,
        far_family_bound=safe_exp(log_far_family_bound),
        log_far_family_bound=log_far_family_bound,
        near_cutoff=near_cutoff,
        far_cutoff=far_cutoff,
        maximal_family_bound=safe_exp(log_z),
        log_maximal_family_bound=log_z,
        i=i,
        j=j,
        c_const=c_const,
        epsilon=epsilon,
    )
