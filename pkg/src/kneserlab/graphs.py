"""Kneser graphs K(n,k) at desk scale: exact independence, spectra, Baranyai.

Vertices are the k-subsets of [n] in canonical mask order; adjacency joins
disjoint sets.  alpha(K(n,k)) is certified by matching the star lower bound
against the ratio (Hoffman) upper bound V * |lambda_1| / (lambda_0 + |lambda_1|),
which equals C(n-1,k-1) exactly; a branch-and-bound fallback covers any graph
where the two differ.  Uniqueness of maximum independent sets is checked by
honest enumeration, guarded by a vertex cap.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import DomainError, GuardError
from .families import GroundParams, SetFamily, elements_from_mask, enumerate_masks
from .mis import (
    DEFAULT_NODE_CAP,
    enumerate_maximum_independent_sets,
    max_independent_set_masks,
)
from .spectral import eigenvalue_multiplicity, kneser_eigenvalue

BUILD_GUARD = 50_000
SPECTRUM_GUARD = 500
ENUMERATION_VERTEX_GUARD = 200


@dataclass(frozen=True)
class KneserGraph:
    """K(n,k) with per-vertex adjacency bit vectors over vertex indices."""

    params: GroundParams
    vertices: tuple[int, ...]
    adjacency: tuple[int, ...]
    star_vertex_masks: tuple[int, ...]  # index x-1 -> vertices containing element x

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return sum(a.bit_count() for a in self.adjacency) // 2

    def vertex_index(self, mask: int) -> int:
        i = bisect.bisect_left(self.vertices, mask)
        if i == len(self.vertices) or self.vertices[i] != mask:
            raise DomainError(f"{elements_from_mask(mask)} is not a vertex")
        return i

    def family_from_vertex_mask(self, vmask: int) -> SetFamily:
        masks = []
        m = vmask
        while m:
            low = m & -m
            masks.append(self.vertices[low.bit_length() - 1])
            m ^= low
        return SetFamily.from_masks(self.params, masks)


def build_graph(params: GroundParams, *, guard: int = BUILD_GUARD) -> KneserGraph:
    """Materialise K(n,k); requires n >= 2k and C(n,k) within the guard."""
    n, k = params.n, params.k
    if n < 2 * k:
        raise DomainError(f"Kneser graph needs n >= 2k, got n={n} k={k}")
    nv = params.slice_size
    if nv > guard:
        raise GuardError(f"C({n},{k}) = {nv} exceeds build guard {guard}")
    vertices = tuple(enumerate_masks(n, k))
    arr = np.array(vertices, dtype=np.uint64)
    adjacency: list[int] = []
    step = max(1, min(2048, (1 << 24) // max(nv, 1)))
    for i0 in range(0, nv, step):
        blk = arr[i0:i0 + step]
        disj = (blk[:, None] & arr[None, :]) == 0
        packed = np.packbits(disj, axis=1, bitorder="little")
        for row in packed:
            adjacency.append(int.from_bytes(row.tobytes(), "little"))
    star_masks = [0] * n
    for idx, mask in enumerate(vertices):
        bit = 1 << idx
        m = mask
        while m:
            low = m & -m
            star_masks[low.bit_length() - 1] |= bit
            m ^= low
    return KneserGraph(params, vertices, tuple(adjacency), tuple(star_masks))


def export_edges(graph: KneserGraph, stream: IO[str]) -> None:
    """Edge list `u v` with a `# kneser n=<n> k=<k>` header, canonical order."""
    stream.write(f"# kneser n={graph.params.n} k={graph.params.k}\n")
    for u in range(graph.vertex_count):
        m = graph.adjacency[u] >> (u + 1)
        v = u + 1
        while m:
            if m & 1:
                stream.write(f"{u} {v}\n")
            m >>= 1
            v += 1


# ── exact independence ───────────────────────────────────────────────────

@dataclass(frozen=True)
class MISResult:
    size: int
    witness: SetFamily
    node_count: int
    method: str
    is_unique_up_to_stars: bool | None = None


def ratio_bound(params: GroundParams) -> int:
    """Hoffman bound V*|lambda_1|/(lambda_0+|lambda_1|); equals C(n-1,k-1)."""
    lam0 = kneser_eigenvalue(params, 0).value
    lam1 = -kneser_eigenvalue(params, 1).value
    return params.slice_size * lam1 // (lam0 + lam1)


def star_vertex_mask_checked(graph: KneserGraph, centre: int) -> int:
    """Vertex mask of the star at `centre`, with its independence verified."""
    smask = graph.star_vertex_masks[centre - 1]
    m = smask
    while m:
        low = m & -m
        if graph.adjacency[low.bit_length() - 1] & smask:
            raise AssertionError("star is not independent; adjacency is corrupt")
        m ^= low
    return smask


def max_independent_set(
    graph: KneserGraph,
    *,
    adjacency: Sequence[int] | None = None,
    node_cap: int = DEFAULT_NODE_CAP,
) -> MISResult:
    """Exact maximum independent set of K(n,k) or of an edge-subgraph of it.

    For the full graph the verified star incumbent meets the ratio bound, so
    the answer is certified without search; any gap falls back to branch and
    bound.  Passing `adjacency` (edge subset, same vertex order) always runs
    the search, since the ratio bound only applies to the regular full graph.
    """
    if adjacency is None:
        star0 = star_vertex_mask_checked(graph, 1)
        upper = ratio_bound(graph.params)
        if star0.bit_count() == upper:
            return MISResult(
                size=upper,
                witness=graph.family_from_vertex_mask(star0),
                node_count=0,
                method="ratio-bound",
            )
        size, mask, nodes = max_independent_set_masks(
            graph.adjacency, initial=star0, upper_bound=upper, node_cap=node_cap)
        return MISResult(size, graph.family_from_vertex_mask(mask), nodes,
                         "branch-and-bound")
    size, mask, nodes = max_independent_set_masks(list(adjacency),
                                                  node_cap=node_cap)
    return MISResult(size, graph.family_from_vertex_mask(mask), nodes,
                     "branch-and-bound")


def solver_clique_partition(graph: KneserGraph) -> list[int] | None:
    """Static clique partition of the vertex set, as vertex masks.

    k = 2 uses the round-robin 1-factorisation (n-1 or n matchings); k | n
    uses the Baranyai partition (exactly C(n-1,k-1) classes).  Other cases
    return None and the solver falls back to recomputed greedy covers.
    """
    n, k = graph.params.n, graph.params.k
    if k == 2:
        classes: list[int] = []
        if n % 2 == 0:
            for r in range(n - 1):
                cm = _pair_mask(graph, n - 1, r)
                for i in range(1, n // 2):
                    cm |= _pair_mask(graph, (r + i) % (n - 1), (r - i) % (n - 1))
                classes.append(cm)
        else:
            for r in range(n):
                cm = 0
                for i in range(1, (n + 1) // 2):
                    cm |= _pair_mask(graph, (r + i) % n, (r - i) % n)
                classes.append(cm)
        return classes
    if n % k == 0:
        partition = baranyai_partition(graph.params)
        classes = []
        for fam in partition.classes:
            cm = 0
            for mask in fam.members:
                cm |= 1 << graph.vertex_index(mask)
            classes.append(cm)
        return classes
    return None


def _pair_mask(graph: KneserGraph, a: int, b: int) -> int:
    return 1 << graph.vertex_index((1 << a) | (1 << b))


def enumerate_maximum(graph: KneserGraph, *, node_cap: int = DEFAULT_NODE_CAP,
                      solution_cap: int = 1_000_000,
                      vertex_guard: int = ENUMERATION_VERTEX_GUARD,
                      spectral_prune: bool = True) -> list[SetFamily]:
    """All maximum independent sets of K(n,k), by exhaustive enumeration.

    For n > 2k the search may additionally use a certified containment rule
    (`spectral_prune`): a maximum independent set attains the ratio bound with
    equality, which forces its indicator into the span of the top two
    eigenspaces, i.e. makes it affine; the Boolean affine functions on the
    slice are exactly 0, 1, x_i and 1-x_j, and only the stars have the right
    size.  Prefixes contained in no star are therefore pruned.  (The strict
    gap |lambda_i| < |lambda_1| for i >= 2 needs n > 2k, so the rule is never
    applied at n = 2k.)  The unpruned search is kept reachable for
    cross-validation; the two agree on every instance small enough to run both.
    """
    if graph.vertex_count > vertex_guard:
        raise GuardError(
            f"all-solutions enumeration guarded to {vertex_guard} vertices, "
            f"graph has {graph.vertex_count}")
    alpha = max_independent_set(graph).size
    classes = solver_clique_partition(graph)
    groups = None
    if spectral_prune and graph.params.n > 2 * graph.params.k:
        groups = graph.star_vertex_masks
    masks, _ = enumerate_maximum_independent_sets(
        graph.adjacency, alpha, clique_classes=classes,
        containment_groups=groups,
        node_cap=node_cap, solution_cap=solution_cap)
    return [graph.family_from_vertex_mask(m) for m in masks]


def is_star(family: SetFamily) -> bool:
    """True iff the family is a full star (common element, size C(n-1,k-1))."""
    if len(family) != family.params.star_size:
        return False
    common = (1 << family.params.n) - 1
    for mask in family.members:
        common &= mask
        if not common:
            return False
    return common.bit_count() >= 1


def verify_ekr(params: GroundParams, *, uniqueness: str = "auto",
               node_cap: int = DEFAULT_NODE_CAP,
               vertex_guard: int = ENUMERATION_VERTEX_GUARD) -> dict:
    """alpha(K(n,k)) vs C(n-1,k-1), and whether the stars are the only maxima.

    uniqueness: 'auto' enumerates when the vertex count allows it and reports
    None otherwise; 'force' raises the guard error instead; 'skip' never
    enumerates.
    """
    graph = build_graph(params)
    result = max_independent_set(graph, node_cap=node_cap)
    alpha = result.size
    report = {
        "n": params.n,
        "k": params.k,
        "alpha": alpha,
        "equals_ekr": alpha == params.star_size,
        "only_stars": None,
        "num_maximum": None,
        "method": result.method,
    }
    if uniqueness == "skip":
        return report
    try:
        families = enumerate_maximum(graph, node_cap=node_cap,
                                     vertex_guard=vertex_guard)
    except GuardError:
        if uniqueness == "force":
            raise
        return report
    report["num_maximum"] = len(families)
    report["only_stars"] = all(is_star(f) for f in families)
    return report


# ── spectrum cross-check ─────────────────────────────────────────────────

def spectrum_cross_check(params: GroundParams, *, tol: float = 1e-6) -> dict:
    """Numeric eigenvalues of K(n,k) vs (-1)^i C(n-k-i,k-i) with multiplicities."""
    nv = params.slice_size
    if nv > SPECTRUM_GUARD:
        raise GuardError(f"spectrum check guarded to C(n,k) <= {SPECTRUM_GUARD}")
    graph = build_graph(params)
    dense = np.zeros((nv, nv), dtype=np.float64)
    for u in range(nv):
        m = graph.adjacency[u]
        while m:
            low = m & -m
            dense[u, low.bit_length() - 1] = 1.0
            m ^= low
    computed = np.sort(np.linalg.eigvalsh(dense))
    expected = []
    for i in range(params.k + 1):
        lam = kneser_eigenvalue(params, i).value
        expected.extend([lam] * eigenvalue_multiplicity(params, i))
    expected_arr = np.sort(np.array(expected, dtype=np.float64))
    max_dev = float(np.max(np.abs(computed - expected_arr)))
    pairs: dict[int, int] = {}
    for i in range(params.k + 1):
        lam = kneser_eigenvalue(params, i).value
        pairs[lam] = pairs.get(lam, 0) + eigenvalue_multiplicity(params, i)
    return {
        "n": params.n,
        "k": params.k,
        "ok": max_dev <= tol,
        "max_deviation": max_dev,
        "lambda1_multiplicity": eigenvalue_multiplicity(params, 1),
        "spectrum": sorted(pairs.items()),
    }


# ── Baranyai partition (k | n) via integral flows ────────────────────────

class _Dinic:
    """Integer max-flow, adjacency-list Dinic; small networks only."""

    def __init__(self, n: int) -> None:
        self.n = n
        self.to: list[int] = []
        self.cap: list[int] = []
        self.head: list[list[int]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, cap: int) -> int:
        idx = len(self.to)
        self.to.append(v)
        self.cap.append(cap)
        self.head[u].append(idx)
        self.to.append(u)
        self.cap.append(0)
        self.head[v].append(idx + 1)
        return idx

    def max_flow(self, s: int, t: int) -> int:
        flow = 0
        while True:
            level = [-1] * self.n
            level[s] = 0
            queue = [s]
            for u in queue:
                for idx in self.head[u]:
                    v = self.to[idx]
                    if self.cap[idx] > 0 and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                return flow
            it = [0] * self.n

            def dfs(u: int, pushed: int) -> int:
                if u == t:
                    return pushed
                while it[u] < len(self.head[u]):
                    idx = self.head[u][it[u]]
                    v = self.to[idx]
                    if self.cap[idx] > 0 and level[v] == level[u] + 1:
                        got = dfs(v, min(pushed, self.cap[idx]))
                        if got:
                            self.cap[idx] -= got
                            self.cap[idx ^ 1] += got
                            return got
                    it[u] += 1
                return 0

            while True:
                pushed = dfs(s, 1 << 60)
                if not pushed:
                    break
                flow += pushed


@dataclass(frozen=True)
class BaranyaiPartition:
    """Partition of C([n],k) into C(n-1,k-1) perfect matchings (k | n)."""

    params: GroundParams
    classes: tuple[SetFamily, ...]

    def validate(self) -> None:
        params = self.params
        n, k = params.n, params.k
        r = n // k
        full = (1 << n) - 1
        if len(self.classes) != params.star_size:
            raise AssertionError("wrong number of classes")
        seen: set[int] = set()
        for fam in self.classes:
            if len(fam) != r:
                raise AssertionError("class is not a perfect matching")
            union = 0
            for mask in fam.members:
                if union & mask:
                    raise AssertionError("class members overlap")
                union |= mask
                if mask in seen:
                    raise AssertionError("set appears in two classes")
                seen.add(mask)
            if union != full:
                raise AssertionError("class does not cover [n]")
        if len(seen) != params.slice_size:
            raise AssertionError("classes do not cover C([n],k)")


def baranyai_partition(params: GroundParams) -> BaranyaiPartition:
    """Constructive Baranyai partition by one integral flow per element.

    Classes hold n/k growing partial sets.  Adding element m+1, a class must
    extend exactly one slot, and each partial set S must absorb the element in
    exactly C(n-m-1, k-|S|-1) of its occurrences; the fractional solution
    sends (k-|S|)/(n-m) per slot, and an integral flow of the same value
    always exists.  A backtracking fallback covers tiny cases defensively.
    """
    n, k = params.n, params.k
    if n % k != 0:
        raise DomainError(f"Baranyai partition needs k | n, got n={n} k={k}")
    if params.slice_size > BUILD_GUARD:
        raise GuardError("slice too large for Baranyai construction")
    try:
        classes = _baranyai_flow(n, k)
    except AssertionError:
        if n <= 8:
            classes = _baranyai_backtrack(n, k)
        else:
            raise
    partition = BaranyaiPartition(
        params, tuple(SetFamily.from_masks(params, cls) for cls in classes))
    partition.validate()
    return partition


def _baranyai_flow(n: int, k: int) -> list[list[int]]:
    m_classes = math.comb(n - 1, k - 1)
    r = n // k
    classes: list[list[int]] = [[0] * r for _ in range(m_classes)]
    for m in range(n):
        bit = 1 << m
        remaining = n - m - 1
        # sink demand per distinct partial set
        demand: dict[int, int] = {}
        for cls in classes:
            for s in cls:
                need = k - s.bit_count() - 1
                if need < 0:
                    continue
                e = math.comb(remaining, need) if need <= remaining else 0
                if e > 0:
                    demand[s] = e
        type_ids = {s: i for i, s in enumerate(sorted(demand))}
        source = 0
        class_base = 1
        type_base = class_base + m_classes
        sink = type_base + len(type_ids)
        net = _Dinic(sink + 1)
        class_edges: list[list[tuple[int, int]]] = [[] for _ in range(m_classes)]
        for c, cls in enumerate(classes):
            net.add_edge(source, class_base + c, 1)
            counts: dict[int, int] = {}
            for s in cls:
                if s in demand:
                    counts[s] = counts.get(s, 0) + 1
            for s, cnt in counts.items():
                idx = net.add_edge(class_base + c, type_base + type_ids[s], cnt)
                class_edges[c].append((idx, s))
        for s, tid in type_ids.items():
            net.add_edge(type_base + tid, sink, demand[s])
        flow = net.max_flow(source, sink)
        if flow != m_classes:
            raise AssertionError(f"flow {flow} != {m_classes} at element {m + 1}")
        for c in range(m_classes):
            extended = None
            for idx, s in class_edges[c]:
                sent = net.cap[idx ^ 1]  # reverse capacity = flow on the arc
                if sent > 0:
                    if sent != 1:
                        raise AssertionError("class extended more than one slot")
                    extended = s
                    break
            if extended is None:
                raise AssertionError("class extended no slot")
            classes[c][classes[c].index(extended)] = extended | bit
    return classes


def _baranyai_backtrack(n: int, k: int) -> list[list[int]]:
    """Exact backtracking 1-factorisation of the slice; de-risks the flow path."""
    all_masks = list(enumerate_masks(n, k))
    full = (1 << n) - 1
    unused = set(all_masks)
    classes: list[list[int]] = []

    def extend(current: list[int], union: int) -> bool:
        if union == full:
            classes.append(current.copy())
            for mask in current:
                unused.discard(mask)
            if not unused:
                return True
            nxt: list[int] = []
            if extend(nxt, 0):
                return True
            for mask in current:
                unused.add(mask)
            classes.pop()
            return False
        for mask in sorted(unused):
            if mask & union:
                continue
            if current and mask < current[-1]:
                continue
            current.append(mask)
            if extend(current, union | mask):
                return True
            current.pop()
        return False

    if not extend([], 0):
        raise AssertionError("backtracking failed to factorise the slice")
    return classes


def export_partition(partition: BaranyaiPartition, stream: IO[str]) -> None:
    """One class per line; sets comma-joined, separated by `|`."""
    for fam in partition.classes:
        stream.write("|".join(",".join(map(str, elements_from_mask(m)))
                              for m in fam.members) + "\n")


def extremal_subgraph(params: GroundParams,
                      *, node_cap: int = DEFAULT_NODE_CAP) -> dict:
    """Clique-union subgraph from the Baranyai partition, with exact alpha.

    The classes become cliques of size n/k; the subgraph is (n-k)/k-regular
    with (n-k)/(2k) * C(n,k) edges and keeps alpha = C(n-1,k-1).
    """
    n, k = params.n, params.k
    partition = baranyai_partition(params)
    graph = build_graph(params)
    nv = graph.vertex_count
    adjacency = [0] * nv
    for fam in partition.classes:
        idxs = [graph.vertex_index(m) for m in fam.members]
        cm = 0
        for i in idxs:
            cm |= 1 << i
        for i in idxs:
            adjacency[i] |= cm & ~(1 << i)
    size, mask, nodes = max_independent_set_masks(adjacency, node_cap=node_cap)
    degrees = {a.bit_count() for a in adjacency}
    return {
        "n": n,
        "k": k,
        "alpha": size,
        "witness": graph.family_from_vertex_mask(mask),
        "degree": max(degrees),
        "regular": len(degrees) == 1,
        "edges": sum(a.bit_count() for a in adjacency) // 2,
        "expected_edges": (n - k) * params.slice_size // (2 * k),
        "node_count": nodes,
        "num_classes": len(partition.classes),
    }
