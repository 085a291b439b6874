"""k-uniform set families over [n], stored as machine-word bit vectors.

Elements are 1-based (1..n); a k-set is an int with bit i-1 set for element i.
The ground set is capped at 64 so every set is one machine word and disjointness
is a single AND.  Families are kept in canonical order (numeric on bit pattern),
so equality of families is equality of representations.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, GuardError

MAX_GROUND_SET = 64

# build_family refuses to enumerate slices larger than this (random/union/complement).
ENUMERATION_GUARD = 5_000_000


@dataclass(frozen=True)
class GroundParams:
    """Ground-set size n and uniformity k, with 1 <= k <= n <= 64."""

    n: int
    k: int

    def __post_init__(self) -> None:
        if not (1 <= self.k <= self.n):
            raise DomainError(f"need 1 <= k <= n, got n={self.n} k={self.k}")
        if self.n > MAX_GROUND_SET:
            raise DomainError(f"n={self.n} exceeds the bit-vector width cap {MAX_GROUND_SET}")

    @property
    def slice_size(self) -> int:
        """C(n,k): number of k-subsets of [n]."""
        return math.comb(self.n, self.k)

    @property
    def star_size(self) -> int:
        """C(n-1,k-1): size of a full star."""
        return math.comb(self.n - 1, self.k - 1)

    @property
    def kneser_degree(self) -> int:
        """C(n-k,k): number of k-sets disjoint from a fixed k-set."""
        return math.comb(self.n - self.k, self.k)

    @property
    def star_disjoint_degree(self) -> int:
        """C(n-k-1,k-1): sets of a star disjoint from a fixed set avoiding the centre."""
        return math.comb(self.n - self.k - 1, self.k - 1)

    def require_gap(self, op: str) -> None:
        """Raise unless n > 2k (needed by spectral and removal operations)."""
        if self.n <= 2 * self.k:
            raise DomainError(f"{op} requires n > 2k, got n={self.n} k={self.k}")


def mask_from_elements(elements: Sequence[int], n: int) -> int:
    mask = 0
    for e in elements:
        if not (1 <= e <= n):
            raise DomainError(f"element {e} out of range 1..{n}")
        bit = 1 << (e - 1)
        if mask & bit:
            raise DomainError(f"repeated element {e}")
        mask |= bit
    return mask


def elements_from_mask(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length())
        mask ^= low
    return tuple(out)


def enumerate_masks(n: int, k: int) -> Iterator[int]:
    """All k-subset masks of [n] in increasing numeric order (Gosper's hack)."""
    if k == 0:
        yield 0
        return
    limit = 1 << n
    v = (1 << k) - 1
    while v < limit:
        yield v
        c = v & -v
        r = v + c
        v = (((r ^ v) >> 2) // c) | r


@dataclass(frozen=True)
class SetFamily:
    """A distinct collection of k-subsets of [n] in canonical (numeric) order."""

    params: GroundParams
    members: tuple[int, ...]

    def __post_init__(self) -> None:
        n, k = self.params.n, self.params.k
        full = (1 << n) - 1
        prev = -1
        for m in self.members:
            if m <= prev:
                raise DomainError("family members must be strictly increasing bit patterns")
            if m & ~full:
                raise DomainError("member uses elements beyond n")
            if m.bit_count() != k:
                raise DomainError(f"member {elements_from_mask(m)} is not a {k}-set")
            prev = m

    @classmethod
    def from_masks(cls, params: GroundParams, masks) -> "SetFamily":
        return cls(params, tuple(sorted(set(masks))))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, mask: int) -> bool:
        return mask in set(self.members)

    @property
    def member_set(self) -> frozenset:
        return frozenset(self.members)

    def complement(self) -> "SetFamily":
        """Complement with respect to the full slice C([n],k)."""
        if self.params.slice_size > ENUMERATION_GUARD:
            raise GuardError("slice too large to enumerate for complement")
        mine = set(self.members)
        return SetFamily(
            self.params,
            tuple(m for m in enumerate_masks(self.params.n, self.params.k) if m not in mine),
        )

    def element_sets(self) -> list[tuple[int, ...]]:
        return [elements_from_mask(m) for m in self.members]


# ── constructors ─────────────────────────────────────────────────────────

def star(params: GroundParams, centre: int) -> SetFamily:
    """All k-subsets of [n] containing the fixed element `centre`."""
    if not (1 <= centre <= params.n):
        raise DomainError(f"star centre {centre} out of range 1..{params.n}")
    if params.star_size > ENUMERATION_GUARD:
        raise GuardError("star too large to materialise")
    bit = 1 << (centre - 1)
    others = [i for i in range(params.n) if i != centre - 1]
    masks = []
    for combo in combinations(others, params.k - 1):
        m = bit
        for pos in combo:
            m |= 1 << pos
        masks.append(m)
    return SetFamily.from_masks(params, masks)


def antistar(params: GroundParams, avoided: int) -> SetFamily:
    """All k-subsets of [n] avoiding the fixed element `avoided`."""
    if not (1 <= avoided <= params.n):
        raise DomainError(f"anti-star element {avoided} out of range 1..{params.n}")
    if math.comb(params.n - 1, params.k) > ENUMERATION_GUARD:
        raise GuardError("anti-star too large to materialise")
    others = [i for i in range(params.n) if i != avoided - 1]
    masks = []
    for combo in combinations(others, params.k):
        m = 0
        for pos in combo:
            m |= 1 << pos
        masks.append(m)
    return SetFamily.from_masks(params, masks)


def union_of_stars(params: GroundParams, centres: Sequence[int]) -> SetFamily:
    """All k-subsets meeting the centre set: the family G_S for S = centres."""
    smask = mask_from_elements(centres, params.n)
    if params.slice_size > ENUMERATION_GUARD:
        raise GuardError("slice too large to enumerate for union of stars")
    return SetFamily(
        params,
        tuple(m for m in enumerate_masks(params.n, params.k) if m & smask),
    )


def random_family(params: GroundParams, m: int, seed: int) -> SetFamily:
    """m distinct k-sets sampled without replacement via a seeded shuffle."""
    total = params.slice_size
    if m > total:
        raise DomainError(f"requested {m} sets but C({params.n},{params.k}) = {total}")
    if total > ENUMERATION_GUARD:
        raise GuardError("slice too large to enumerate for random sampling")
    all_masks = list(enumerate_masks(params.n, params.k))
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed & (2**64 - 1))))
    order = rng.permutation(total)
    return SetFamily.from_masks(params, (all_masks[i] for i in order[:m]))


_SPEC_RE = re.compile(r"^(star|antistar|union|complement-of|random|file):(.*)$")


def build_family(params: GroundParams, spec: str) -> SetFamily:
    """Build a family from a spec string.

    Accepted forms: star:<i> | antistar:<i> | union:<i1,...,is> |
    complement-of:<spec> | random:<m>:<seed> | file:<path>.
    """
    m = _SPEC_RE.match(spec.strip())
    if not m:
        raise DomainError(f"unrecognised family spec {spec!r}")
    kind, rest = m.group(1), m.group(2)
    if kind == "star":
        return star(params, _parse_int(rest, "star centre"))
    if kind == "antistar":
        return antistar(params, _parse_int(rest, "anti-star element"))
    if kind == "union":
        centres = [_parse_int(tok, "union centre") for tok in rest.split(",") if tok != ""]
        if not centres:
            raise DomainError("union spec needs at least one centre")
        return union_of_stars(params, centres)
    if kind == "complement-of":
        return build_family(params, rest).complement()
    if kind == "random":
        parts = rest.split(":")
        if len(parts) != 2:
            raise DomainError(f"random spec must be random:<m>:<seed>, got {spec!r}")
        return random_family(params, _parse_int(parts[0], "random size"),
                             _parse_int(parts[1], "random seed"))
    if kind == "file":
        fam = load_family(Path(rest))
        if fam.params != params:
            raise DomainError(
                f"file header n={fam.params.n} k={fam.params.k} "
                f"does not match requested n={params.n} k={params.k}")
        return fam
    raise DomainError(f"unrecognised family spec {spec!r}")


def _parse_int(tok: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise DomainError(f"bad {what}: {tok!r}") from None


# ── file format: header `n=<n> k=<k>`, one comma-separated set per line ──

def load_family(path: Path) -> SetFamily:
    params = None
    masks: list[int] = []
    seen: set[int] = set()
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if params is None:
            hm = re.match(r"^n=(\d+)\s+k=(\d+)$", line)
            if not hm:
                raise DomainError(f"first data line must be 'n=<n> k=<k>', got {line!r}")
            params = GroundParams(int(hm.group(1)), int(hm.group(2)))
            continue
        elements = [_parse_int(tok.strip(), "element") for tok in line.split(",")]
        mask = mask_from_elements(elements, params.n)
        if mask in seen:
            raise DomainError(f"duplicate set {tuple(sorted(elements))} in {path}")
        seen.add(mask)
        masks.append(mask)
    if params is None:
        raise DomainError(f"no header line in {path}")
    return SetFamily.from_masks(params, masks)


def save_family(family: SetFamily, path: Path) -> None:
    lines = [f"n={family.params.n} k={family.params.k}"]
    lines += [",".join(map(str, elements_from_mask(m))) for m in family.members]
    Path(path).write_text("\n".join(lines) + "\n")


# ── combinatorial statistics ─────────────────────────────────────────────

def disjoint_pairs(family: SetFamily) -> int:
    """dp(F): unordered pairs {A,B} with A AND B == 0."""
    mem = family.members
    m = len(mem)
    if m < 2:
        return 0
    if m <= 128:
        count = 0
        for i in range(m - 1):
            a = mem[i]
            for b in mem[i + 1:]:
                if not a & b:
                    count += 1
        return count
    arr = np.array(mem, dtype=np.uint64)
    ordered = 0
    step = 4096
    for i0 in range(0, m, step):
        blk = arr[i0:i0 + step]
        ordered += int(((blk[:, None] & arr[None, :]) == 0).sum())
    return ordered // 2  # diagonal never disjoint (k >= 1)


def sym_diff_size(f: SetFamily, g: SetFamily) -> int:
    """|F Δ G| for families over the same ground parameters."""
    if f.params != g.params:
        raise DomainError("symmetric difference needs matching (n,k)")
    return len(f.member_set ^ g.member_set)


def degree_profile(family: SetFamily) -> tuple[int, ...]:
    """d_i = number of members containing element i, for i = 1..n."""
    degrees = [0] * family.params.n
    for mask in family.members:
        m = mask
        while m:
            low = m & -m
            degrees[low.bit_length() - 1] += 1
            m ^= low
    return tuple(degrees)


@dataclass(frozen=True)
class FamilyStats:
    """The (alpha, beta) parametrisation of a family relative to l full stars.

    size = (l - alpha) * C(n-1,k-1) and
    dp   = (C(l,2) + beta) * C(n-1,k-1) * C(n-k-1,k-1), both exactly.
    """

    params: GroundParams
    ell: int
    size: int
    dp: int
    alpha: Fraction
    beta: Fraction

    def removal_precondition_met(self, c_const: float) -> bool:
        """max(2l|alpha|, |beta|) <= (n-2k) / ((20C)^2 n), exactly in rationals."""
        n, k = self.params.n, self.params.k
        threshold = Fraction(n - 2 * k) / (400 * Fraction(c_const) ** 2 * n)
        return max(2 * self.ell * abs(self.alpha), abs(self.beta)) <= threshold

    def to_json_dict(self) -> dict:
        return {
            "n": self.params.n,
            "k": self.params.k,
            "ell": self.ell,
            "size": self.size,
            "dp": self.dp,
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "alpha_exact": f"{self.alpha.numerator}/{self.alpha.denominator}",
            "beta_exact": f"{self.beta.numerator}/{self.beta.denominator}",
        }


def family_stats(family: SetFamily, ell: int) -> FamilyStats:
    """Exact alpha and beta for a family at a given l (requires n > 2k)."""
    if ell < 1:
        raise DomainError(f"l must be a positive integer, got {ell}")
    params = family.params
    params.require_gap("family_stats")
    size = len(family)
    dp = disjoint_pairs(family)
    alpha = ell - Fraction(size, params.star_size)
    beta = Fraction(dp, params.star_size * params.star_disjoint_degree) - math.comb(ell, 2)
    return FamilyStats(params, ell, size, dp, alpha, beta)
