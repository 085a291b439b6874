"""Spectral decomposition of family indicators on the k-uniform slice.

The indicator f of a family splits as f = f0 + f1 + f2: constant part,
best affine part, and the residual orthogonal to every affine function
(uniform measure on C([n],k)).  The affine space is exactly the span of the
top two Kneser eigenspaces, so the projection can be computed in closed form
from the degree profile: with y_i = x_i - k/n,

    E[y_i y_j] = k(n-k)/n^2 * (delta_ij - 1/(n-1) (i != j)),

which is c*(n*I - J) with c = k(n-k)/(n^2 (n-1)); on the gauge slice
sum_i a_i = 0 this is diagonal, so the normal equations solve in O(n).
All norms are exact rationals; the dataclass carries float views for reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError
from .families import GroundParams, SetFamily, degree_profile, family_stats

FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class KneserEigenvalue:
    """lambda_i = (-1)^i * C(n-k-i, k-i) for 0 <= i <= k."""

    index: int
    value: int


def kneser_eigenvalue(params: GroundParams, i: int) -> KneserEigenvalue:
    n, k = params.n, params.k
    if n < 2 * k:
        raise DomainError(f"Kneser eigenvalues need n >= 2k, got n={n} k={k}")
    if not (0 <= i <= k):
        raise DomainError(f"eigenvalue index {i} out of range 0..{k}")
    value = (-1) ** i * math.comb(n - k - i, k - i)
    return KneserEigenvalue(i, value)


def eigenvalue_multiplicity(params: GroundParams, i: int) -> int:
    """dim of the i-th eigenspace: C(n,i) - C(n,i-1); gives 1 and n-1 for i=0,1."""
    if not (0 <= i <= params.k):
        raise DomainError(f"eigenvalue index {i} out of range 0..{params.k}")
    below = math.comb(params.n, i - 1) if i >= 1 else 0
    return math.comb(params.n, i) - below


@dataclass(frozen=True)
class SpectralDecomposition:
    """f = f0 + f1 + f2 with exact rational norms and a float report view.

    affine_coeffs = (a0, a1..an) describes g = f0 + f1 as a0 + sum a_i x_i
    under the gauge sum_{i>=1} a_i = 0 (the one linear dependency on the
    slice, sum_i x_i == k, is absorbed into a0).
    """

    params: GroundParams
    f0: float
    affine_coeffs: tuple[float, ...]
    f1_norm_sq: float
    f2_norm_sq: float
    parseval_residual: float
    f0_exact: Fraction = field(repr=False)
    f1_norm_sq_exact: Fraction = field(repr=False)
    f2_norm_sq_exact: Fraction = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "f0": self.f0,
            "affine_coeffs": list(self.affine_coeffs),
            "f1_norm_sq": self.f1_norm_sq,
            "f2_norm_sq": self.f2_norm_sq,
            "parseval_residual": self.parseval_residual,
        }


def decompose_affine(family: SetFamily) -> SpectralDecomposition:
    """Least-squares affine approximation of the family indicator (n > 2k)."""
    params = family.params
    params.require_gap("decompose_affine")
    n, k = params.n, params.k
    total = params.slice_size
    size = len(family)
    degrees = degree_profile(family)

    mean = Fraction(size, total)
    # b_i = E[f y_i]; the gauge solution is a_i = b_i * n(n-1) / (k(n-k)).
    scale = Fraction(n * (n - 1), k * (n - k))
    coeffs = [mean]
    f1 = Fraction(0)
    for d in degrees:
        b = Fraction(d, total) - mean * Fraction(k, n)
        a = b * scale
        coeffs.append(a)
        f1 += a * b
    f2 = mean - mean * mean - f1

    f0_f = float(mean)
    f1_f = float(f1)
    f2_f = float(f2)
    residual = abs(float(mean) - f0_f * f0_f - f1_f - f2_f)
    return SpectralDecomposition(
        params=params,
        f0=f0_f,
        affine_coeffs=tuple(float(a) for a in coeffs),
        f1_norm_sq=f1_f,
        f2_norm_sq=f2_f,
        parseval_residual=residual,
        f0_exact=mean,
        f1_norm_sq_exact=f1,
        f2_norm_sq_exact=f2,
    )


def quadratic_form(family: SetFamily) -> int:
    """f^T A f via an explicit double sum over ordered disjoint pairs."""
    mem = family.members
    return sum(1 for a in mem for b in mem if not a & b)


@dataclass(frozen=True)
class ResidualBoundReport:
    lhs: float
    rhs: float
    holds: bool

    def to_json_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


def residual_bound_check(family: SetFamily, ell: int) -> ResidualBoundReport:
    """Residual-norm inequality ||f2||^2 <= ((2l-1)alpha + 2beta) * k/(n-2k)."""
    params = family.params
    params.require_gap("residual_bound_check")
    stats = family_stats(family, ell)
    dec = decompose_affine(family)
    n, k = params.n, params.k
    rhs_exact = ((2 * ell - 1) * stats.alpha + 2 * stats.beta) * Fraction(k, n - 2 * k)
    lhs = float(dec.f2_norm_sq_exact)
    rhs = float(rhs_exact)
    holds = lhs <= rhs + FLOAT_TOL
    return ResidualBoundReport(lhs=lhs, rhs=rhs, holds=holds)


def residual_min_eigenvalue(params: GroundParams) -> int:
    """Most negative eigenvalue on the non-affine part: lambda_3 when k >= 3, else 0."""
    if params.k < 3:
        return 0
    return -math.comb(params.n - params.k - 3, params.k - 3)
