"""Exact integer combinatorics behind the cycle variances and the
Chebyshev inversion.

Everything in this module is computed with Python's arbitrary-precision
integers (rationals where a quotient appears), so results are exact.  The
quantities:

* ``catalan_weight(k)``   -- the (k/2)-th Catalan number for even k, else 0.
* ``gen_coeff(m, r)``     -- coefficient of z^m in g(z)^r where
  g(z) = (1 - sqrt(1 - 4 z^2)) / (2 z) = z + z^3 + 2 z^5 + 5 z^7 + ...
* ``chebyshev_coeffs(m)`` -- the doubled Chebyshev polynomial P_m with
  P_m(z + 1/z) = z^m + z^-m, equivalently P_m(2 cos t) = 2 cos(m t).
* ``cancellation_sum(k)`` -- sum_{r=1..k} P_2k[2r] * r * psi_2r, which
  vanishes for every k >= 2 (the even-trace cancellation identity).
* ``inverse_binomial_matrix(k)`` -- exact inverse of the odd-power binomial
  matrix; its entries are odd-degree Chebyshev coefficients.
* ``wick_moment(cov, index)`` -- Gaussian moments by explicit enumeration
  of pair partitions.

Supported bounds are enforced up front (``OverflowError``) so that callers
never trigger runaway computations; Python integers themselves do not wrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

GEN_COEFF_MAX_M = 60
CANCELLATION_MAX_K = 30
CATALAN_MAX_K = 2 * CANCELLATION_MAX_K
INVERSE_BINOMIAL_MAX_K = 30
WICK_MAX_ORDER = 12


@dataclass(frozen=True)
class IntPoly:
    """Integer polynomial; ``coeffs[i]`` is the coefficient of x^i.

    The trailing coefficient is nonzero unless the polynomial is zero.
    ``poly[i]`` returns the coefficient of x^i (0 beyond the degree).
    """

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if self.coeffs and self.coeffs[-1] == 0:
            raise ValueError("trailing coefficient must be nonzero")

    @staticmethod
    def from_list(coeffs: Sequence[int]) -> "IntPoly":
        cs = list(coeffs)
        while cs and cs[-1] == 0:
            cs.pop()
        return IntPoly(tuple(int(c) for c in cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, i: int) -> int:
        if i < 0:
            raise IndexError("negative power")
        return self.coeffs[i] if i < len(self.coeffs) else 0

    def __call__(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


@dataclass(frozen=True)
class LowerTriangularIntMatrix:
    """Exact lower triangular integer matrix, stored as row tuples."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        k = len(self.rows)
        for i, row in enumerate(self.rows):
            if len(row) != k:
                raise ValueError("rows must all have the matrix dimension")
            if any(row[j] != 0 for j in range(i + 1, k)):
                raise ValueError("entries above the diagonal must be zero")

    @property
    def size(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> int:
        return self.rows[i][j]

    def matmul(self, other: "LowerTriangularIntMatrix") -> "LowerTriangularIntMatrix":
        k = self.size
        if other.size != k:
            raise ValueError("dimension mismatch")
        rows = tuple(
            tuple(
                sum(self.rows[i][t] * other.rows[t][j] for t in range(k))
                for j in range(k)
            )
            for i in range(k)
        )
        return LowerTriangularIntMatrix(rows)

    @staticmethod
    def identity(k: int) -> "LowerTriangularIntMatrix":
        return LowerTriangularIntMatrix(
            tuple(tuple(1 if i == j else 0 for j in range(k)) for i in range(k))
        )


def catalan_weight(k: int) -> int:
    """Return 0 for odd k and binom(k, k/2) / (k/2 + 1) for even k >= 0."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if k > CATALAN_MAX_K:
        raise OverflowError(f"k={k} exceeds the supported bound {CATALAN_MAX_K}")
    if k % 2 == 1:
        return 0
    h = k // 2
    return math.comb(k, h) // (h + 1)


def _series_g(max_deg: int) -> list[int]:
    """Coefficients of g(z) = sum_j Cat_j z^(2j+1) up to degree max_deg."""
    g = [0] * (max_deg + 1)
    j = 0
    while 2 * j + 1 <= max_deg:
        g[2 * j + 1] = math.comb(2 * j, j) // (j + 1)
        j += 1
    return g


def _gen_coeff_closed_form(m: int, r: int) -> int:
    """f(r + 2h, r) = r / (2h + r) * binom(2h + r, h); internal cross-check."""
    h = (m - r) // 2
    num = r * math.comb(2 * h + r, h)
    assert num % (2 * h + r) == 0
    return num // (2 * h + r)


def gen_coeff(m: int, r: int) -> int:
    """Coefficient of z^m in g(z)^r, for 1 <= r <= m <= 60.

    m and r of opposite parity give 0.  Computed by truncated power-series
    multiplication; the closed form r/(2h+r) * binom(2h+r, h) with
    m = r + 2h is evaluated alongside as a consistency check.
    """
    if not 1 <= r <= m:
        raise ValueError(f"need 1 <= r <= m, got m={m}, r={r}")
    if m > GEN_COEFF_MAX_M:
        raise OverflowError(f"m={m} exceeds the supported bound {GEN_COEFF_MAX_M}")
    if (m - r) % 2 == 1:
        return 0
    g = _series_g(m)
    prod = [0] * (m + 1)
    prod[0] = 1
    for _ in range(r):
        nxt = [0] * (m + 1)
        for a, ca in enumerate(prod):
            if ca == 0:
                continue
            for b in range(1, m - a + 1, 2):
                if g[b]:
                    nxt[a + b] += ca * g[b]
        prod = nxt
    value = prod[m]
    check = _gen_coeff_closed_form(m, r)
    if value != check:
        raise AssertionError(
            f"series/closed-form disagreement for f({m},{r}): {value} vs {check}"
        )
    return value


def chebyshev_coeffs(m: int) -> IntPoly:
    """Doubled Chebyshev polynomial P_m via P_0=2, P_1=x, P_{m+1}=x P_m - P_{m-1}."""
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    if m == 0:
        return IntPoly((2,))
    prev, cur = [2], [0, 1]
    for _ in range(m - 1):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return IntPoly.from_list(cur)


def cancellation_sum(k: int) -> int:
    """Exact value of sum_{r=1..k} P_2k[2r] * r * psi_2r.

    Zero for every k >= 2; the k=1 sum is 1 (the identity only enters the
    even-trace inversion where k >= 2).
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > CANCELLATION_MAX_K:
        raise OverflowError(f"k={k} exceeds the supported bound {CANCELLATION_MAX_K}")
    poly = chebyshev_coeffs(2 * k)
    return sum(poly[2 * r] * r * catalan_weight(2 * r) for r in range(1, k + 1))


def parity_identity_check(m: int, r: int) -> bool:
    """True iff gen_coeff(m, r) * m / r == binom(m, (m+r)/2), exactly."""
    if not 1 <= r <= m:
        raise ValueError(f"need 1 <= r <= m, got m={m}, r={r}")
    if (m - r) % 2 == 1:
        raise ValueError(f"m={m} and r={r} must have the same parity")
    lhs = Fraction(gen_coeff(m, r) * m, r)
    rhs = Fraction(math.comb(m, (m + r) // 2))
    return lhs == rhs


def _binomial_matrix(k: int) -> LowerTriangularIntMatrix:
    """Row i, column j (0-based) holds binom(2i+1, i+j+1) for j <= i.

    This is the matrix expressing odd powers in the doubled-Chebyshev
    basis: x^(2i+1) = sum_j binom(2i+1, i+j+1) P_{2j+1}(x).
    """
    rows = tuple(
        tuple(math.comb(2 * i + 1, i + j + 1) if j <= i else 0 for j in range(k))
        for i in range(k)
    )
    return LowerTriangularIntMatrix(rows)


def inverse_binomial_matrix(k: int) -> LowerTriangularIntMatrix:
    """Exact inverse D of the odd-power binomial matrix of size k.

    Verifies D * B == I and that D[i][j] equals the coefficient of
    x^(2j+1) in P_{2i+1}(x) before returning.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > INVERSE_BINOMIAL_MAX_K:
        raise OverflowError(
            f"k={k} exceeds the supported bound {INVERSE_BINOMIAL_MAX_K}"
        )
    b = _binomial_matrix(k)
    # Forward substitution; the unit diagonal keeps every entry an integer.
    inv = [[0] * k for _ in range(k)]
    for i in range(k):
        inv[i][i] = 1
        for j in range(i):
            s = sum(b.entry(i, t) * inv[t][j] for t in range(j, i))
            inv[i][j] = -s
    d = LowerTriangularIntMatrix(tuple(tuple(row) for row in inv))
    if d.matmul(b) != LowerTriangularIntMatrix.identity(k):
        raise AssertionError("inverse verification failed")
    for i in range(k):
        poly = chebyshev_coeffs(2 * i + 1)
        for j in range(k):
            expect = poly[2 * j + 1] if j <= i else 0
            if d.entry(i, j) != expect:
                raise AssertionError(
                    f"entry ({i},{j}) does not match the Chebyshev coefficient"
                )
    return d


def _check_covariance(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if not np.array_equal(cov, cov.T):
        raise ValueError("covariance must be stored exactly symmetric")
    if np.any(np.diag(cov) < 0):
        raise ValueError("covariance diagonal entries must be nonnegative")
    return cov


def wick_moment(cov, index: Sequence[int], max_order: int = WICK_MAX_ORDER) -> float:
    """Gaussian moment E[X_{index[0]} ... X_{index[m-1]}] by pair enumeration.

    Zero for odd m.  For even m, sums the product of covariances over all
    (m-1)!! perfect pairings, pairing the first unpaired variable with each
    later one recursively.
    """
    cov = _check_covariance(cov)
    idx = [int(i) for i in index]
    if any(i < 0 or i >= cov.shape[0] for i in idx):
        raise ValueError("index refers to a variable outside the covariance")
    m = len(idx)
    if m > max_order:
        raise ValueError(f"moment order {m} exceeds the enumeration budget {max_order}")
    if m % 2 == 1:
        return 0.0
    if m == 0:
        return 1.0

    def pairings(rest: list[int]) -> float:
        if not rest:
            return 1.0
        first, tail = rest[0], rest[1:]
        total = 0.0
        for pos in range(len(tail)):
            c = cov[first, tail[pos]]
            if c != 0.0:
                total += c * pairings(tail[:pos] + tail[pos + 1 :])
        return total

    return pairings(idx)
