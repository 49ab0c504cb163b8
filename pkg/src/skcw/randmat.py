"""Reproducible sampling of the Gaussian coupling matrices and trace utilities.

Matrices are plain symmetric ``numpy`` arrays.  Three ensembles:

* plain      -- i.i.d. standard normal strict upper triangle and diagonal;
* hollow     -- same upper triangle, diagonal identically zero;
* tilted     -- strict upper triangle N(2*beta*sigma_i*sigma_j/sqrt(n), 1)
  for a fixed spin vector sigma, diagonal standard normal.

Reproducibility contract: a ``SeedSpec`` (master_seed, stream_id) keys a
Philox counter-based bit generator, and entries are drawn with numpy's
ziggurat ``standard_normal`` in a pinned order (strict upper triangle
row-major first, then the diagonal).  The same SeedSpec therefore yields
bit-identical matrices regardless of scheduling or worker count, and
distinct stream_ids yield independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TRACE_FLOP_BUDGET = 2e10

_MASK64 = (1 << 64) - 1


def _mix64(x: int, salt: int = 0) -> int:
    """splitmix64 finalizer; derives well-separated 64-bit keys."""
    z = (x + salt * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic stream identity: (master_seed, stream_id) -> Philox key."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.master_seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64
        )
        return np.random.Generator(np.random.Philox(key=key))

    def stream(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)

    def derived(self, salt: int) -> "SeedSpec":
        """Independent substream family (fresh master, stream reset to 0)."""
        return SeedSpec(_mix64(self.master_seed, salt), 0)


def sample_gaussian_matrix(n: int, seed: SeedSpec, hollow: bool = False) -> np.ndarray:
    """Symmetric n x n matrix with i.i.d. standard normal upper triangle.

    ``hollow=True`` sets the diagonal to exactly zero (the matrix entering
    the spectral statistics); otherwise the diagonal is standard normal.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = seed.generator()
    a = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    a[iu] = rng.standard_normal(iu[0].size)
    a += a.T
    if not hollow:
        a[np.diag_indices(n)] = rng.standard_normal(n)
    return a


def sample_tilted_matrix(
    n: int, sigma: np.ndarray, beta: float, seed: SeedSpec
) -> np.ndarray:
    """Symmetric matrix with off-diagonal means 2*beta*sigma_i*sigma_j/sqrt(n).

    The noise is drawn exactly as in ``sample_gaussian_matrix`` (shared seed
    and beta=0 reproduce it bit for bit); the mean shift is added to the
    strict upper triangle and mirrored.  The diagonal is standard normal,
    untouched by the tilt.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    sigma = check_spins(sigma)
    if sigma.size != n:
        raise ValueError(f"sigma has length {sigma.size}, expected {n}")
    a = sample_gaussian_matrix(n, seed, hollow=False)
    shift = (2.0 * beta / np.sqrt(n)) * np.outer(sigma, sigma)
    np.fill_diagonal(shift, 0.0)
    return a + shift


def power_traces(
    m: np.ndarray, kmax: int, flop_budget: float = DEFAULT_TRACE_FLOP_BUDGET
) -> np.ndarray:
    """(Tr M, Tr M^2, ..., Tr M^kmax) by successive dense multiplication."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if kmax < 1:
        raise ValueError(f"kmax must be positive, got {kmax}")
    n = m.shape[0]
    if kmax * n**3 > flop_budget:
        raise ValueError(
            f"kmax*n^3 = {kmax * n**3:.3g} exceeds the flop budget {flop_budget:.3g}"
        )
    traces = np.empty(kmax)
    p = m
    for j in range(kmax):
        traces[j] = np.trace(p)
        if j + 1 < kmax:
            p = p @ m
    return traces


def hollowed(a: np.ndarray) -> np.ndarray:
    """Copy of a with the diagonal set to zero."""
    out = np.array(a, dtype=float, copy=True)
    np.fill_diagonal(out, 0.0)
    return out


def gauge_conjugate(a: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """diag(sigma) @ a @ diag(sigma); leaves traces, cycles and Z invariant."""
    sigma = check_spins(sigma)
    return sigma[:, None] * a * sigma[None, :]


def check_spins(sigma) -> np.ndarray:
    """Validate and return a float spin vector with entries exactly +-1."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 1:
        raise ValueError("spin vector must be one-dimensional")
    if not np.all(np.abs(sigma) == 1.0):
        raise ValueError("spin entries must be exactly -1 or +1")
    return sigma


def all_ones_spins(n: int) -> np.ndarray:
    return np.ones(n)


def alternating_spins(n: int) -> np.ndarray:
    s = np.ones(n)
    s[1::2] = -1.0
    return s


def random_spins(n: int, seed: SeedSpec) -> np.ndarray:
    rng = seed.generator()
    return 1.0 - 2.0 * rng.integers(0, 2, size=n).astype(float)


def save_matrix_text(a: np.ndarray, path) -> None:
    """Write a symmetric matrix in the plain-text exchange format.

    Line 1 is the dimension n; line 1+i (1-based i <= n) holds the entries
    A[i-1, i-1:] (diagonal first, then the rest of row i-1's upper triangle)
    separated by single spaces, printed with repr precision so the file
    round-trips bit for bit.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix must be symmetric")
    lines = [str(n)]
    for i in range(n):
        lines.append(" ".join(repr(float(x)) for x in a[i, i:]))
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_matrix_text(path) -> np.ndarray:
    """Inverse of ``save_matrix_text``."""
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n = int(lines[0])
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} data rows, found {len(lines) - 1}")
    a = np.zeros((n, n))
    for i in range(n):
        row = [float(tok) for tok in lines[i + 1].split()]
        if len(row) != n - i:
            raise ValueError(f"row {i} has {len(row)} entries, expected {n - i}")
        a[i, i:] = row
        a[i:, i] = row
    return a
