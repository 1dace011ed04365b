"""Analogical proportions and the analogy kernel on pairs of item pairs.

A quadruple (a, b, c, d) of values in [0, 1] is in analogical proportion to
the degree 1 - |(a - b) - (c - d)| when the two differences agree in sign,
and to degree 0 otherwise.  Read as a similarity of signed differences, the
same formula is a positive semi-definite kernel on [-1, 1]; averaging it per
feature dimension extends it to pairs of feature vectors, and squaring the
average gives a degree-2 polynomial variant.
"""

from __future__ import annotations

from enum import Enum
from itertools import combinations

import numpy as np

# The six Boolean quadruples that are in exact analogical proportion.
_BOOLEAN_TABLE = frozenset(
    {
        (0, 0, 0, 0),
        (0, 0, 1, 1),
        (0, 1, 0, 1),
        (1, 0, 1, 0),
        (1, 1, 0, 0),
        (1, 1, 1, 1),
    }
)


class KernelVariant(Enum):
    """How per-feature proportion degrees are aggregated into one kernel value."""

    MEAN = "mean"
    POLY2 = "poly2"

    @classmethod
    def from_string(cls, name: str) -> "KernelVariant":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown kernel variant {name!r} (expected one of: {valid})") from None


def boolean_proportion(a: int, b: int, c: int, d: int) -> int:
    """Exact analogical proportion on bits: 1 for the six valid quadruples, else 0."""
    quad = (a, b, c, d)
    if any(x not in (0, 1) for x in quad):
        raise ValueError(f"boolean_proportion expects bits in {{0, 1}}, got {quad}")
    return int(quad in _BOOLEAN_TABLE)


def proportion_degree(a: float, b: float, c: float, d: float) -> float:
    """Graded analogical proportion of four values in [0, 1].

    Returns 1 - |(a - b) - (c - d)| when the differences a - b and c - d have
    the same sign (zero counts as its own sign class), and 0.0 otherwise.
    """
    for name, x in zip("abcd", (a, b, c, d)):
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"proportion_degree argument {name}={x} outside [0, 1]")
    left = a - b
    right = c - d
    if np.sign(left) != np.sign(right):
        return 0.0
    return 1.0 - abs(left - right)


def scalar_kernel(u: float, v: float) -> float:
    """Similarity 1 - |u - v| of two signed differences in [-1, 1], gated on sign agreement.

    Satisfies scalar_kernel(a - b, c - d) == proportion_degree(a, b, c, d).
    """
    if not -1.0 <= u <= 1.0 or not -1.0 <= v <= 1.0:
        raise ValueError(f"scalar_kernel arguments ({u}, {v}) outside [-1, 1]")
    if np.sign(u) != np.sign(v):
        return 0.0
    return 1.0 - abs(u - v)


def _as_pair_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Normalize a pair collection to two (m, d) arrays of firsts and seconds.

    Accepts a sequence of (first, second) tuples, objects with .first/.second
    attributes, or an already-split (firsts, seconds) tuple of 2-D arrays.
    """
    if isinstance(pairs, tuple) and len(pairs) == 2:
        first = np.asarray(pairs[0], dtype=float)
        if first.ndim == 2:
            second = np.asarray(pairs[1], dtype=float)
            return first, second
    if len(pairs) == 0:
        raise ValueError("empty pair collection")
    head = pairs[0]
    if hasattr(head, "first"):
        first = np.asarray([p.first for p in pairs], dtype=float)
        second = np.asarray([p.second for p in pairs], dtype=float)
    else:
        first = np.asarray([p[0] for p in pairs], dtype=float)
        second = np.asarray([p[1] for p in pairs], dtype=float)
    return first, second


def _check_unit_box(arr: np.ndarray, what: str) -> None:
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{what} contains values outside [0, 1]; normalize before applying the kernel")


def kernel_matrix(pairs_a, pairs_b, variant: KernelVariant = KernelVariant.MEAN) -> np.ndarray:
    """Kernel values between two collections of ordered item pairs.

    Args:
        pairs_a: First collection, as (first, second) tuples of vectors in
            [0, 1]^d or a pre-split (firsts, seconds) tuple of (m, d) arrays.
        pairs_b: Second collection, same conventions.
        variant: MEAN averages per-dimension proportion degrees; POLY2
            squares the average.

    Returns:
        Array of shape (len(pairs_a), len(pairs_b)) with values in [0, 1].
    """
    first_a, second_a = _as_pair_arrays(pairs_a)
    first_b, second_b = _as_pair_arrays(pairs_b)
    for arr, what in ((first_a, "pairs_a firsts"), (second_a, "pairs_a seconds"),
                      (first_b, "pairs_b firsts"), (second_b, "pairs_b seconds")):
        if arr.ndim != 2:
            raise ValueError(f"{what} must be a 2-D array of feature vectors")
        _check_unit_box(arr, what)
    if first_a.shape[1] != first_b.shape[1]:
        raise ValueError(
            f"dimension mismatch: pairs_a has {first_a.shape[1]} features, pairs_b has {first_b.shape[1]}"
        )
    diffs_a = first_a - second_a
    diffs_b = first_b - second_b
    n_dim = diffs_a.shape[1]
    if n_dim == 0:
        raise ValueError("pairs must have at least one feature")

    acc = np.zeros((diffs_a.shape[0], diffs_b.shape[0]))
    # One dimension at a time keeps memory at O(na * nb) instead of O(na * nb * d).
    for k in range(n_dim):
        u = diffs_a[:, k][:, None]
        v = diffs_b[:, k][None, :]
        agree = np.sign(u) == np.sign(v)
        acc += np.where(agree, 1.0 - np.abs(u - v), 0.0)
    out = acc / n_dim
    if variant is KernelVariant.POLY2:
        out = out * out
    return out


def pair_kernel(pair_a, pair_b, variant: KernelVariant = KernelVariant.MEAN) -> float:
    """Kernel value between two ordered item pairs (see kernel_matrix)."""
    first_a = np.asarray(pair_a[0], dtype=float)[None, :]
    second_a = np.asarray(pair_a[1], dtype=float)[None, :]
    first_b = np.asarray(pair_b[0], dtype=float)[None, :]
    second_b = np.asarray(pair_b[1], dtype=float)[None, :]
    return float(kernel_matrix((first_a, second_a), (first_b, second_b), variant)[0, 0])


def gram_matrix(pairs, variant: KernelVariant = KernelVariant.MEAN) -> np.ndarray:
    """Square kernel matrix of a pair collection: symmetric, unit diagonal, PSD."""
    first, second = _as_pair_arrays(pairs)
    if first.shape[0] == 0:
        raise ValueError("gram_matrix requires at least one pair")
    return kernel_matrix((first, second), (first, second), variant)


def is_psd(matrix: np.ndarray, tol: float = 1e-8) -> bool:
    """Whether a symmetric matrix has minimum eigenvalue >= -tol."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"is_psd expects a square matrix, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > tol:
        raise ValueError("is_psd expects a symmetric matrix")
    if m.size == 0:
        return True
    return bool(np.linalg.eigvalsh(m).min() >= -tol)


def principal_minors_nonneg(matrix: np.ndarray, tol: float = 1e-8, max_size: int = 8) -> bool:
    """Determinant route to PSD: every principal minor non-negative (within -tol).

    Enumerates all index subsets, so the matrix may be at most max_size wide.
    Equivalent to is_psd for symmetric input; kept as an independent check.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"principal_minors_nonneg expects a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n > max_size:
        raise ValueError(f"principal minor enumeration limited to n <= {max_size}, got n = {n}")
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            idx = np.array(subset)
            if np.linalg.det(m[np.ix_(idx, idx)]) < -tol:
                return False
    return True
