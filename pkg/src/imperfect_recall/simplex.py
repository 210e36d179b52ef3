"""Euclidean projection onto simplices and lattice points on simplices."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from fractions import Fraction
from math import comb

import numpy as np


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex (sorted-threshold method)."""
    v = np.asarray(v, dtype=float)
    n = v.size
    if n == 1:
        return np.ones(1)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    w = np.maximum(v - theta, 0.0)
    # renormalize away round-off so blocks sum to 1 within a few ulps
    s = w.sum()
    return w / s if s > 0 else np.full(n, 1.0 / n)


def project_blocks(x: np.ndarray, offsets: Sequence[int]) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    for a, b in zip(offsets[:-1], offsets[1:]):
        out[a:b] = project_simplex(x[a:b])
    return out


def lattice_size(m: int, k: int) -> int:
    """Number of points of the simplex in dimension m with denominator k."""
    return comb(k + m - 1, m - 1)


def product_lattice_size(shape: Sequence[int], k: int) -> int:
    total = 1
    for m in shape:
        total *= lattice_size(m, k)
    return total


def compositions(m: int, k: int) -> Iterator[tuple[int, ...]]:
    """Nonnegative integer vectors of length m summing to k, first coordinate largest first."""
    if m == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in compositions(m - 1, k - first):
            yield (first,) + rest


def lattice_array(m: int, k: int) -> np.ndarray:
    """Lattice points as rows of a float array, in :func:`compositions` order."""
    return np.array(list(compositions(m, k)), dtype=float).reshape(-1, m) / k


def lattice_point(counts: Sequence[int], k: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(c, k) for c in counts)
