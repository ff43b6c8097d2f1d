"""Multi-index (photon pattern) enumeration and arithmetic.

A multi-index is represented as a plain tuple of nonnegative ints.  The
canonical ordering of all multi-indices of a fixed degree is lexicographic
ascending; coefficient vectors, sampler probabilities and CSV columns all
align with this ordering.
"""

from __future__ import annotations

import math
from functools import lru_cache

MultiIndex = tuple


def degree(index: MultiIndex) -> int:
    return sum(index)


@lru_cache(maxsize=None)
def enumerate_degree(n_vars: int, deg: int) -> tuple:
    """All multi-indices of length n_vars with |I| = deg, lexicographic.

    Length of the result is C(deg + n_vars - 1, n_vars - 1).
    """
    if n_vars < 1:
        raise ValueError("n_vars must be >= 1")
    if deg < 0:
        raise ValueError("degree must be >= 0")
    if n_vars == 1:
        return ((deg,),)
    out = []
    for first in range(deg + 1):
        for rest in enumerate_degree(n_vars - 1, deg - first):
            out.append((first,) + rest)
    return tuple(out)


def multiindex_factorial(index: MultiIndex) -> int:
    """I! = i1! i2! ... iN!  (1 for the zero index)."""
    result = 1
    for i in index:
        result *= math.factorial(i)
    return result


def add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return tuple(x + y for x, y in zip(a, b))


def count_sigma(n_vars: int, half_degree: int) -> int:
    """Number of multi-indices of degree 2K over N variables."""
    return math.comb(2 * half_degree + n_vars - 1, n_vars - 1)


def format_index(index: MultiIndex) -> str:
    """Render as "i1,i2,...,iN" (used in CSV/JSON keys)."""
    return ",".join(str(i) for i in index)


def parse_index(text: str) -> MultiIndex:
    try:
        index = tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ValueError(f"cannot parse multi-index {text!r}") from exc
    if any(i < 0 for i in index):
        raise ValueError(f"negative entry in multi-index {text!r}")
    return index
