"""Cantor pairing on naturals, fixed once for the whole package."""
from __future__ import annotations

from math import isqrt


def pair(a: int, b: int) -> int:
    """Code the pair (a, b) as a single natural number."""
    if a < 0 or b < 0:
        raise ValueError("pairing is defined on naturals only")
    s = a + b
    return s * (s + 1) // 2 + b


def unpair(n: int) -> tuple[int, int]:
    """Inverse of pair()."""
    if n < 0:
        raise ValueError("pairing is defined on naturals only")
    s = (isqrt(8 * n + 1) - 1) // 2
    b = n - s * (s + 1) // 2
    return s - b, b
