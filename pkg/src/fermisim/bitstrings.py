"""Occupancy-bitstring utilities for one spin channel.

A string is an integer whose bit p is the occupancy of spatial orbital p
(orbital 0 = least significant bit).  All routines are vectorized over
int64 arrays of strings.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import DomainError


def popcount(x):
    """Number of set bits, elementwise for arrays."""
    return np.bitwise_count(np.asarray(x, dtype=np.uint64)).astype(np.int64)


def strings_of(m: int, n: int) -> np.ndarray:
    """All C(m, n) occupancy strings with n of m orbitals set, ascending.

    Ascending integer order is the lexical order used for sector indexing
    throughout the library.
    """
    if not 0 <= n <= m:
        raise DomainError(f"need 0 <= n <= m, got n={n}, m={m}")
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    out = np.empty(comb(m, n), dtype=np.int64)
    v = (1 << n) - 1
    for i in range(out.size):
        out[i] = v
        # Gosper's hack: next integer with the same popcount
        lo = v & -v
        left = v + lo
        v = left | ((v ^ left) // lo) >> 2
    return out


def lexical_index(bits: int, m: int, n: int) -> int:
    """Rank of ``bits`` among all strings with popcount n over m orbitals.

    Strings are ordered by ascending integer value; the map is a bijection
    onto [0, C(m, n)).
    """
    if bits < 0 or bits >= (1 << m):
        raise DomainError(f"string {bits:#b} out of range for m={m}")
    if int(popcount(bits)) != n:
        raise DomainError(
            f"string {bits:#b} has {int(popcount(bits))} electrons, expected {n}")
    # count strings below `bits`: orbitals chosen below each set bit
    index = 0
    seen = 0
    for p in range(m):
        if (bits >> p) & 1:
            seen += 1
            # strings agreeing above p, with bit p clear, completing seen
            # electrons among the p lower orbitals
            index += comb(p, seen)
    return index


def index_table(m: int, n: int) -> np.ndarray:
    """Dense lookup bits -> lexical index (-1 off the stratum)."""
    table = np.full(1 << m, -1, dtype=np.int64)
    table[strings_of(m, n)] = np.arange(comb(m, n), dtype=np.int64)
    return table


def mask_below(p: int) -> int:
    """Bitmask of orbitals strictly below p."""
    return (1 << p) - 1


def mask_between(i: int, j: int) -> int:
    """Bitmask of orbitals strictly between i and j."""
    lo, hi = (i, j) if i < j else (j, i)
    return mask_below(hi) & ~mask_below(lo + 1)


def parity_to_sign(counts) -> np.ndarray:
    """(-1)**counts as an int64 array."""
    return 1 - 2 * (np.asarray(counts, dtype=np.int64) & 1)
