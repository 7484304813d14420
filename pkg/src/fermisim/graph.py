"""Determinant-string graphs: per-sector excitation maps and cross-sector links.

Sign convention (fixed globally): a determinant is built as

    |A, B> = (creations of occupied alpha orbitals, ascending index,
              leftmost smallest) x (same for beta) |vac>

so a ladder operator on channel sigma picks up one (-1) per occupied
lower-index orbital of the same channel, and a beta operator additionally
crosses the whole alpha block, contributing (-1)**n_alpha.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

from .bitstrings import (index_table, mask_below, mask_between, parity_to_sign,
                         popcount, strings_of)
from .errors import DomainError

ALPHA = 0
BETA = 1


class StringChannel:
    """Strings, index lookup and single-excitation maps for one spin channel.

    The data depends only on (m, n), so channels are shared between graphs
    via :func:`get_channel`.  Immutable after construction.
    """

    def __init__(self, m: int, n: int):
        if not 0 <= n <= m:
            raise DomainError(f"channel needs 0 <= n <= m, got n={n}, m={m}")
        self.m = m
        self.n = n
        self.strings = strings_of(m, n)
        self.dim = self.strings.size
        self.index = index_table(m, n)
        self._maps: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        for i in range(m):
            for j in range(m):
                self._maps[(i, j)] = self._build_map(i, j)

    def _build_map(self, i: int, j: int):
        """Entries (source, target, parity) with a+_i a_j |source> = parity |target>."""
        s = self.strings
        occ_j = (s >> j) & 1 == 1
        if i == j:
            src = np.nonzero(occ_j)[0].astype(np.int64)
            return src, src.copy(), np.ones(src.size, dtype=np.int64)
        free_i = (s >> i) & 1 == 0
        valid = occ_j & free_i
        src = np.nonzero(valid)[0].astype(np.int64)
        bits = s[src]
        target_bits = (bits ^ (1 << j)) | (1 << i)
        tgt = self.index[target_bits]
        par = parity_to_sign(popcount(bits & mask_between(i, j)))
        return src, tgt, par

    def map(self, i: int, j: int):
        return self._maps[(i, j)]

    def occupancy(self) -> np.ndarray:
        """(dim, m) 0/1 array of orbital occupations per string."""
        return ((self.strings[:, None] >> np.arange(self.m)[None, :]) & 1).astype(np.float64)


@lru_cache(maxsize=None)
def get_channel(m: int, n: int) -> StringChannel:
    return StringChannel(m, n)


def single_annihilation_map(m: int, n: int, p: int):
    """Map a_p from the (m, n) channel into the (m, n-1) channel.

    Returns (source, target, parity) index arrays; parity is the
    within-channel sign (-1)**(occupied below p).
    """
    src_ch = get_channel(m, n)
    tgt_ch = get_channel(m, n - 1)
    s = src_ch.strings
    valid = (s >> p) & 1 == 1
    src = np.nonzero(valid)[0].astype(np.int64)
    bits = s[src]
    tgt = tgt_ch.index[bits ^ (1 << p)]
    par = parity_to_sign(popcount(bits & mask_below(p)))
    return src, tgt, par


def single_creation_map(m: int, n: int, p: int):
    """Map a+_p from the (m, n) channel into the (m, n+1) channel."""
    src_ch = get_channel(m, n)
    tgt_ch = get_channel(m, n + 1)
    s = src_ch.strings
    valid = (s >> p) & 1 == 0
    src = np.nonzero(valid)[0].astype(np.int64)
    bits = s[src]
    tgt = tgt_ch.index[bits | (1 << p)]
    par = parity_to_sign(popcount(bits & mask_below(p)))
    return src, tgt, par


class FciGraph:
    """Excitation bookkeeping for one (n_alpha, n_beta, m) sector.

    ``alpha_map(i, j)`` / ``beta_map(i, j)`` return (source, target, parity)
    arrays realizing <I'| a+_{i sigma} a_{j sigma} |I> within the channel.
    One entry exists per string with orbital j occupied and (i == j or
    orbital i free); for i != j the parity is (-1)**(occupied strictly
    between i and j).  Within-sector beta excitations cross the alpha block
    twice, so no extra alpha factor appears here.
    """

    def __init__(self, n_alpha: int, n_beta: int, m: int):
        if not (0 <= n_alpha <= m and 0 <= n_beta <= m):
            raise DomainError(
                f"electron counts ({n_alpha}, {n_beta}) out of range for m={m}")
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.m = m
        self.alpha = get_channel(m, n_alpha)
        self.beta = get_channel(m, n_beta)

    @property
    def lena(self) -> int:
        return self.alpha.dim

    @property
    def lenb(self) -> int:
        return self.beta.dim

    def alpha_map(self, i: int, j: int):
        return self.alpha.map(i, j)

    def beta_map(self, i: int, j: int):
        return self.beta.map(i, j)

    def excitation_map(self, i: int, j: int, spin: int):
        return self.alpha.map(i, j) if spin == ALPHA else self.beta.map(i, j)

    def index_alpha(self, bits: int) -> int:
        idx = int(self.alpha.index[bits])
        if idx < 0:
            raise DomainError(f"alpha string {bits:#b} not in sector")
        return idx

    def index_beta(self, bits: int) -> int:
        idx = int(self.beta.index[bits])
        if idx < 0:
            raise DomainError(f"beta string {bits:#b} not in sector")
        return idx


@lru_cache(maxsize=None)
def get_fci_graph(n_alpha: int, n_beta: int, m: int) -> FciGraph:
    return FciGraph(n_alpha, n_beta, m)


class FciGraphSet:
    """Graphs for a family of sectors plus single-operator links between them.

    ``link(key_from, key_to, p, spin, kind)`` returns (source, target,
    parity) arrays for the channel strings of ``spin``, where kind is
    'create' or 'annihilate' and the keys are (n, sz) pairs.  Beta-channel
    links fold in the (-1)**n_alpha crossing of the alpha block, which is
    constant over a sector pair.
    """

    def __init__(self, sector_keys, m: int | None = None):
        keys = []
        for key in sector_keys:
            if len(key) == 3:
                n, sz, km = key
                if m is None:
                    m = km
                elif km != m:
                    raise DomainError(f"mixed orbital counts: {km} vs {m}")
            else:
                n, sz = key
            keys.append((int(n), int(sz)))
        if m is None:
            raise DomainError("orbital count m required")
        self.m = m
        self.graphs: dict[tuple[int, int], FciGraph] = {}
        for n, sz in keys:
            na, nb = _split_counts(n, sz, m)
            self.graphs[(n, sz)] = get_fci_graph(na, nb, m)
        self._links: dict[tuple, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        for key_from in self.graphs:
            for key_to in self.graphs:
                self._build_links(key_from, key_to)

    def _build_links(self, key_from, key_to):
        na_f, nb_f = _split_counts(*key_from, self.m)
        na_t, nb_t = _split_counts(*key_to, self.m)
        for spin, nf, nt in ((ALPHA, na_f, na_t), (BETA, nb_f, nb_t)):
            if abs(nt - nf) != 1:
                continue
            if spin == ALPHA and nb_f != nb_t:
                continue
            if spin == BETA and na_f != na_t:
                continue
            kind = "create" if nt == nf + 1 else "annihilate"
            builder = single_creation_map if nt == nf + 1 else single_annihilation_map
            for p in range(self.m):
                src, tgt, par = builder(self.m, nf, p)
                if spin == BETA and (na_f & 1):
                    par = -par
                self._links[(key_from, key_to, p, spin, kind)] = (src, tgt, par)

    def link(self, key_from, key_to, p: int, spin: int, kind: str):
        try:
            return self._links[(tuple(key_from), tuple(key_to), p, spin, kind)]
        except KeyError:
            raise DomainError(
                f"no {kind} link for orbital {p} between sectors "
                f"{tuple(key_from)} and {tuple(key_to)}") from None

    def has_link(self, key_from, key_to, p: int, spin: int, kind: str) -> bool:
        return (tuple(key_from), tuple(key_to), p, spin, kind) in self._links


def _split_counts(n: int, sz: int, m: int) -> tuple[int, int]:
    """(n_alpha, n_beta) from sector labels; validates the triple."""
    if (n + sz) % 2 != 0:
        raise DomainError(f"n + sz must be even, got n={n}, sz={sz}")
    if abs(sz) > n:
        raise DomainError(f"|sz| cannot exceed n, got n={n}, sz={sz}")
    na = (n + sz) // 2
    nb = (n - sz) // 2
    if na > m or nb > m:
        raise DomainError(
            f"sector (n={n}, sz={sz}) does not fit in m={m} orbitals")
    return na, nb


def sector_shape(n: int, sz: int, m: int) -> tuple[int, int]:
    na, nb = _split_counts(n, sz, m)
    return comb(m, na), comb(m, nb)
