"""Symmetry-sector wavefunctions.

A wavefunction is a map from (n, sz) sector labels to coefficient matrices
of shape C(m, n_alpha) x C(m, n_beta), rows indexed by the alpha-string
lexical index and columns by the beta-string index.  All sectors share the
spatial orbital count m.
"""

from __future__ import annotations

import struct
from typing import Iterable, NamedTuple

import numpy as np

from .bitstrings import popcount
from .errors import DomainError, FormatError, ResourceError
from .graph import FciGraph, get_fci_graph, sector_shape, _split_counts

FILE_MAGIC = b"FQEW"
FILE_VERSION = 1
DENSE_ORBITAL_CAP = 7


class SectorKey(NamedTuple):
    n: int
    sz: int
    m: int


class Sector:
    """Coefficients of one (n, sz) block."""

    def __init__(self, key: SectorKey, graph: FciGraph | None = None):
        self.key = key
        self.graph = graph or get_fci_graph(*_split_counts(key.n, key.sz, key.m), key.m)
        self.coeff = np.zeros((self.graph.lena, self.graph.lenb), dtype=np.complex128)

    @property
    def n_alpha(self) -> int:
        return self.graph.n_alpha

    @property
    def n_beta(self) -> int:
        return self.graph.n_beta

    def norm_squared(self) -> float:
        return float(np.vdot(self.coeff, self.coeff).real)


class Wavefunction:
    """Keyed collection of sector coefficient matrices sharing m orbitals."""

    def __init__(self, keys: Iterable[tuple]):
        self.m = None
        self.sectors: dict[tuple[int, int], Sector] = {}
        for key in keys:
            n, sz, m = key
            if self.m is None:
                self.m = int(m)
            elif int(m) != self.m:
                raise DomainError(
                    f"all sectors must share m; got {m} after {self.m}")
            skey = SectorKey(int(n), int(sz), self.m)
            _split_counts(skey.n, skey.sz, skey.m)
            if (skey.n, skey.sz) in self.sectors:
                raise DomainError(f"duplicate sector ({skey.n}, {skey.sz})")
            self.sectors[(skey.n, skey.sz)] = Sector(skey)
        if self.m is None:
            raise DomainError("wavefunction needs at least one sector")

    # -- basic structure -------------------------------------------------

    def sector(self, n: int, sz: int) -> Sector:
        try:
            return self.sectors[(n, sz)]
        except KeyError:
            raise DomainError(f"sector ({n}, {sz}) not present") from None

    def sector_keys(self) -> list[tuple[int, int]]:
        return sorted(self.sectors)

    def copy(self) -> "Wavefunction":
        out = self.empty_like()
        for key, sec in self.sectors.items():
            out.sectors[key].coeff[...] = sec.coeff
        return out

    def empty_like(self) -> "Wavefunction":
        return Wavefunction([(n, sz, self.m) for (n, sz) in self.sectors])

    def norm(self) -> float:
        return float(np.sqrt(sum(s.norm_squared() for s in self.sectors.values())))

    def normalize(self) -> "Wavefunction":
        nrm = self.norm()
        if nrm == 0.0:
            raise DomainError("cannot normalize the zero wavefunction")
        for sec in self.sectors.values():
            sec.coeff /= nrm
        return self

    def scale(self, factor: complex) -> "Wavefunction":
        for sec in self.sectors.values():
            sec.coeff *= factor
        return self

    def ax_plus_y(self, a: complex, other: "Wavefunction") -> "Wavefunction":
        """self += a * other, sector by sector."""
        for key, sec in other.sectors.items():
            if key not in self.sectors:
                raise DomainError(f"sector {key} missing in accumulation target")
            self.sectors[key].coeff += a * sec.coeff
        return self

    # -- initialization --------------------------------------------------

    def set_random(self, seed: int) -> "Wavefunction":
        """I.i.d. complex Gaussian entries (PCG64 stream), then global
        normalization.  Deterministic per seed."""
        rng = np.random.default_rng(seed)
        for key in self.sector_keys():
            sec = self.sectors[key]
            shape = sec.coeff.shape
            sec.coeff[...] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return self.normalize()

    def set_hartree_fock(self) -> "Wavefunction":
        """Amplitude 1 on the lowest-orbital determinant; single sector only."""
        if len(self.sectors) != 1:
            raise DomainError("hartree_fock initialization needs exactly one sector")
        (sec,) = self.sectors.values()
        sec.coeff[...] = 0.0
        sec.coeff[0, 0] = 1.0
        return self

    def set_explicit(self, assignments) -> "Wavefunction":
        """Assignments are (alpha_bits, beta_bits, amplitude) triples; the
        sector is inferred from the string populations."""
        for sec in self.sectors.values():
            sec.coeff[...] = 0.0
        for abits, bbits, amp in assignments:
            if abits >= (1 << self.m) or bbits >= (1 << self.m) or abits < 0 or bbits < 0:
                raise DomainError(f"string pair ({abits:#b}, {bbits:#b}) "
                                  f"out of range for m={self.m}")
            na = int(popcount(abits))
            nb = int(popcount(bbits))
            key = (na + nb, na - nb)
            if key not in self.sectors:
                raise DomainError(f"assignment targets absent sector {key}")
            sec = self.sectors[key]
            sec.coeff[sec.graph.index_alpha(abits), sec.graph.index_beta(bbits)] = amp
        return self

    def initialize(self, strategy: str, *, seed: int = 0, assignments=None) -> "Wavefunction":
        if strategy == "random":
            return self.set_random(seed)
        if strategy == "hartree_fock":
            return self.set_hartree_fock()
        if strategy == "explicit":
            if assignments is None:
                raise DomainError("explicit initialization requires assignments")
            return self.set_explicit(assignments)
        raise DomainError(f"unknown initialization strategy '{strategy}'")

    # -- dense Fock-space conversion --------------------------------------

    def to_dense(self, orbital_cap: int = DENSE_ORBITAL_CAP) -> np.ndarray:
        """Full 2**(2m) amplitude vector, basis bit 2p = (p, alpha),
        bit 2p+1 = (p, beta).

        The amplitude carries the reordering sign between the internal
        alpha-block-first convention and the interleaved external one:
        (-1)**(number of (alpha-occupied p') x (beta-occupied p) pairs
        with p' > p).
        """
        if self.m > orbital_cap:
            raise ResourceError(
                f"dense conversion capped at m <= {orbital_cap}, got m={self.m}")
        out = np.zeros(4 ** self.m, dtype=np.complex128)
        for sec in self.sectors.values():
            astr = sec.graph.alpha.strings
            bstr = sec.graph.beta.strings
            dense_a = _spread_bits(astr, self.m, 0)
            dense_b = _spread_bits(bstr, self.m, 1)
            sign = _interleave_signs(astr, bstr, self.m)
            out[dense_a[:, None] + dense_b[None, :]] += sign * sec.coeff
        return out

    @staticmethod
    def from_dense(vec: np.ndarray, thresh: float = 1e-12) -> "Wavefunction":
        """Inverse of :meth:`to_dense`; amplitudes at or below thresh are
        dropped and sectors are detected from the occupancy patterns."""
        vec = np.asarray(vec)
        size = vec.shape[0]
        m = 0
        while 4 ** m < size:
            m += 1
        if 4 ** m != size or vec.ndim != 1:
            raise FormatError(f"dense vector length {size} is not a power of 4")
        idx = np.nonzero(np.abs(vec) > thresh)[0]
        abits = _gather_bits(idx, m, 0)
        bbits = _gather_bits(idx, m, 1)
        na = popcount(abits)
        nb = popcount(bbits)
        keys = sorted({(int(a + b), int(a - b)) for a, b in zip(na, nb)})
        if not keys:
            keys = [(0, 0)]
        wfn = Wavefunction([(n, sz, m) for (n, sz) in keys])
        sign = _interleave_signs(abits, bbits, m, paired=True)
        for x, a, b, s in zip(idx, abits, bbits, sign):
            sec = wfn.sectors[(int(popcount(a) + popcount(b)),
                               int(popcount(a) - popcount(b)))]
            sec.coeff[sec.graph.index_alpha(int(a)),
                      sec.graph.index_beta(int(b))] = s * vec[x]
        return wfn

    # -- io and printing ---------------------------------------------------

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(FILE_MAGIC)
            fh.write(struct.pack("<II", FILE_VERSION, len(self.sectors)))
            for (n, sz) in self.sector_keys():
                sec = self.sectors[(n, sz)]
                rows, cols = sec.coeff.shape
                fh.write(struct.pack("<iiIQQ", n, sz, self.m, rows, cols))
                fh.write(np.ascontiguousarray(sec.coeff, dtype="<c16").tobytes())

    @staticmethod
    def load(path) -> "Wavefunction":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != FILE_MAGIC:
            raise FormatError("not a wavefunction file (bad magic)")
        try:
            version, count = struct.unpack_from("<II", data, 4)
        except struct.error as exc:
            raise FormatError("truncated wavefunction header") from exc
        if version != FILE_VERSION:
            raise FormatError(f"unsupported wavefunction format version {version}")
        offset = 12
        entries = []
        for _ in range(count):
            try:
                n, sz, m, rows, cols = struct.unpack_from("<iiIQQ", data, offset)
            except struct.error as exc:
                raise FormatError("truncated sector header") from exc
            offset += struct.calcsize("<iiIQQ")
            nbytes = rows * cols * 16
            if offset + nbytes > len(data):
                raise FormatError("truncated sector payload")
            coeff = np.frombuffer(data[offset:offset + nbytes], dtype="<c16")
            offset += nbytes
            entries.append((n, sz, m, rows, cols, coeff))
        if not entries:
            raise FormatError("wavefunction file contains no sectors")
        wfn = Wavefunction([(n, sz, m) for (n, sz, m, _, _, _) in entries])
        for n, sz, m, rows, cols, coeff in entries:
            sec = wfn.sectors[(n, sz)]
            if sec.coeff.shape != (rows, cols):
                raise FormatError(
                    f"sector ({n}, {sz}) shape {(rows, cols)} does not match "
                    f"the expected {sec.coeff.shape}")
            sec.coeff[...] = coeff.reshape(rows, cols)
        return wfn

    def print_wfn(self, threshold: float = 1e-12) -> str:
        """Human-readable listing; bits are printed most-significant
        orbital first with width m."""
        lines = []
        for (n, sz) in self.sector_keys():
            sec = self.sectors[(n, sz)]
            lines.append(f"Sector N = {n} : S_z = {sz}")
            rows, cols = np.nonzero(np.abs(sec.coeff) > threshold)
            for r, c in zip(rows, cols):
                abits = int(sec.graph.alpha.strings[r])
                bbits = int(sec.graph.beta.strings[c])
                amp = complex(sec.coeff[r, c])
                lines.append(f"a'{abits:0{self.m}b}'b'{bbits:0{self.m}b}' {amp}")
        return "\n".join(lines)


# -- module-level forms of the container operations -------------------------

def create(keys: Iterable[tuple]) -> Wavefunction:
    return Wavefunction(keys)


def inner_product(a: Wavefunction, b: Wavefunction) -> complex:
    """<a|b>; sectors present on only one side contribute zero."""
    if a.m != b.m:
        raise DomainError(f"orbital counts differ: {a.m} vs {b.m}")
    total = 0.0 + 0.0j
    for key, sec in a.sectors.items():
        if key in b.sectors:
            total += np.vdot(sec.coeff, b.sectors[key].coeff)
    return complex(total)


def _spread_bits(strings: np.ndarray, m: int, offset: int) -> np.ndarray:
    """Move channel bit p to dense-basis bit 2p + offset."""
    out = np.zeros_like(np.asarray(strings, dtype=np.int64))
    for p in range(m):
        out |= ((strings >> p) & 1) << (2 * p + offset)
    return out


def _gather_bits(indices: np.ndarray, m: int, offset: int) -> np.ndarray:
    """Inverse of _spread_bits on dense basis indices."""
    idx = np.asarray(indices, dtype=np.int64)
    out = np.zeros_like(idx)
    for p in range(m):
        out |= ((idx >> (2 * p + offset)) & 1) << p
    return out


def _interleave_signs(astr: np.ndarray, bstr: np.ndarray, m: int,
                      paired: bool = False) -> np.ndarray:
    """Reordering parity between alpha-block-first and interleaved order.

    Counts pairs (alpha-occupied p', beta-occupied p) with p' > p.  With
    ``paired`` the two string arrays are walked elementwise; otherwise the
    full outer (alpha x beta) sign matrix is returned.
    """
    above = np.zeros((np.size(astr), m), dtype=np.int64)
    astr = np.atleast_1d(np.asarray(astr, dtype=np.int64))
    bstr = np.atleast_1d(np.asarray(bstr, dtype=np.int64))
    for p in range(m):
        above[:, p] = popcount(astr >> (p + 1))
    occ_b = ((bstr[:, None] >> np.arange(m)[None, :]) & 1).astype(np.int64)
    if paired:
        counts = np.einsum("xp,xp->x", above, occ_b)
    else:
        counts = above @ occ_b.T
    return 1 - 2 * (counts & 1)
