"""Operator representations: ladder strings, sparse sums, dense tensors.

External spin-orbital indexing is interleaved: index 2p is (p, alpha) and
2p + 1 is (p, beta).  The two-body tensor convention throughout the
library is

    H2 = sum_{ijkl} sum_{s,r} V[i, j, k, l] a+_{is} a+_{jr} a_{ks} a_{lr}

i.e. V[i, j, k, l] multiplies the operator whose first creation and first
annihilation share spin s.  FCIDUMP integrals in chemists' notation are
converted on load as V[i, j, k, l] = -(ik|jl) / 2, which the tests pin
against the dense oracle.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, FormatError

HERMITICITY_TOL = 1e-12

ALPHA = 0
BETA = 1


@dataclass(frozen=True)
class LadderOp:
    orbital: int
    spin: int  # ALPHA or BETA
    is_creation: bool

    @property
    def mode(self) -> int:
        """External interleaved spin-orbital index."""
        return 2 * self.orbital + self.spin

    @staticmethod
    def from_mode(mode: int, is_creation: bool) -> "LadderOp":
        return LadderOp(mode // 2, mode % 2, is_creation)

    def adjoint(self) -> "LadderOp":
        return LadderOp(self.orbital, self.spin, not self.is_creation)

    def __str__(self) -> str:
        return f"{self.mode}^" if self.is_creation else f"{self.mode}"


@dataclass(frozen=True)
class ExcitationTerm:
    """A single product g * (ladder operators, applied right to left)."""

    coefficient: complex
    ops: tuple[LadderOp, ...]

    @cached_property
    def is_nilpotent(self) -> bool:
        """True when the product is identically zero (a repeated creation
        or repeated annihilation of the same mode)."""
        creations = Counter(op.mode for op in self.ops if op.is_creation)
        annihilations = Counter(op.mode for op in self.ops if not op.is_creation)
        return any(c > 1 for c in creations.values()) or \
            any(c > 1 for c in annihilations.values())

    @cached_property
    def is_diagonal(self) -> bool:
        """A polynomial of number operators: every mode is created exactly
        as often as it is annihilated."""
        if self.is_nilpotent:
            return False
        creations = Counter(op.mode for op in self.ops if op.is_creation)
        annihilations = Counter(op.mode for op in self.ops if not op.is_creation)
        return creations == annihilations

    def particle_change(self) -> tuple[int, int]:
        """(delta n_alpha, delta n_beta) effected by the product."""
        da = db = 0
        for op in self.ops:
            step = 1 if op.is_creation else -1
            if op.spin == ALPHA:
                da += step
            else:
                db += step
        return da, db

    def conserves_sector(self) -> bool:
        return self.particle_change() == (0, 0)

    def adjoint(self) -> "ExcitationTerm":
        return ExcitationTerm(np.conj(self.coefficient),
                              tuple(op.adjoint() for op in reversed(self.ops)))

    def scaled(self, factor: complex) -> "ExcitationTerm":
        return ExcitationTerm(self.coefficient * factor, self.ops)

    @cached_property
    def normal_form(self) -> tuple[int, tuple[LadderOp, ...]]:
        """(sign, ops) with creations left of annihilations, each group
        sorted ascending by mode.  Pure permutation parity; only meaningful
        as an operator identity when no conjugate pair crosses, so it is
        used for canonicalization and classification, not algebra."""
        if self.is_nilpotent:
            return 0, self.ops
        keyed = [((0 if op.is_creation else 1, op.mode), i, op)
                 for i, op in enumerate(self.ops)]
        ordered = sorted(keyed, key=lambda t: t[0])
        perm = [t[1] for t in ordered]
        sign = 1
        seen = []
        for p in perm:
            sign *= (-1) ** sum(1 for q in seen if q > p)
            seen.append(p)
        return sign, tuple(t[2] for t in ordered)

    def __str__(self) -> str:
        body = " ".join(str(op) for op in self.ops)
        return f"({complex(self.coefficient)}) {body}" if body else f"({complex(self.coefficient)})"


class SparseHamiltonian:
    """Implicitly Hermitized sum of excitation terms.

    The operator represented is sum_t (g_t + g_t^dagger); note a diagonal
    term therefore enters twice (n = n^dagger).  Raw, un-Hermitized term
    evaluation is available through ``terms`` (used by expectation values).
    """

    def __init__(self, terms):
        self.terms: tuple[ExcitationTerm, ...] = tuple(terms)

    def __len__(self) -> int:
        return len(self.terms)

    def hermitized_terms(self) -> list[ExcitationTerm]:
        out = []
        for term in self.terms:
            out.append(term)
            out.append(term.adjoint())
        return out

    def __str__(self) -> str:
        return " + ".join(str(t) for t in self.terms)


class DiagonalCoulomb:
    """H = sum_{rs} W[r, s] n_r n_s with spin-summed number operators."""

    def __init__(self, w):
        w = np.asarray(w, dtype=np.complex128)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DomainError(f"W must be square, got shape {w.shape}")
        if np.max(np.abs(w - w.conj().T)) > HERMITICITY_TOL:
            raise DomainError("W must be Hermitian for real evolution phases")
        self.w = w
        self.m = w.shape[0]


class QuadraticHamiltonian:
    """H = sum_{ij} A[i, j] sum_s a+_{is} a_{js}, spin-free."""

    def __init__(self, a):
        a = np.asarray(a, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"A must be square, got shape {a.shape}")
        if np.max(np.abs(a - a.conj().T)) > HERMITICITY_TOL:
            raise DomainError("quadratic coefficient matrix must be Hermitian")
        self.a = a
        self.m = a.shape[0]


class RestrictedHamiltonian:
    """Spin-free one- plus two-body Hamiltonian (see module docstring)."""

    def __init__(self, h1, v2=None, e_core: float = 0.0):
        h1 = np.asarray(h1, dtype=np.complex128)
        if h1.ndim != 2 or h1.shape[0] != h1.shape[1]:
            raise DomainError(f"h1 must be square, got shape {h1.shape}")
        if np.max(np.abs(h1 - h1.conj().T)) > HERMITICITY_TOL:
            raise DomainError("h1 must be Hermitian")
        m = h1.shape[0]
        if v2 is None:
            v2 = np.zeros((m, m, m, m), dtype=np.complex128)
        v2 = np.asarray(v2, dtype=np.complex128)
        if v2.shape != (m, m, m, m):
            raise DomainError(f"v2 shape {v2.shape} does not match m={m}")
        if np.max(np.abs(v2 - np.conj(np.transpose(v2, (2, 3, 0, 1))))) > HERMITICITY_TOL:
            raise DomainError("v2 violates V[ijkl] == conj(V[klij])")
        self.h1 = h1
        self.v2 = v2
        self.e_core = float(e_core)
        self.m = m


class SSOHamiltonian:
    """Spin-conserving spin-orbital two-body Hamiltonian.

    Three channel blocks (aa, ab, bb) are stored; the ba block defaults to
    the ab tensor, so identical blocks reproduce a RestrictedHamiltonian's
    two-body part exactly.  An explicit ba block may be supplied for full
    generality.
    """

    def __init__(self, vaa, vab, vbb, vba=None):
        tensors = {"aa": vaa, "ab": vab, "bb": vbb,
                   "ba": vab if vba is None else vba}
        m = None
        self.v = {}
        for name, tensor in tensors.items():
            tensor = np.asarray(tensor, dtype=np.complex128)
            if m is None:
                m = tensor.shape[0]
            if tensor.shape != (m, m, m, m):
                raise DomainError(f"block {name} has shape {tensor.shape}")
            if np.max(np.abs(tensor - np.conj(np.transpose(tensor, (2, 3, 0, 1))))) \
                    > HERMITICITY_TOL:
                raise DomainError(f"block {name} violates V[ijkl] == conj(V[klij])")
            self.v[name] = tensor
        self.m = m

    def blocks(self):
        """((spin_first, spin_second), tensor) for all four channel patterns."""
        yield (ALPHA, ALPHA), self.v["aa"]
        yield (ALPHA, BETA), self.v["ab"]
        yield (BETA, ALPHA), self.v["ba"]
        yield (BETA, BETA), self.v["bb"]


# -- operator-string grammar -------------------------------------------------

def _parse_ladder_token(token: str) -> LadderOp:
    create = token.endswith("^")
    body = token[:-1] if create else token
    if not body.isdigit():
        raise FormatError(f"malformed ladder token '{token}'")
    mode = int(body)
    if mode < 0:
        raise FormatError(f"negative spin-orbital index in '{token}'")
    return LadderOp.from_mode(mode, create)


def _parse_coefficient(token: str) -> complex:
    try:
        return complex(token.strip("()"))
    except ValueError as exc:
        raise FormatError(f"bad coefficient '{token}'") from exc


def _looks_like_ladder(token: str) -> bool:
    body = token[:-1] if token.endswith("^") else token
    return body.isdigit()


def parse_operator_string(text: str) -> SparseHamiltonian:
    """Parse e.g. "2^ 0" or "(0.5+0.5j) 2^ 0 + 1.5 3^ 1" into terms.

    Tokens are whitespace separated; "<int>" annihilates and "<int>^"
    creates the external spin-orbital (2p: alpha, 2p+1: beta).  Terms are
    separated by standalone '+' or '-' tokens, with an optional leading
    numeric coefficient per term.
    """
    tokens = text.split()
    if not tokens:
        raise FormatError("empty operator string")
    terms = []
    current: list[str] = []
    sign = 1.0

    def flush():
        nonlocal current
        if not current:
            raise FormatError("empty term in operator string")
        coeff = complex(sign)
        ops_tokens = current
        if not _looks_like_ladder(current[0]):
            coeff *= _parse_coefficient(current[0])
            ops_tokens = current[1:]
        ops = tuple(_parse_ladder_token(tok) for tok in ops_tokens)
        terms.append(ExcitationTerm(coeff, ops))
        current = []

    for tok in tokens:
        if tok in ("+", "-"):
            if current:
                flush()
            sign = -1.0 if tok == "-" else 1.0
        else:
            current.append(tok)
    flush()
    return SparseHamiltonian(terms)


def print_operator(h: SparseHamiltonian) -> str:
    """Canonical text form; parse(print(parse(s))) == parse(s)."""
    return " + ".join(str(t) for t in h.terms)


# -- structural classification -----------------------------------------------

def classify(h) -> str:
    """Dispatch tag for evolution and application routines."""
    if isinstance(h, DiagonalCoulomb):
        return "diagonal_coulomb"
    if isinstance(h, QuadraticHamiltonian):
        return "quadratic"
    if isinstance(h, RestrictedHamiltonian):
        return "restricted_dense"
    if isinstance(h, SSOHamiltonian):
        return "sso_dense"
    if isinstance(h, ExcitationTerm):
        return "diagonal_number_poly" if h.is_diagonal else "sparse"
    if isinstance(h, SparseHamiltonian):
        if h.terms and all(t.is_diagonal for t in h.terms):
            return "diagonal_number_poly"
        return "sparse"
    return "sparse"


# -- FCIDUMP ingestion ---------------------------------------------------------

def restricted_from_chemists(h1, g_chem, e_core: float = 0.0) -> RestrictedHamiltonian:
    """Build the container from chemists'-notation integrals.

    The molecular Hamiltonian sum_pq h_pq E_pq
    + (1/2) sum_pqrs (pq|rs) sum_{st} a+_{ps} a+_{rt} a_{st'...}
    maps onto the library operator order as V[i, j, k, l] = -(ik|jl) / 2.
    """
    g = np.asarray(g_chem, dtype=np.complex128)
    v2 = -0.5 * np.transpose(g, (0, 2, 1, 3))
    return RestrictedHamiltonian(h1, v2, e_core)


def load_fcidump(path) -> RestrictedHamiltonian:
    """Read an FCIDUMP-style text file (1-based, chemists' notation)."""
    with open(path) as fh:
        content = fh.read()
    lines = content.splitlines()
    header_end = None
    header_text = []
    for ln, line in enumerate(lines):
        header_text.append(line)
        stripped = line.strip().upper().replace(" ", "")
        if "&END" in stripped or stripped.endswith("/"):
            header_end = ln
            break
    if header_end is None:
        raise FormatError("FCIDUMP header not terminated by &END or /")
    header = " ".join(header_text).upper().replace("=", " = ").replace(",", " , ")
    tokens = header.split()
    fields = {}
    for i, tok in enumerate(tokens):
        if tok in ("NORB", "NELEC", "MS2") and i + 2 < len(tokens) and tokens[i + 1] == "=":
            fields[tok] = int(tokens[i + 2])
    if "NORB" not in fields:
        raise FormatError("FCIDUMP header missing NORB")
    norb = fields["NORB"]
    h1 = np.zeros((norb, norb), dtype=np.complex128)
    g = np.zeros((norb, norb, norb, norb), dtype=np.complex128)
    e_core = 0.0
    for line in lines[header_end + 1:]:
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FormatError(f"malformed integral line: '{line.strip()}'")
        value = float(parts[0].upper().replace("D", "E"))
        i, j, k, l = (int(p) for p in parts[1:])
        for idx in (i, j, k, l):
            if idx < 0 or idx > norb:
                raise FormatError(f"orbital index {idx} out of range 1..{norb}")
        if i == 0 and j == 0 and k == 0 and l == 0:
            e_core = value
        elif k == 0 and l == 0:
            h1[i - 1, j - 1] = value
            h1[j - 1, i - 1] = value
        else:
            if i == 0 or j == 0 or k == 0 or l == 0:
                raise FormatError(f"mixed zero indices in line: '{line.strip()}'")
            a, b, c, d = i - 1, j - 1, k - 1, l - 1
            # 8-fold permutational symmetry of real (ab|cd)
            for (p, q, r, s) in ((a, b, c, d), (b, a, c, d), (a, b, d, c),
                                 (b, a, d, c), (c, d, a, b), (d, c, a, b),
                                 (c, d, b, a), (d, c, b, a)):
                g[p, q, r, s] = value
    return restricted_from_chemists(h1, g, e_core)
