"""Brute-force dense ground truth on the full 2**(2m) Fock space.

Ladder operators are realized with the standard fermionic sign string over
the interleaved spin-orbital ordering: mode 2p is (p, alpha), mode 2p + 1
is (p, beta), and basis index bit q stores the occupancy of mode q.  This
matches ``wavefunction.to_dense``, so sector operations can be checked by
commuting them through the dense conversion.

Everything here is deliberately simple and small-scale; it exists for
verification, not performance.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import DomainError, ResourceError

DENSE_ORBITAL_CAP = 7


class DenseOperator:
    """A dense operator on the full Fock space of m spatial orbitals."""

    def __init__(self, matrix: np.ndarray, m: int):
        self.matrix = np.asarray(matrix, dtype=np.complex128)
        self.m = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.matrix + other.matrix, self.m)


def _check_cap(m: int):
    if m > DENSE_ORBITAL_CAP:
        raise ResourceError(
            f"dense oracle limited to m <= {DENSE_ORBITAL_CAP}, got m={m}")


@lru_cache(maxsize=None)
def _mode_creations(n_modes: int):
    """Sparse creation matrices for each of n_modes JW modes."""
    id2 = sparse.identity(2, format="csr")
    z = sparse.csr_matrix(np.diag([1.0, -1.0]))
    up = sparse.csr_matrix(np.array([[0.0, 0.0], [1.0, 0.0]]))
    ops = []
    for q in range(n_modes):
        full = sparse.identity(1, format="csr")
        for r in range(n_modes - 1, -1, -1):
            if r < q:
                mat = z
            elif r == q:
                mat = up
            else:
                mat = id2
            full = sparse.kron(full, mat, format="csr")
        ops.append(full.tocsr())
    return tuple(ops)


def creation(mode: int, m: int) -> sparse.csr_matrix:
    """a+ for spin-orbital ``mode`` (2p: alpha, 2p+1: beta) at m orbitals."""
    _check_cap(m)
    return _mode_creations(2 * m)[mode]


def annihilation(mode: int, m: int) -> sparse.csr_matrix:
    _check_cap(m)
    return creation(mode, m).conj().T.tocsr()


def apply_ladder_sequence(ops, vec: np.ndarray, m: int) -> np.ndarray:
    """Apply a product of ladder operators to a dense vector.

    ``ops`` is a sequence of (mode, is_creation) applied right to left,
    matching the written operator order.
    """
    out = np.asarray(vec, dtype=np.complex128)
    for mode, create in reversed(list(ops)):
        mat = creation(mode, m) if create else annihilation(mode, m)
        out = mat @ out
    return out


def jw_matrix(operator, m: int) -> DenseOperator:
    """Dense matrix of an operator container (see operators module).

    ExcitationTerm gives the raw term g * (ladder product); hamiltonian
    containers give the full Hermitian operator they represent.
    """
    _check_cap(m)
    from . import operators as ops_mod

    if isinstance(operator, ops_mod.ExcitationTerm):
        return DenseOperator(_term_matrix(operator, m), m)
    if isinstance(operator, ops_mod.SparseHamiltonian):
        total = np.zeros((4 ** m, 4 ** m), dtype=np.complex128)
        for term in operator.terms:
            mat = _term_matrix(term, m)
            total += mat + mat.conj().T
        return DenseOperator(total, m)
    if isinstance(operator, ops_mod.DiagonalCoulomb):
        return DenseOperator(_diagonal_coulomb_matrix(operator.w, m), m)
    if isinstance(operator, ops_mod.QuadraticHamiltonian):
        total = np.zeros((4 ** m, 4 ** m), dtype=np.complex128)
        for i in range(m):
            for j in range(m):
                if operator.a[i, j] != 0:
                    total += operator.a[i, j] * _spin_summed_e(i, j, m)
        return DenseOperator(total, m)
    if isinstance(operator, ops_mod.RestrictedHamiltonian):
        total = np.zeros((4 ** m, 4 ** m), dtype=np.complex128)
        for i in range(m):
            for j in range(m):
                if operator.h1[i, j] != 0:
                    total += operator.h1[i, j] * _spin_summed_e(i, j, m)
        total += _two_body_matrix(operator.v2, m)
        total += operator.e_core * np.eye(4 ** m)
        return DenseOperator(total, m)
    if isinstance(operator, ops_mod.SSOHamiltonian):
        total = np.zeros((4 ** m, 4 ** m), dtype=np.complex128)
        for (sa, sb), tensor in operator.blocks():
            total += _two_body_matrix_sso(tensor, sa, sb, m)
        return DenseOperator(total, m)
    raise DomainError(f"no dense realization for {type(operator).__name__}")


def _term_matrix(term, m: int) -> np.ndarray:
    dim = 4 ** m
    mat = sparse.identity(dim, dtype=np.complex128, format="csr")
    for op in term.ops:
        mode = op.mode
        if mode >= 2 * m:
            raise DomainError(f"orbital {op.orbital} out of range for m={m}")
        factor = creation(mode, m) if op.is_creation else annihilation(mode, m)
        mat = mat @ factor
    return (term.coefficient * mat).toarray()


@lru_cache(maxsize=None)
def _spin_summed_e_cached(i: int, j: int, m: int):
    ca, cb = creation(2 * i, m), creation(2 * i + 1, m)
    aa, ab = annihilation(2 * j, m), annihilation(2 * j + 1, m)
    return (ca @ aa + cb @ ab).toarray()


def _spin_summed_e(i, j, m):
    return _spin_summed_e_cached(i, j, m)


def _channel_e(i: int, j: int, spin: int, m: int) -> np.ndarray:
    c = creation(2 * i + spin, m)
    a = annihilation(2 * j + spin, m)
    return (c @ a).toarray()


def _two_body_matrix(v, m: int) -> np.ndarray:
    """Spin-free sum_{ijkl, sr} V[i,j,k,l] a+_{is} a+_{jr} a_{ks} a_{lr}.

    Uses the exact reordering
        sum = - sum V[ijkl] E_ik E_jl + sum_k V[ikkl] E_il
    over spin-summed one-body operators; checked against the literal
    four-operator product in the tests.
    """
    dim = 4 ** m
    total = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(m):
        for k in range(m):
            e_ik = _spin_summed_e(i, k, m)
            inner = np.zeros((dim, dim), dtype=np.complex128)
            for j in range(m):
                for l in range(m):
                    if v[i, j, k, l] != 0:
                        inner += v[i, j, k, l] * _spin_summed_e(j, l, m)
            total -= e_ik @ inner
    corr = np.einsum("ikkl->il", np.asarray(v))
    for i in range(m):
        for l in range(m):
            if corr[i, l] != 0:
                total += corr[i, l] * _spin_summed_e(i, l, m)
    return total


def _two_body_matrix_sso(v, spin_a: int, spin_b: int, m: int) -> np.ndarray:
    """sum_{ijkl} V[i,j,k,l] a+_{i sa} a+_{j sb} a_{k sa} a_{l sb}, literally."""
    dim = 4 ** m
    total = np.zeros((dim, dim), dtype=np.complex128)
    v = np.asarray(v)
    for i in range(m):
        for k in range(m):
            ca = creation(2 * i + spin_a, m)
            ak = annihilation(2 * k + spin_a, m)
            for j in range(m):
                for l in range(m):
                    if v[i, j, k, l] != 0:
                        cb = creation(2 * j + spin_b, m)
                        al = annihilation(2 * l + spin_b, m)
                        total += v[i, j, k, l] * (ca @ cb @ ak @ al).toarray()
    return total


def _diagonal_coulomb_matrix(w, m: int) -> np.ndarray:
    dim = 4 ** m
    idx = np.arange(dim)
    occ = np.zeros((dim, m))
    for p in range(m):
        occ[:, p] = ((idx >> (2 * p)) & 1) + ((idx >> (2 * p + 1)) & 1)
    diag = np.einsum("xr,rs,xs->x", occ, np.asarray(w), occ)
    return np.diag(diag.astype(np.complex128))


def oracle_evolve(t: float, op: DenseOperator, state: np.ndarray,
                  herm_tol: float = 1e-10) -> np.ndarray:
    """exp(-i t M) @ state via eigendecomposition; requires Hermitian M."""
    mat = op.matrix
    if np.max(np.abs(mat - mat.conj().T)) > herm_tol:
        raise DomainError("oracle_evolve requires a Hermitian operator")
    vals, vecs = np.linalg.eigh(mat)
    proj = vecs.conj().T @ np.asarray(state, dtype=np.complex128)
    return vecs @ (np.exp(-1j * t * vals) * proj)


def oracle_expectation(op: DenseOperator, state: np.ndarray) -> complex:
    v = np.asarray(state, dtype=np.complex128)
    if v.shape[0] != op.dim:
        raise DomainError(
            f"state dimension {v.shape[0]} does not match operator {op.dim}")
    return complex(v.conj() @ (op.matrix @ v))


def oracle_term_expectation(term, state: np.ndarray, m: int) -> complex:
    """<v| g |v> for a single excitation term, via sequential matvecs."""
    applied = apply_ladder_sequence(
        [(op.mode, op.is_creation) for op in term.ops], state, m)
    return complex(term.coefficient * (np.asarray(state).conj() @ applied))
