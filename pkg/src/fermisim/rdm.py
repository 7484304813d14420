"""Reduced density matrices, expectation values, and the two-body gradient.

Index convention: the returned particle tensors follow the operator order

    Gamma[i, j, ..., k, l, ...] = < a+_i a+_j ... a_k a_l ... >

with creation indices first and in-order pairing (first creation with
first annihilation, and so on).  Downstream formulas written for the
<a+ a+ a_l a_k> order differ by transposes.

Spin-summed tensors sum each pair's spin label independently; spin-orbital
tensors are indexed by interleaved external modes (2p: alpha, 2p+1: beta).

Higher orders are produced by recursively prepending one-body excitations
onto per-determinant intermediate tensors; every contraction sign here is
pinned against the dense oracle in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .apply import (_build_d_block, _build_d_channel, _build_f_pattern,
                    _HZ_PATTERNS, apply_hamiltonian, apply_term,
                    select_dense_kernel)
from .errors import DomainError, ResourceError
from .graph import ALPHA, BETA
from .operators import ExcitationTerm, LadderOp, SparseHamiltonian, parse_operator_string
from .wavefunction import Sector, Wavefunction, inner_product

RDM_ELEMENT_BUDGET = 2 ** 27
ORDER4_ORBITAL_CAP = 8


@dataclass
class RdmTensor:
    order: int
    flavor: str  # 'spin_summed' | 'spin_orbital'
    kind: str    # 'particle' | 'hole'
    data: np.ndarray


# -- spin-summed particle RDMs ---------------------------------------------------

def _e_apply(sec: Sector, x: np.ndarray) -> np.ndarray:
    """Y[J, i, l, ...] = sum_K <J| E_il |K> X[K, ...] (spin summed)."""
    m = sec.key.m
    lena, lenb = sec.coeff.shape
    y = np.zeros((lena, lenb, m, m) + x.shape[2:], dtype=np.complex128)
    for i in range(m):
        for l in range(m):
            src, tgt, par = sec.graph.alpha_map(i, l)
            if src.size:
                y[tgt, :, i, l] += par.reshape((-1,) + (1,) * (x.ndim - 1)) * x[src]
            src, tgt, par = sec.graph.beta_map(i, l)
            if src.size:
                y[:, tgt, i, l] += par.reshape((1, -1) + (1,) * (x.ndim - 2)) * x[:, src]
    return y


def _r2_tensor(sec: Sector) -> tuple[np.ndarray, np.ndarray]:
    """(D, R2) where R2[A,B,c1,a1,c2,a2] carries the order-2 chain."""
    m = sec.key.m
    d = _build_d_block(sec, 0, sec.graph.lenb)
    eye = np.eye(m)
    r2 = -_e_apply(sec, d) + np.einsum("abim,lj->abiljm", d, eye)
    return d, r2


def _rdm1_sector(sec: Sector, d: np.ndarray) -> np.ndarray:
    return np.einsum("ab,abil->il", np.conj(sec.coeff), d)


def _rdm2_sector_kh(sec: Sector, d: np.ndarray) -> np.ndarray:
    g1 = _rdm1_sector(sec, d)
    g2 = -np.einsum("abki,abjl->ijkl", np.conj(d), d)
    g2 += np.einsum("jk,il->ijkl", np.eye(sec.key.m), g1)
    return g2


def _rdm2_sector_f(sec: Sector) -> np.ndarray:
    m = sec.key.m
    g2 = np.zeros((m, m, m, m), dtype=np.complex128)
    for pattern in _HZ_PATTERNS:
        f = _build_f_pattern(sec, *pattern)
        if f is not None:
            g2 -= np.einsum("abij,abkl->ijkl", np.conj(f), f)
    return g2


def _rdm3_sector(sec: Sector, d: np.ndarray, r2: np.ndarray) -> np.ndarray:
    m = sec.key.m
    eye = np.eye(m)
    cbar = np.conj(sec.coeff)
    g3 = np.zeros((m,) * 6, dtype=np.complex128)
    for c in range(m):
        for dd in range(m):
            r3 = _e_apply(sec, r2[:, :, :, :, c, dd])
            r3 -= np.einsum("abim,lj->abiljm", r2[:, :, :, :, c, dd], eye)
            t2 = np.zeros_like(r3)
            t2[:, :, :, c] = r2[:, :, :, dd]
            r3 -= t2
            g3[:, :, c, :, :, dd] = np.einsum("ab,abiljm->ijlm", cbar, r3)
    return g3


def _rdm4_sector(sec: Sector, d: np.ndarray, r2: np.ndarray,
                 g3: np.ndarray) -> np.ndarray:
    m = sec.key.m
    eye = np.eye(m)
    dbar = np.conj(d)
    g4 = np.zeros((m,) * 8, dtype=np.complex128)
    for c in range(m):
        for dd in range(m):
            r3 = _e_apply(sec, r2[:, :, :, :, c, dd])
            r3 -= np.einsum("abim,lj->abiljm", r2[:, :, :, :, c, dd], eye)
            t2 = np.zeros_like(r3)
            t2[:, :, :, c] = r2[:, :, :, dd]
            r3 -= t2
            big = np.einsum("abli,abjmkn->iljmkn", dbar, r3)
            g4[:, :, :, c, :, :, :, dd] -= big.transpose(0, 2, 4, 1, 3, 5)
    g4 += np.einsum("ixyabc,lj->ijxylabc", g3, eye)
    g4 += np.einsum("ixyabc,lj->ixjylbac", g3, eye)
    g4 += np.einsum("ixyabc,lj->ixyjlbca", g3, eye)
    return g4


def _spin_summed_rdm(wfn: Wavefunction, order: int,
                     force_path: str | None = None) -> np.ndarray:
    m = wfn.m
    out = np.zeros((m,) * (2 * order), dtype=np.complex128)
    for key, sec in wfn.sectors.items():
        lena, lenb = sec.coeff.shape
        if order >= 2 and lena * lenb * m ** 4 > RDM_ELEMENT_BUDGET:
            raise ResourceError(f"intermediate tensor too large on sector {key}")
        if order == 1:
            out += _rdm1_sector(sec, _build_d_block(sec, 0, lenb))
            continue
        if order == 2:
            path = force_path or select_dense_kernel(sec.key.n, m)
            if path == "hz":
                out += _rdm2_sector_f(sec)
            else:
                out += _rdm2_sector_kh(sec, _build_d_block(sec, 0, lenb))
            continue
        d, r2 = _r2_tensor(sec)
        if order == 3:
            out += _rdm3_sector(sec, d, r2)
        else:
            g3 = _rdm3_sector(sec, d, r2)
            out += _rdm4_sector(sec, d, r2, g3)
    return out


# -- spin-orbital particle RDMs -----------------------------------------------------

def _e_apply_channel(sec: Sector, x: np.ndarray, spin: int) -> np.ndarray:
    """Y[J, i, l, ...] = sum_K <J| a+_{i s} a_{l s} |K> X[K, ...]."""
    m = sec.key.m
    lena, lenb = sec.coeff.shape
    y = np.zeros((lena, lenb, m, m) + x.shape[2:], dtype=np.complex128)
    for i in range(m):
        for l in range(m):
            src, tgt, par = sec.graph.excitation_map(i, l, spin)
            if not src.size:
                continue
            if spin == ALPHA:
                y[tgt, :, i, l] += par.reshape((-1,) + (1,) * (x.ndim - 1)) * x[src]
            else:
                y[:, tgt, i, l] += par.reshape((1, -1) + (1,) * (x.ndim - 2)) * x[:, src]
    return y


def _sorted_block(sec: Sector, spins: tuple[int, ...]) -> np.ndarray:
    """Chain tensor for a sorted spin pattern (alpha pairs first).

    Returns Gamma_block with pair-interleaved axes [c1, a1, c2, a2, ...]
    where pair t carries spin spins[t]; pairing is in-order.
    """
    k = len(spins)
    r = sec.coeff  # order-0 intermediate
    # prepend pairs from the last to the first
    for pos in range(k - 1, -1, -1):
        sigma = spins[pos]
        existing = spins[pos + 1:]
        n_existing = len(existing)
        new = _e_apply_channel(sec, r, sigma)
        eye = np.eye(sec.key.m)
        for t, s_t in enumerate(existing):
            if s_t != sigma:
                continue
            if t == 0 and n_existing == 1:
                new -= np.einsum("abim,lj->abiljm", r, eye)
            elif t == 0:  # first of two existing pairs
                new -= np.einsum("abimyz,lj->abiljmyz", r, eye)
            else:  # second of two existing pairs: creations (i, j1),
                   # annihilations (m2, m1) read from axes (i, m2, j1, m1)
                new -= np.einsum("abiwxy,lz->abilxyzw", r, eye)
        r = new * ((-1) ** n_existing)
    g = np.zeros((sec.key.m,) * (2 * k), dtype=np.complex128)
    g += np.einsum(np.conj(sec.coeff), [0, 1], r, list(range(2 * k + 2)),
                   list(range(2, 2 * k + 2)))
    return g


def _spin_orbital_rdm(wfn: Wavefunction, order: int) -> np.ndarray:
    m = wfn.m
    two_m = 2 * m
    out = np.zeros((two_m,) * (2 * order), dtype=np.complex128)
    for key, sec in wfn.sectors.items():
        lena, lenb = sec.coeff.shape
        if lena * lenb * m ** (2 * order) > RDM_ELEMENT_BUDGET:
            raise ResourceError(f"intermediate tensor too large on sector {key}")
        blocks: dict[tuple[int, ...], np.ndarray] = {}
        for n_alpha_pairs in range(order + 1):
            spins = (ALPHA,) * n_alpha_pairs + (BETA,) * (order - n_alpha_pairs)
            blocks[spins] = _sorted_block(sec, spins)
        for c_spins in product((ALPHA, BETA), repeat=order):
            for a_spins in product((ALPHA, BETA), repeat=order):
                if sorted(c_spins) != sorted(a_spins):
                    continue
                _assemble_pattern(out, blocks, c_spins, a_spins, m)
    return out


def _stable_sort_perm(spins: tuple[int, ...]) -> tuple[list[int], int]:
    """Positions sorted by spin (stable) and the permutation's parity sign."""
    order = sorted(range(len(spins)), key=lambda t: spins[t])
    sign = 1
    seen: list[int] = []
    for p in order:
        sign *= (-1) ** sum(1 for q in seen if q > p)
        seen.append(p)
    return order, sign


def _assemble_pattern(out, blocks, c_spins, a_spins, m: int) -> None:
    k = len(c_spins)
    c_order, c_sign = _stable_sort_perm(c_spins)
    a_order, a_sign = _stable_sort_perm(a_spins)
    sorted_spins = tuple(c_spins[t] for t in c_order)
    block = blocks[sorted_spins]
    # block pair s: creation axis 2s belongs to original creation position
    # c_order[s]; annihilation axis 2s+1 to original annihilation a_order[s]
    axes = [0] * (2 * k)
    for s in range(k):
        axes[c_order[s]] = 2 * s
        axes[k + a_order[s]] = 2 * s + 1
    view = out[tuple(slice(sp, 2 * m, 2) for sp in (*c_spins, *a_spins))]
    view += (c_sign * a_sign) * block.transpose(axes)


# -- public entry points -----------------------------------------------------------

def compute_rdm(wfn: Wavefunction, order: int, flavor: str = "spin_summed",
                force_path: str | None = None) -> RdmTensor:
    """Particle RDM; orders 1-4 spin-summed, 1-3 spin-orbital.

    The order-2 spin-summed tensor follows the filling dispatch of the
    dense kernels (D intermediates by default, pair-annihilation
    intermediates below 0.3 filling); ``force_path`` pins one route.
    """
    if flavor == "spin_summed":
        if not 1 <= order <= 4:
            raise DomainError(f"spin-summed RDMs support orders 1..4, got {order}")
        if order == 4 and wfn.m > ORDER4_ORBITAL_CAP:
            raise ResourceError(
                f"order-4 RDM refused above m={ORDER4_ORBITAL_CAP} (got m={wfn.m})")
        return RdmTensor(order, flavor, "particle",
                         _spin_summed_rdm(wfn, order, force_path))
    if flavor == "spin_orbital":
        if not 1 <= order <= 3:
            raise DomainError(f"spin-orbital RDMs support orders 1..3, got {order}")
        return RdmTensor(order, flavor, "particle", _spin_orbital_rdm(wfn, order))
    raise DomainError(f"unknown RDM flavor '{flavor}'")


def hole_rdm(wfn: Wavefunction, order: int, flavor: str = "spin_summed") -> RdmTensor:
    """Hole RDMs < a a ... a+ a+ ... > from particle RDMs via fixed Wick
    relations (orders 1 and 2 only).

    The relations below include the state-independent contraction terms;
    each coefficient is pinned against the oracle in the tests.
    """
    if order not in (1, 2):
        raise DomainError(f"hole RDMs support orders 1..2, got {order}")
    if flavor == "spin_summed":
        m = wfn.m
        eye = np.eye(m)
        g1 = compute_rdm(wfn, 1, flavor).data
        if order == 1:
            data = 2 * eye - g1.T
        else:
            g2 = compute_rdm(wfn, 2, flavor).data
            data = np.transpose(g2, (2, 3, 0, 1)).copy()
            data += 2 * np.einsum("jk,il->ijkl", eye, eye)
            data -= np.einsum("jk,li->ijkl", eye, g1)
            data -= 4 * np.einsum("ik,jl->ijkl", eye, eye)
            data += 2 * np.einsum("ik,lj->ijkl", eye, g1)
            data += 2 * np.einsum("jl,ki->ijkl", eye, g1)
            data -= np.einsum("il,kj->ijkl", eye, g1)
        return RdmTensor(order, flavor, "hole", data)
    if flavor == "spin_orbital":
        two_m = 2 * wfn.m
        eye = np.eye(two_m)
        g1 = compute_rdm(wfn, 1, flavor).data
        if order == 1:
            data = eye - g1.T
        else:
            g2 = compute_rdm(wfn, 2, flavor).data
            data = np.transpose(g2, (2, 3, 0, 1)).copy()
            data += np.einsum("qr,ps->pqrs", eye, eye)
            data -= np.einsum("qr,sp->pqrs", eye, g1)
            data -= np.einsum("pr,qs->pqrs", eye, eye)
            data += np.einsum("pr,sq->pqrs", eye, g1)
            data += np.einsum("qs,rp->pqrs", eye, g1)
            data -= np.einsum("ps,rq->pqrs", eye, g1)
        return RdmTensor(order, flavor, "hole", data)
    raise DomainError(f"unknown RDM flavor '{flavor}'")


def expectation(wfn: Wavefunction, operator) -> complex:
    """<wfn| O |wfn>.

    Operator strings evaluate the raw parsed sum (no implicit
    Hermitization), so '0^ 0' yields the plain number-operator average.
    """
    if isinstance(operator, str):
        operator = parse_operator_string(operator)
    if isinstance(operator, ExcitationTerm):
        return inner_product(wfn, apply_term(operator, wfn, missing_sector="drop"))
    if isinstance(operator, SparseHamiltonian):
        total = 0.0 + 0.0j
        for term in operator.terms:
            total += inner_product(wfn, apply_term(term, wfn, missing_sector="drop"))
        return complex(total)
    return inner_product(wfn, apply_hamiltonian(operator, wfn))


def two_body_gradient(wfn: Wavefunction, h) -> np.ndarray:
    """g[p,q,r,s] = <[H, a+_p a+_q a_r a_s]> over external spin-orbital
    modes; tuples that break the wavefunction symmetry vanish."""
    two_m = 2 * wfn.m
    hw = apply_hamiltonian(h, wfn)
    out = np.zeros((two_m,) * 4, dtype=np.complex128)
    for p, q, r, s in product(range(two_m), repeat=4):
        gen = ExcitationTerm(1.0, (LadderOp.from_mode(p, True),
                                   LadderOp.from_mode(q, True),
                                   LadderOp.from_mode(r, False),
                                   LadderOp.from_mode(s, False)))
        if gen.is_nilpotent:
            continue
        gw = apply_term(gen, wfn, missing_sector="drop")
        ghw = apply_term(gen, hw, missing_sector="drop")
        out[p, q, r, s] = inner_product(hw, gw) - inner_product(wfn, ghw)
    return out
