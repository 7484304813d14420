"""Action of operators on sector wavefunctions.

Two families live here: exact application of individual excitation terms
(with full fermionic parity bookkeeping), and dense two-body Hamiltonian
application via determinant-space resolution-of-identity intermediates.

The dense kernels use the operator reordering

    sum_{sr} V[ijkl] a+_{is} a+_{jr} a_{ks} a_{lr}
        = - sum_{sr} V[ijkl] E_{ik,s} E_{jl,r} + sum_s (sum_k V[ikkl]) E_{il,s}

so a one-body correction with a positive sign accompanies the minus on
the contracted double excitation.  Both signs are pinned by the oracle
tests rather than trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bitstrings import mask_below, parity_to_sign, popcount
from .errors import DomainError, ResourceError
from .graph import ALPHA, BETA, get_channel
from .operators import (DiagonalCoulomb, ExcitationTerm, QuadraticHamiltonian,
                        RestrictedHamiltonian, SSOHamiltonian, SparseHamiltonian)
from .wavefunction import Sector, Wavefunction

DENSE_FILLING_THRESHOLD = 0.3
KH_BLOCK_ELEMENT_BUDGET = 2 ** 25  # complex entries of the D tensor per block
OLSEN_ELEMENT_BUDGET = 2 ** 26


# -- single excitation terms --------------------------------------------------

def _channel_action(ops, channel):
    """Vectorized action of a same-channel ladder subsequence on all strings.

    ``ops`` lists (orbital, is_creation) applied right to left.  Returns
    (valid, bits, sign) over the channel's strings; entries with
    valid == False carry garbage bits/sign.
    """
    bits = channel.strings.copy()
    sign = np.ones(channel.dim, dtype=np.int64)
    valid = np.ones(channel.dim, dtype=bool)
    for orbital, is_creation in reversed(ops):
        occupied = ((bits >> orbital) & 1) == 1
        valid &= occupied ^ is_creation
        sign *= parity_to_sign(popcount(bits & mask_below(orbital)))
        bits ^= 1 << orbital
    return valid, bits, sign


def _split_term(term: ExcitationTerm):
    """Channel subsequences plus the interleave reordering parity.

    Moving every alpha operator left of every beta operator costs one sign
    per (beta op, alpha op) inversion in the written order.
    """
    alpha_ops = [(op.orbital, op.is_creation) for op in term.ops if op.spin == ALPHA]
    beta_ops = [(op.orbital, op.is_creation) for op in term.ops if op.spin == BETA]
    inversions = 0
    betas_seen = 0
    for op in term.ops:
        if op.spin == BETA:
            betas_seen += 1
        else:
            inversions += betas_seen
    return alpha_ops, beta_ops, (-1) ** inversions


def apply_term(term: ExcitationTerm, wfn: Wavefunction,
               missing_sector: str = "error") -> Wavefunction:
    """g |wfn> for a single ladder-operator product; the input is untouched.

    Cross-sector terms route amplitudes into the matching (n, sz) sector,
    which must exist in the wavefunction unless ``missing_sector`` is
    'drop'.
    """
    if missing_sector not in ("error", "drop"):
        raise DomainError(f"missing_sector must be 'error' or 'drop'")
    out = wfn.empty_like()
    if term.is_nilpotent or term.coefficient == 0:
        return out
    alpha_ops, beta_ops, reorder_sign = _split_term(term)
    da, db = term.particle_change()
    for (n, sz), sec in wfn.sectors.items():
        na, nb = sec.n_alpha, sec.n_beta
        ta, tb = na + da, nb + db
        if not (0 <= ta <= wfn.m and 0 <= tb <= wfn.m):
            continue
        valid_a, bits_a, sign_a = _channel_action(alpha_ops, sec.graph.alpha)
        valid_b, bits_b, sign_b = _channel_action(beta_ops, sec.graph.beta)
        if not (valid_a.any() and valid_b.any()):
            continue
        target_key = (ta + tb, ta - tb)
        if target_key not in out.sectors:
            if missing_sector == "drop":
                continue
            raise DomainError(
                f"term moves sector ({n}, {sz}) to missing sector {target_key}")
        target = out.sectors[target_key]
        # each beta operator crosses the alpha block of the source string
        cross = (-1) ** (na * len(beta_ops))
        src_a = np.nonzero(valid_a)[0]
        src_b = np.nonzero(valid_b)[0]
        tgt_a = target.graph.alpha.index[bits_a[src_a]]
        tgt_b = target.graph.beta.index[bits_b[src_b]]
        amp = (term.coefficient * reorder_sign * cross) * \
            np.outer(sign_a[src_a], sign_b[src_b]) * sec.coeff[np.ix_(src_a, src_b)]
        target.coeff[np.ix_(tgt_a, tgt_b)] += amp
    return out


def term_support_mask(term: ExcitationTerm, wfn: Wavefunction) -> dict:
    """Per-sector boolean masks of determinants not annihilated by the term."""
    alpha_ops, beta_ops, _ = _split_term(term)
    masks = {}
    for key, sec in wfn.sectors.items():
        if term.is_nilpotent:
            masks[key] = np.zeros(sec.coeff.shape, dtype=bool)
            continue
        valid_a, _, _ = _channel_action(alpha_ops, sec.graph.alpha)
        valid_b, _, _ = _channel_action(beta_ops, sec.graph.beta)
        masks[key] = np.logical_and.outer(valid_a, valid_b)
    return masks


def term_diagonal_values(term: ExcitationTerm, wfn: Wavefunction) -> dict:
    """Per-sector eigenvalue arrays v with g|I> = v(I)|I> for diagonal terms."""
    if not term.is_diagonal:
        raise DomainError("term is not diagonal in the determinant basis")
    alpha_ops, beta_ops, reorder_sign = _split_term(term)
    values = {}
    for key, sec in wfn.sectors.items():
        valid_a, _, sign_a = _channel_action(alpha_ops, sec.graph.alpha)
        valid_b, _, sign_b = _channel_action(beta_ops, sec.graph.beta)
        cross = (-1) ** (sec.n_alpha * len(beta_ops))
        va = np.where(valid_a, sign_a, 0)
        vb = np.where(valid_b, sign_b, 0)
        values[key] = (term.coefficient * reorder_sign * cross) * np.outer(va, vb)
    return values


# -- one-body application ------------------------------------------------------

def _one_body_sector(h: np.ndarray, sec: Sector, out: np.ndarray,
                     spin: int | None = None) -> None:
    """out += sum_{ij} h[i, j] E_{ij} C for one sector.

    ``spin`` restricts to one channel; None applies the spin-summed form.
    """
    m = sec.key.m
    coeff = sec.coeff
    for i in range(m):
        for j in range(m):
            hij = h[i, j]
            if hij == 0:
                continue
            if spin in (None, ALPHA):
                src, tgt, par = sec.graph.alpha_map(i, j)
                if src.size:
                    out[tgt, :] += (hij * par)[:, None] * coeff[src, :]
            if spin in (None, BETA):
                src, tgt, par = sec.graph.beta_map(i, j)
                if src.size:
                    out[:, tgt] += (hij * par)[None, :] * coeff[:, src]


# -- Knowles--Handy kernel -----------------------------------------------------

def _build_d_block(sec: Sector, lo: int, hi: int) -> np.ndarray:
    """D[K_a, K_b - lo, j, l] = sum_I <K| E_{jl} |I> C_I over a beta block."""
    m = sec.key.m
    coeff = sec.coeff
    d = np.zeros((sec.graph.lena, hi - lo, m, m), dtype=np.complex128)
    for j in range(m):
        for l in range(m):
            src, tgt, par = sec.graph.alpha_map(j, l)
            if src.size:
                d[tgt, :, j, l] += par[:, None] * coeff[src, lo:hi]
            src, tgt, par = sec.graph.beta_map(j, l)
            if src.size:
                sel = (tgt >= lo) & (tgt < hi)
                if sel.any():
                    d[:, tgt[sel] - lo, j, l] += par[sel][None, :] * coeff[:, src[sel]]
    return d


def _scatter_t_block(sec: Sector, t4: np.ndarray, lo: int, hi: int,
                     out: np.ndarray) -> None:
    """out -= sum <I| E_{ik} |K> T[K, i, k] for a beta block of K."""
    m = sec.key.m
    for i in range(m):
        for k in range(m):
            src, tgt, par = sec.graph.alpha_map(i, k)
            if src.size:
                out[tgt, lo:hi] -= par[:, None] * t4[src, :, i, k]
            src, tgt, par = sec.graph.beta_map(i, k)
            if src.size:
                sel = (src >= lo) & (src < hi)
                if sel.any():
                    out[:, tgt[sel]] -= par[sel][None, :] * t4[:, src[sel] - lo, i, k]


def build_d_intermediate(wfn: Wavefunction, key: tuple | None = None) -> "IntermediateTensorD":
    """Spin-summed one-body transition tensor D[I_a, I_b, i, j] of a sector."""
    sec = _pick_sector(wfn, key)
    return IntermediateTensorD(_build_d_block(sec, 0, sec.graph.lenb))


def _kh_sector(h: RestrictedHamiltonian, sec: Sector,
               block_budget: int = KH_BLOCK_ELEMENT_BUDGET) -> np.ndarray:
    m = h.m
    out = h.e_core * sec.coeff.copy()
    heff = h.h1 + np.einsum("ikkl->il", h.v2)
    _one_body_sector(heff, sec, out)
    if not h.v2.any():
        return out
    v2 = np.ascontiguousarray(h.v2.transpose(0, 2, 1, 3).reshape(m * m, m * m))
    lena, lenb = sec.coeff.shape
    block = max(1, min(lenb, block_budget // max(1, lena * m * m)))
    for lo in range(0, lenb, block):
        hi = min(lenb, lo + block)
        d = _build_d_block(sec, lo, hi)
        t = d.reshape(lena * (hi - lo), m * m) @ v2.T
        _scatter_t_block(sec, t.reshape(lena, hi - lo, m, m), lo, hi, out)
    return out


def apply_dense_kh(h: RestrictedHamiltonian, wfn: Wavefunction,
                   block_budget: int = KH_BLOCK_ELEMENT_BUDGET) -> Wavefunction:
    """H_sf |wfn> by insertion of the identity in the n-electron space."""
    _check_orbital_match(h.m, wfn.m)
    out = wfn.empty_like()
    for key, sec in wfn.sectors.items():
        out.sectors[key].coeff[...] = _kh_sector(h, sec, block_budget)
    return out


# -- Harrison--Zarrabian kernel --------------------------------------------------

@lru_cache(maxsize=None)
def _pair_annihilation_map(m: int, n: int, k: int, l: int):
    """Entries (src, tgt, par) with a_k a_l |src> = par |tgt> inside one
    channel, mapping the (m, n) channel onto (m, n - 2)."""
    src_ch = get_channel(m, n)
    tgt_ch = get_channel(m, n - 2)
    s = src_ch.strings
    if k == l:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    valid = (((s >> k) & 1) == 1) & (((s >> l) & 1) == 1)
    src = np.nonzero(valid)[0].astype(np.int64)
    bits = s[src]
    # a_l acts first, then a_k on the string without l
    count = popcount(bits & mask_below(l)) + popcount(bits & mask_below(k))
    if l < k:
        count = count - 1
    par = parity_to_sign(count)
    tgt = tgt_ch.index[bits & ~(1 << k) & ~(1 << l)]
    return src, tgt, par


_HZ_PATTERNS = ((ALPHA, ALPHA), (ALPHA, BETA), (BETA, ALPHA), (BETA, BETA))


def _hz_pattern_dims(sec: Sector, sigma: int, rho: int):
    """Intermediate channel electron counts for annihilation pattern
    (sigma, rho); None when the pattern annihilates the sector."""
    na, nb = sec.n_alpha, sec.n_beta
    da = (sigma == ALPHA) + (rho == ALPHA)
    db = (sigma == BETA) + (rho == BETA)
    if na < da or nb < db:
        return None
    return na - da, nb - db


def _build_f_pattern(sec: Sector, sigma: int, rho: int) -> np.ndarray | None:
    """F[L_a, L_b, k, l] = sum_I <L| a_{k sigma} a_{l rho} |I> C_I."""
    dims = _hz_pattern_dims(sec, sigma, rho)
    if dims is None:
        return None
    m = sec.key.m
    na, nb = sec.n_alpha, sec.n_beta
    la_ch = get_channel(m, dims[0])
    lb_ch = get_channel(m, dims[1])
    f = np.zeros((la_ch.dim, lb_ch.dim, m, m), dtype=np.complex128)
    coeff = sec.coeff
    if sigma == ALPHA and rho == ALPHA:
        for k in range(m):
            for l in range(m):
                src, tgt, par = _pair_annihilation_map(m, na, k, l)
                if src.size:
                    f[tgt, :, k, l] += par[:, None] * coeff[src, :]
    elif sigma == BETA and rho == BETA:
        for k in range(m):
            for l in range(m):
                src, tgt, par = _pair_annihilation_map(m, nb, k, l)
                if src.size:
                    f[:, tgt, k, l] += par[None, :] * coeff[:, src]
    else:
        from .graph import single_annihilation_map
        if sigma == ALPHA:  # a_{k alpha} a_{l beta}: beta first, crosses n_a
            cross = (-1) ** na
            for k in range(m):
                sa, ta, pa = single_annihilation_map(m, na, k)
                if not sa.size:
                    continue
                for l in range(m):
                    sb, tb, pb = single_annihilation_map(m, nb, l)
                    if not sb.size:
                        continue
                    f[np.ix_(ta, tb) + (k, l)] += cross * np.outer(pa, pb) * \
                        coeff[np.ix_(sa, sb)]
        else:  # a_{k beta} a_{l alpha}: alpha first, beta crosses n_a - 1
            cross = (-1) ** (na - 1)
            for k in range(m):
                sb, tb, pb = single_annihilation_map(m, nb, k)
                if not sb.size:
                    continue
                for l in range(m):
                    sa, ta, pa = single_annihilation_map(m, na, l)
                    if not sa.size:
                        continue
                    f[np.ix_(ta, tb) + (k, l)] += cross * np.outer(pa, pb) * \
                        coeff[np.ix_(sa, sb)]
    return f


def _scatter_f_pattern(sec: Sector, ft: np.ndarray, sigma: int, rho: int,
                       out: np.ndarray) -> None:
    """out += sum_{ij, L} <I| a+_{i sigma} a+_{j rho} |L> Ft[L, i, j].

    The bra factor equals the parity of the adjoint pair annihilation
    a_{j rho} a_{i sigma} acting on |I>.
    """
    m = sec.key.m
    na, nb = sec.n_alpha, sec.n_beta
    if sigma == ALPHA and rho == ALPHA:
        for i in range(m):
            for j in range(m):
                src, tgt, par = _pair_annihilation_map(m, na, j, i)
                if src.size:
                    out[src, :] += par[:, None] * ft[tgt, :, i, j]
    elif sigma == BETA and rho == BETA:
        for i in range(m):
            for j in range(m):
                src, tgt, par = _pair_annihilation_map(m, nb, j, i)
                if src.size:
                    out[:, src] += par[None, :] * ft[:, tgt, i, j]
    else:
        from .graph import single_annihilation_map
        if sigma == ALPHA:  # adjoint is a_{j beta} a_{i alpha}: alpha first
            cross = (-1) ** (na - 1)
            for i in range(m):
                sa, ta, pa = single_annihilation_map(m, na, i)
                if not sa.size:
                    continue
                for j in range(m):
                    sb, tb, pb = single_annihilation_map(m, nb, j)
                    if not sb.size:
                        continue
                    out[np.ix_(sa, sb)] += cross * np.outer(pa, pb) * \
                        ft[np.ix_(ta, tb) + (i, j)]
        else:  # adjoint is a_{j alpha} a_{i beta}: beta first, crosses n_a
            cross = (-1) ** na
            for i in range(m):
                sb, tb, pb = single_annihilation_map(m, nb, i)
                if not sb.size:
                    continue
                for j in range(m):
                    sa, ta, pa = single_annihilation_map(m, na, j)
                    if not sa.size:
                        continue
                    out[np.ix_(sa, sb)] += cross * np.outer(pa, pb) * \
                        ft[np.ix_(ta, tb) + (i, j)]


def build_f_intermediate(wfn: Wavefunction, channel: tuple[int, int],
                         key: tuple | None = None) -> "IntermediateTensorF":
    """Pair-annihilation tensor F for one channel pattern (sigma, rho)."""
    sec = _pick_sector(wfn, key)
    if channel not in _HZ_PATTERNS:
        raise DomainError(f"channel pattern {channel} is not one of {_HZ_PATTERNS}")
    f = _build_f_pattern(sec, *channel)
    if f is None:
        raise DomainError(f"sector ({sec.key.n}, {sec.key.sz}) has too few "
                          f"electrons for pattern {channel}")
    return IntermediateTensorF(f, channel)


def _hz_sector(h: RestrictedHamiltonian, sec: Sector) -> np.ndarray:
    if sec.key.n < 2:
        raise DomainError(
            f"the n-2 insertion needs n >= 2, sector has n={sec.key.n}")
    m = h.m
    out = h.e_core * sec.coeff.copy()
    _one_body_sector(h.h1, sec, out)
    if not h.v2.any():
        return out
    vr = np.ascontiguousarray(h.v2.reshape(m * m, m * m))
    for sigma, rho in _HZ_PATTERNS:
        f = _build_f_pattern(sec, sigma, rho)
        if f is None:
            continue
        la, lb = f.shape[:2]
        ft = (f.reshape(la * lb, m * m) @ vr.T).reshape(la, lb, m, m)
        _scatter_f_pattern(sec, ft, sigma, rho, out)
    return out


def apply_dense_hz(h: RestrictedHamiltonian, wfn: Wavefunction) -> Wavefunction:
    """H_sf |wfn> by insertion of the identity in the (n-2)-electron space."""
    _check_orbital_match(h.m, wfn.m)
    out = wfn.empty_like()
    for key, sec in wfn.sectors.items():
        out.sectors[key].coeff[...] = _hz_sector(h, sec)
    return out


# -- dispatch -------------------------------------------------------------------

def select_dense_kernel(n: int, m: int,
                        threshold: float = DENSE_FILLING_THRESHOLD) -> str:
    """'hz' below the filling threshold (given n >= 2), else 'kh'."""
    if n >= 2 and n / (2 * m) < threshold:
        return "hz"
    return "kh"


def apply_dense(h: RestrictedHamiltonian, wfn: Wavefunction,
                force_path: str | None = None,
                filling_threshold: float = DENSE_FILLING_THRESHOLD) -> Wavefunction:
    """Filling-dispatched dense application; identical results either way."""
    _check_orbital_match(h.m, wfn.m)
    out = wfn.empty_like()
    for key, sec in wfn.sectors.items():
        path = force_path or select_dense_kernel(sec.key.n, h.m, filling_threshold)
        if path == "hz":
            out.sectors[key].coeff[...] = _hz_sector(h, sec)
        elif path == "kh":
            out.sectors[key].coeff[...] = _kh_sector(h, sec)
        else:
            raise DomainError(f"unknown dense path '{path}'")
    return out


# -- spin-orbital (SSO) kernel ----------------------------------------------------

def _build_d_channel(sec: Sector, spin: int) -> np.ndarray:
    """Single-channel transition tensor D[I_a, I_b, j, l] for one spin."""
    m = sec.key.m
    coeff = sec.coeff
    d = np.zeros((sec.graph.lena, sec.graph.lenb, m, m), dtype=np.complex128)
    for j in range(m):
        for l in range(m):
            src, tgt, par = sec.graph.excitation_map(j, l, spin)
            if not src.size:
                continue
            if spin == ALPHA:
                d[tgt, :, j, l] += par[:, None] * coeff[src, :]
            else:
                d[:, tgt, j, l] += par[None, :] * coeff[:, src]
    return d


def _scatter_t_channel(sec: Sector, t4: np.ndarray, spin: int,
                       out: np.ndarray) -> None:
    m = sec.key.m
    for i in range(m):
        for k in range(m):
            src, tgt, par = sec.graph.excitation_map(i, k, spin)
            if not src.size:
                continue
            if spin == ALPHA:
                out[tgt, :] -= par[:, None] * t4[src, :, i, k]
            else:
                out[:, tgt] -= par[None, :] * t4[:, src, i, k]


def apply_dense_sso(h: SSOHamiltonian, wfn: Wavefunction) -> Wavefunction:
    """Spin-conserving spin-orbital Hamiltonian application (KH-style,
    separate channel contractions, no spin summation in D)."""
    _check_orbital_match(h.m, wfn.m)
    m = h.m
    out = wfn.empty_like()
    for key, sec in wfn.sectors.items():
        res = out.sectors[key].coeff
        d = {spin: _build_d_channel(sec, spin) for spin in (ALPHA, BETA)}
        t = {ALPHA: np.zeros_like(d[ALPHA]), BETA: np.zeros_like(d[BETA])}
        lena, lenb = sec.coeff.shape
        for (sigma, rho), v in h.blocks():
            v2 = np.ascontiguousarray(v.transpose(0, 2, 1, 3).reshape(m * m, m * m))
            t[sigma] += (d[rho].reshape(lena * lenb, m * m) @ v2.T) \
                .reshape(lena, lenb, m, m)
            if sigma == rho:
                corr = np.einsum("ikkl->il", v)
                _one_body_sector(corr, sec, res, spin=sigma)
        for spin in (ALPHA, BETA):
            _scatter_t_channel(sec, t[spin], spin, res)
    return out


# -- Olsen-style channel-matrix kernel ---------------------------------------------

def _channel_matrices(sec: Sector, spin: int) -> np.ndarray:
    """Dense (m, m, dim, dim) stack of one-body channel matrices
    M[i, j][tgt, src] = <tgt| a+_i a_j |src>."""
    ch = sec.graph.alpha if spin == ALPHA else sec.graph.beta
    m = sec.key.m
    mats = np.zeros((m, m, ch.dim, ch.dim), dtype=np.complex128)
    for i in range(m):
        for j in range(m):
            src, tgt, par = ch.map(i, j)
            mats[i, j][tgt, src] = par
    return mats


def apply_dense_olsen(h: RestrictedHamiltonian, wfn: Wavefunction) -> Wavefunction:
    """Replacement-list kernel with no per-determinant intermediate tensor.

    Channel coupling matrices are assembled once per sector and contracted
    directly against the coefficient matrix, which skips the zero entries
    a determinant-space intermediate would carry.  Desk-scale only.
    """
    _check_orbital_match(h.m, wfn.m)
    m = h.m
    out = wfn.empty_like()
    corr = np.einsum("ikkl->il", h.v2)
    for key, sec in wfn.sectors.items():
        lena, lenb = sec.coeff.shape
        if 2 * m * m * (lena * lena + lenb * lenb) > OLSEN_ELEMENT_BUDGET:
            raise ResourceError(
                f"olsen kernel exceeds its element budget on sector {key}")
        res = out.sectors[key].coeff
        res += h.e_core * sec.coeff
        heff = h.h1 + corr
        _one_body_sector(heff, sec, res)
        if not h.v2.any():
            continue
        ma = _channel_matrices(sec, ALPHA)
        mb = _channel_matrices(sec, BETA)
        # same-spin double excitations
        a_op = -np.einsum("ijkl,ikab,jlbc->ac", h.v2, ma, ma, optimize=True)
        b_op = -np.einsum("ijkl,ikab,jlbc->ac", h.v2, mb, mb, optimize=True)
        res += a_op @ sec.coeff + sec.coeff @ b_op.T
        # mixed: alpha on rows against V-weighted beta on columns, both orders
        w_ab = np.einsum("ijkl,jlbc->ikbc", h.v2, mb, optimize=True)
        res -= np.einsum("ikar,rs,ikcs->ac", ma, sec.coeff, w_ab, optimize=True)
        w_ba = np.einsum("ijkl,ikbc->jlbc", h.v2, mb, optimize=True)
        res -= np.einsum("jlar,rs,jlcs->ac", ma, sec.coeff, w_ba, optimize=True)
    return out


# -- generic hamiltonian application ------------------------------------------------

def apply_diagonal_coulomb_op(dc: DiagonalCoulomb, wfn: Wavefunction) -> Wavefunction:
    """H_diag |wfn> with H_diag = sum_rs W[r,s] n_r n_s (spin-summed n)."""
    out = wfn.empty_like()
    for key, sec in wfn.sectors.items():
        occ_a = sec.graph.alpha.occupancy()
        occ_b = sec.graph.beta.occupancy()
        w = dc.w
        da = np.einsum("ar,rs,as->a", occ_a, w, occ_a)
        db = np.einsum("br,rs,bs->b", occ_b, w, occ_b)
        cross = occ_a @ (w + w.T) @ occ_b.T
        diag = da[:, None] + db[None, :] + cross
        out.sectors[key].coeff[...] = diag * sec.coeff
    return out


def apply_quadratic_op(q: QuadraticHamiltonian, wfn: Wavefunction) -> Wavefunction:
    _check_orbital_match(q.m, wfn.m)
    out = wfn.empty_like()
    for key, sec in wfn.sectors.items():
        _one_body_sector(q.a, sec, out.sectors[key].coeff)
    return out


def apply_sparse_op(sh: SparseHamiltonian, wfn: Wavefunction) -> Wavefunction:
    """Hermitized term-by-term application, sum_t (g_t + g_t+)|wfn>."""
    out = wfn.empty_like()
    for term in sh.hermitized_terms():
        out.ax_plus_y(1.0, apply_term(term, wfn))
    return out


def apply_hamiltonian(h, wfn: Wavefunction) -> Wavefunction:
    """Dispatch on the container type; the workhorse of series evolution."""
    if isinstance(h, DiagonalCoulomb):
        return apply_diagonal_coulomb_op(h, wfn)
    if isinstance(h, QuadraticHamiltonian):
        return apply_quadratic_op(h, wfn)
    if isinstance(h, RestrictedHamiltonian):
        return apply_dense(h, wfn)
    if isinstance(h, SSOHamiltonian):
        return apply_dense_sso(h, wfn)
    if isinstance(h, SparseHamiltonian):
        return apply_sparse_op(h, wfn)
    if isinstance(h, ExcitationTerm):
        return apply_sparse_op(SparseHamiltonian([h]), wfn)
    raise DomainError(f"cannot apply operator of type {type(h).__name__}")


# -- intermediates as public types ---------------------------------------------------

@dataclass
class IntermediateTensorD:
    """Spin-summed per-determinant one-body transition densities."""
    d: np.ndarray


@dataclass
class IntermediateTensorF:
    """Per-(n-2)-determinant pair annihilation amplitudes for one channel."""
    f: np.ndarray
    channel: tuple[int, int]


def _pick_sector(wfn: Wavefunction, key: tuple | None) -> Sector:
    if key is None:
        if len(wfn.sectors) != 1:
            raise DomainError("sector key required for multi-sector wavefunctions")
        return next(iter(wfn.sectors.values()))
    return wfn.sector(*key)


def _check_orbital_match(hm: int, wm: int) -> None:
    if hm != wm:
        raise DomainError(f"operator acts on {hm} orbitals, wavefunction has {wm}")
