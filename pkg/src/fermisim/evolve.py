"""Time-evolution paths.

Exact routes: single excitation Hamiltonians (Euler-style resummation over
the nilpotent generator), diagonal number polynomials, diagonal Coulomb
phases, and quadratic Hamiltonians via a column-pivoted LU orbital
rotation.  Series routes: Taylor and Chebyshev expansions driven by any
operator with an application kernel, including term-wise sparse sums.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu as _scipy_lu
from scipy.linalg import solve_triangular
from scipy.special import jv as _bessel_j

from .apply import apply_hamiltonian, apply_term, term_diagonal_values, term_support_mask
from .errors import ConvergenceError, DomainError, NumericError
from .graph import ALPHA, BETA
from .operators import (DiagonalCoulomb, ExcitationTerm, QuadraticHamiltonian,
                        RestrictedHamiltonian, SSOHamiltonian, SparseHamiltonian,
                        classify)
from .wavefunction import Wavefunction

_worker_threads = 1
_PARALLEL_MIN_COLUMNS = 64


def set_worker_threads(n: int) -> None:
    """Worker count for the blocked evolution kernels.

    Blocks partition the output array disjointly, so results are bitwise
    identical for every thread count.
    """
    global _worker_threads
    if n < 1:
        raise DomainError("thread count must be positive")
    _worker_threads = int(n)


def get_worker_threads() -> int:
    return _worker_threads


def _run_blocked(total: int, fn) -> None:
    """fn(lo, hi) over a disjoint partition of range(total)."""
    if _worker_threads == 1 or total < _PARALLEL_MIN_COLUMNS:
        fn(0, total)
        return
    workers = min(_worker_threads, total)
    step = -(-total // workers)
    spans = [(lo, min(total, lo + step)) for lo in range(0, total, step)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda span: fn(*span), spans))


# -- series controls -----------------------------------------------------------

@dataclass
class SeriesControl:
    """Stopping rule for series propagation.

    The expansion stops once the contribution norm falls below
    ``threshold`` for two consecutive terms (guarding against isolated
    zeros of the Chebyshev coefficients); ``max_terms`` is a hard cap.
    """

    threshold: float | None = 1e-14
    max_terms: int | None = 64

    def __post_init__(self):
        if self.threshold is not None and self.threshold <= 0:
            raise DomainError("series threshold must be positive")
        if self.threshold is None and self.max_terms is None:
            raise DomainError("series control needs a threshold or a term cap")


@dataclass
class SpectralWindow:
    """Estimated eigenvalue bracket used to scale the Chebyshev operator."""

    e_min: float
    e_max: float
    w_prime: float = 0.9875

    def __post_init__(self):
        if not self.e_max > self.e_min:
            raise DomainError("window needs e_max > e_min")
        if not 0 < self.w_prime < 1:
            raise DomainError("w_prime must lie in (0, 1)")

    @property
    def delta_eps(self) -> float:
        return (self.e_max - self.e_min) / (2 * self.w_prime)

    @property
    def eps_shift(self) -> float:
        return -(self.e_max + self.e_min) / 2


def default_window(h) -> SpectralWindow:
    """Always-over-bracketing spectral window from the raw operator data.

    Gershgorin-style sums of absolute tensor entries; callers with sharper
    knowledge should pass their own window.
    """
    if isinstance(h, RestrictedHamiltonian):
        bound = 2 * np.abs(h.h1).sum() + 4 * np.abs(h.v2).sum() + abs(h.e_core)
    elif isinstance(h, SSOHamiltonian):
        bound = sum(np.abs(v).sum() for _, v in h.blocks())
    elif isinstance(h, DiagonalCoulomb):
        bound = 4 * np.abs(h.w).sum()
    elif isinstance(h, QuadraticHamiltonian):
        radii = np.abs(h.a).sum(axis=1) - np.abs(np.diag(h.a))
        lo = np.min(h.a.diagonal().real - radii)
        hi = np.max(h.a.diagonal().real + radii)
        bound = 2 * max(abs(lo), abs(hi)) * h.m
    elif isinstance(h, SparseHamiltonian):
        bound = sum(2 * abs(t.coefficient) for t in h.terms)
    elif isinstance(h, ExcitationTerm):
        bound = 2 * abs(h.coefficient)
    else:
        raise DomainError(f"no default window for {type(h).__name__}")
    bound = float(max(bound, 1e-12))
    return SpectralWindow(-bound, bound)


# -- exact excitation evolution ---------------------------------------------------

def evolve_excitation(epsilon: float, term: ExcitationTerm,
                      wfn: Wavefunction) -> Wavefunction:
    """exp(-i epsilon (g + g+)) |wfn> for a single excitation term.

    Diagonal terms receive per-determinant phases; otherwise the Taylor
    series resums exactly to a cosine/sine acting on the supports of g g+
    and g+ g, with sqrt(g g+) = |g| times a projector.  The term must
    conserve (n, sz).
    """
    if not term.conserves_sector():
        raise DomainError("excitation evolution requires an (n, sz) conserving term")
    out = wfn.copy()
    if term.coefficient == 0 or term.is_nilpotent:
        return out
    if term.is_diagonal:
        for key, values in term_diagonal_values(term, wfn).items():
            out.sectors[key].coeff *= np.exp(-1j * epsilon * 2 * values.real)
        return out
    mag = abs(term.coefficient)
    theta = epsilon * mag
    mask_dag = term_support_mask(term.adjoint(), wfn)   # support of g g+
    mask_g = term_support_mask(term, wfn)               # support of g+ g
    for key in out.sectors:
        overlap = mask_dag[key] & mask_g[key]
        if overlap.any():
            raise NumericError("projector supports overlap for a non-diagonal term")
        both = mask_dag[key] | mask_g[key]
        out.sectors[key].coeff += (np.cos(theta) - 1) * both * wfn.sectors[key].coeff
    scale = -1j * np.sin(theta) / mag
    out.ax_plus_y(scale, apply_term(term.adjoint(), wfn))
    out.ax_plus_y(scale, apply_term(term, wfn))
    return out


# -- diagonal Coulomb ---------------------------------------------------------------

def evolve_diagonal_coulomb(t: float, dc: DiagonalCoulomb,
                            wfn: Wavefunction) -> Wavefunction:
    """Per-determinant phases exp(-i t sum_rs W[r,s] n_r(I) n_s(I)) with
    spin-summed occupancies n_r(I) in {0, 1, 2}."""
    out = wfn.copy()
    w = dc.w
    for key, sec in out.sectors.items():
        occ_a = sec.graph.alpha.occupancy()
        occ_b = sec.graph.beta.occupancy()
        da = np.einsum("ar,rs,as->a", occ_a, w, occ_a)
        db = np.einsum("br,rs,bs->b", occ_b, w, occ_b)
        left = occ_a @ (w + w.T)
        coeff = sec.coeff

        def block(lo, hi):
            cross = left @ occ_b[lo:hi].T
            diag = da[:, None] + db[None, lo:hi] + cross
            coeff[:, lo:hi] *= np.exp(-1j * t * diag)

        _run_blocked(sec.graph.lenb, block)
    return out


# -- series propagation ----------------------------------------------------------

def evolve_taylor(t: float, h, ctrl: SeriesControl | None,
                  wfn: Wavefunction, info: dict | None = None) -> Wavefunction:
    """sum_n (-i t)^n / n! H^n |wfn> with the recursion psi_{n+1} = H psi_n."""
    ctrl = ctrl or SeriesControl()
    if t == 0:
        if info is not None:
            info["terms_used"] = 0
        return wfn.copy()
    out = wfn.copy()
    psi = wfn.copy()
    prefactor = 1.0  # |t|^n / n!
    phase = 1.0 + 0.0j  # (-i t)^n / n!
    below = 0
    cap = ctrl.max_terms if ctrl.max_terms is not None else 10 ** 9
    for n in range(1, cap + 1):
        psi = apply_hamiltonian(h, psi)
        prefactor *= abs(t) / n
        phase *= -1j * t / n
        out.ax_plus_y(phase, psi)
        if ctrl.threshold is not None:
            contribution = prefactor * psi.norm()
            below = below + 1 if contribution < ctrl.threshold else 0
            if below >= 2:
                if info is not None:
                    info["terms_used"] = n
                return out
    if ctrl.threshold is None:
        if info is not None:
            info["terms_used"] = cap
        return out
    raise ConvergenceError(
        f"taylor expansion did not reach threshold {ctrl.threshold} "
        f"within {cap} terms", terms_used=cap,
        last_norm=float(prefactor * psi.norm()))


def evolve_chebyshev(t: float, h, window: SpectralWindow,
                     ctrl: SeriesControl | None, wfn: Wavefunction,
                     info: dict | None = None) -> Wavefunction:
    """Chebyshev propagation of exp(-i H t) on the scaled operator
    H' = (H + eps_shift) / delta_eps, with ordinary Bessel coefficients
    2 J_n(delta_eps t) (-i)^n (halved at n = 0) and the recursion
    psi_{n+1} = 2 H' psi_n - psi_{n-1}."""
    ctrl = ctrl or SeriesControl()
    if t == 0:
        if info is not None:
            info["terms_used"] = 0
        return wfn.copy()
    x = window.delta_eps * t

    def scaled_apply(state):
        nxt = apply_hamiltonian(h, state)
        nxt.ax_plus_y(window.eps_shift, state)
        nxt.scale(1.0 / window.delta_eps)
        return nxt

    psi_prev = wfn.copy()
    out = wfn.copy().scale(float(_bessel_j(0, x)))
    psi_cur = scaled_apply(psi_prev)
    below = 0
    cap = ctrl.max_terms if ctrl.max_terms is not None else 10 ** 9
    n = 1
    while n <= cap:
        coef = 2.0 * float(_bessel_j(n, x)) * (-1j) ** n
        out.ax_plus_y(coef, psi_cur)
        if ctrl.threshold is not None:
            contribution = abs(coef) * psi_cur.norm()
            below = below + 1 if contribution < ctrl.threshold else 0
            if below >= 2:
                break
        nxt = scaled_apply(psi_cur).scale(2.0)
        nxt.ax_plus_y(-1.0, psi_prev)
        psi_prev, psi_cur = psi_cur, nxt
        n += 1
    else:
        if ctrl.threshold is not None:
            raise ConvergenceError(
                f"chebyshev expansion did not reach threshold {ctrl.threshold} "
                f"within {cap} terms", terms_used=cap,
                last_norm=float(psi_cur.norm()))
    out.scale(np.exp(1j * window.eps_shift * t))
    if info is not None:
        info["terms_used"] = min(n, cap)
    return out


def evolve_sparse(t: float, sh: SparseHamiltonian, ctrl: SeriesControl | None,
                  wfn: Wavefunction, method: str = "taylor",
                  window: SpectralWindow | None = None,
                  info: dict | None = None) -> Wavefunction:
    """Series propagation with the operator applied one term at a time."""
    if method == "taylor":
        return evolve_taylor(t, sh, ctrl, wfn, info)
    if method == "chebyshev":
        return evolve_chebyshev(t, sh, window or default_window(sh), ctrl, wfn, info)
    raise DomainError(f"unknown sparse evolution method '{method}'")


# -- quadratic Hamiltonians via column-pivoted LU -----------------------------------

@dataclass
class LuFactors:
    """X = L U P with unit-diagonal L; f stores U^{-1} - L - I.

    The single-sweep transform matrix is ``sweep`` = U^{-1} - L (equal to
    f + I): sweeping its columns k = 0..m-1 through one-column operators
    (1 + F_k) realizes the basis change exactly, which the oracle tests
    pin down.
    """

    l: np.ndarray
    u: np.ndarray
    p: np.ndarray
    f: np.ndarray

    @property
    def sweep(self) -> np.ndarray:
        return self.f + np.eye(self.f.shape[0])


def lu_column_pivot(x: np.ndarray) -> LuFactors:
    """Column-pivoted LU via row-pivoted LU of the transpose."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DomainError(f"matrix must be square, got shape {x.shape}")
    pb, lb, ub = _scipy_lu(x.T)
    d = np.diag(ub).copy()
    if np.min(np.abs(d)) < 1e-12 * max(1.0, np.max(np.abs(d))):
        raise NumericError("singular pivot in column-pivoted LU")
    lmat = ub.T @ np.diag(1.0 / d)
    umat = np.diag(d) @ lb.T
    pmat = pb.T
    uinv = solve_triangular(umat, np.eye(x.shape[0], dtype=np.complex128))
    f = uinv - lmat - np.eye(x.shape[0])
    return LuFactors(lmat, umat, pmat, f)


def apply_column_operator(f_col: np.ndarray, k: int, spin: int,
                          wfn: Wavefunction) -> Wavefunction:
    """(1 + sum_i F[i] a+_{i spin} a_{k spin}) |wfn> in one fused pass."""
    if k >= wfn.m:
        raise DomainError(f"column {k} out of range for m={wfn.m}")
    out = wfn.copy()
    for key, sec in wfn.sectors.items():
        _column_op_sector(sec.coeff, out.sectors[key].coeff, f_col, k, spin,
                          sec.graph)
    return out


def _column_op_sector(cur, dst, f_col, k, spin, graph):
    """dst = cur + F_k cur for one sector; cur and dst must not alias."""
    m = graph.m
    for i in range(m):
        val = f_col[i]
        if val == 0:
            continue
        src, tgt, par = graph.excitation_map(i, k, spin)
        if not src.size:
            continue
        if spin == ALPHA:
            def block(lo, hi, src=src, tgt=tgt, par=par, val=val):
                dst[tgt, lo:hi] += (val * par)[:, None] * cur[src, lo:hi]
            _run_blocked(graph.lenb, block)
        else:
            def block(lo, hi, src=src, tgt=tgt, par=par, val=val):
                dst[lo:hi][:, tgt] += (val * par)[None, :] * cur[lo:hi][:, src]
            _run_blocked(graph.lena, block)


def _sweep_transform(wfn: Wavefunction, sweep: np.ndarray) -> Wavefunction:
    """Apply the one-column operator sequence k = 0..m-1 for alpha, then
    beta, realizing the triangular basis change encoded by ``sweep``."""
    cur = wfn
    for spin in (ALPHA, BETA):
        for k in range(wfn.m):
            col = sweep[:, k]
            if not np.any(col != 0):
                continue
            nxt = cur.copy()
            for key, sec in cur.sectors.items():
                _column_op_sector(sec.coeff, nxt.sectors[key].coeff, col, k,
                                  spin, sec.graph)
            cur = nxt
    return cur if cur is not wfn else wfn.copy()


def evolve_quadratic(t: float, q: QuadraticHamiltonian,
                     wfn: Wavefunction) -> Wavefunction:
    """exp(-i t sum_ij A[i,j] E_ij)|wfn> by rotating into the eigenbasis of
    A with a column-pivoted LU sweep, phasing with the permuted eigenvalues,
    and rotating back with the conjugate-transposed factors."""
    if q.m != wfn.m:
        raise DomainError(f"operator acts on {q.m} orbitals, wavefunction has {wfn.m}")
    vals, x = np.linalg.eigh(q.a)
    factors = lu_column_pivot(x)
    cur = _sweep_transform(wfn, factors.sweep)

    a_perm = factors.p @ vals
    for key, sec in cur.sectors.items():
        da = sec.graph.alpha.occupancy() @ a_perm
        db = sec.graph.beta.occupancy() @ a_perm
        sec.coeff *= np.exp(-1j * t * (da[:, None] + db[None, :]))

    # back transform with (LU)^dagger = L' U'
    d = np.diag(factors.u)
    lback = factors.u.conj().T @ np.diag(1.0 / np.conj(d))
    uback = np.diag(np.conj(d)) @ factors.l.conj().T
    uback_inv = solve_triangular(uback, np.eye(q.m, dtype=np.complex128))
    return _sweep_transform(cur, uback_inv - lback)


# -- diagonal number polynomials and auto dispatch ------------------------------------

def evolve_diagonal_terms(t: float, sh: SparseHamiltonian,
                          wfn: Wavefunction) -> Wavefunction:
    """Product of exact per-term phases; valid because diagonal terms all
    commute."""
    out = wfn
    for term in sh.terms:
        out = evolve_excitation(t, term, out)
    return out


def evolve(t: float, h, wfn: Wavefunction, method: str = "auto",
           ctrl: SeriesControl | None = None,
           window: SpectralWindow | None = None,
           info: dict | None = None) -> Wavefunction:
    """Dispatch to the specialized route for the operator's structure.

    ``method`` forces a route: excitation | diagonal | quadratic | taylor |
    chebyshev.  The chosen route is reported through ``info``.
    """
    info = info if info is not None else {}
    kind = classify(h)
    if method == "auto":
        method = {
            "diagonal_coulomb": "diagonal",
            "diagonal_number_poly": "diagonal",
            "quadratic": "quadratic",
        }.get(kind)
        if method is None:
            if kind == "sparse" and isinstance(h, (ExcitationTerm, SparseHamiltonian)):
                n_terms = 1 if isinstance(h, ExcitationTerm) else len(h.terms)
                method = "excitation" if n_terms == 1 else "taylor"
            else:
                method = "taylor"
    info["method_used"] = method

    if method == "diagonal":
        if kind == "diagonal_coulomb":
            return evolve_diagonal_coulomb(t, h, wfn)
        if kind == "diagonal_number_poly":
            sh = h if isinstance(h, SparseHamiltonian) else SparseHamiltonian([h])
            return evolve_diagonal_terms(t, sh, wfn)
        raise DomainError(f"operator of kind '{kind}' has no diagonal evolution")
    if method == "quadratic":
        if not isinstance(h, QuadraticHamiltonian):
            raise DomainError("quadratic evolution needs a QuadraticHamiltonian")
        return evolve_quadratic(t, h, wfn)
    if method == "excitation":
        if isinstance(h, ExcitationTerm):
            return evolve_excitation(t, h, wfn)
        if isinstance(h, SparseHamiltonian) and len(h.terms) == 1:
            return evolve_excitation(t, h.terms[0], wfn)
        raise DomainError("excitation evolution needs a single excitation term")
    if method == "taylor":
        return evolve_taylor(t, h, ctrl, wfn, info)
    if method == "chebyshev":
        return evolve_chebyshev(t, h, window or default_window(h), ctrl, wfn, info)
    raise DomainError(f"unknown evolution method '{method}'")
