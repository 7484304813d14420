"""Oracle-equivalence suite: every sector operation at small m is pushed
through the dense conversion and compared against the brute-force
Jordan-Wigner realization.

This is both the `verify` CLI command and the backbone of the acceptance
tests.  Series paths are held to 1e-10, everything else to 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import oracle
from .apply import (apply_dense, apply_dense_hz, apply_dense_kh,
                    apply_dense_olsen, apply_dense_sso, apply_term)
from .errors import ResourceError
from .evolve import (SeriesControl, SpectralWindow, evolve_chebyshev,
                     evolve_diagonal_coulomb, evolve_excitation,
                     evolve_quadratic, evolve_sparse, evolve_taylor)
from .graph import ALPHA, BETA, get_fci_graph, _split_counts
from .operators import (DiagonalCoulomb, ExcitationTerm, LadderOp,
                        QuadraticHamiltonian, RestrictedHamiltonian,
                        SSOHamiltonian, SparseHamiltonian)
from .rdm import compute_rdm, expectation, hole_rdm, two_body_gradient
from .wavefunction import Wavefunction

EXACT_TOL = 1e-12
SERIES_TOL = 1e-10
VERIFY_ORBITAL_CAP = 4


@dataclass
class PropertyResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: max residual {self.residual:.3e} "
                f"(tolerance {self.tolerance:.0e})")


def sector_keys_for(m: int, max_n: int = 4):
    keys = []
    for n in range(0, min(max_n, 2 * m) + 1):
        for sz in range(-n, n + 1, 2):
            try:
                _split_counts(n, sz, m)
            except Exception:
                continue
            keys.append((n, sz))
    return keys


def _random_restricted(m: int, rng) -> RestrictedHamiltonian:
    h1 = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    h1 = (h1 + h1.conj().T) / 2
    v = rng.normal(size=(m,) * 4) + 1j * rng.normal(size=(m,) * 4)
    v = (v + np.conj(np.transpose(v, (2, 3, 0, 1)))) / 2
    return RestrictedHamiltonian(h1, v, e_core=float(rng.normal()))


def _random_sso(m: int, rng) -> SSOHamiltonian:
    def block():
        t = rng.normal(size=(m,) * 4) + 1j * rng.normal(size=(m,) * 4)
        return (t + np.conj(np.transpose(t, (2, 3, 0, 1)))) / 2
    return SSOHamiltonian(block(), block(), block(), block())


def _random_state(m: int, key, rng) -> Wavefunction:
    wfn = Wavefunction([(key[0], key[1], m)])
    sec = wfn.sectors[key]
    shape = sec.coeff.shape
    sec.coeff[...] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return wfn.normalize()


def _residual(wfn: Wavefunction, dense_ref: np.ndarray) -> float:
    return float(np.max(np.abs(wfn.to_dense() - dense_ref)))


def run_verification(m: int, seed: int = 0, progress=None) -> list[PropertyResult]:
    """Run every oracle-equivalence property at the given size."""
    if m > VERIFY_ORBITAL_CAP:
        raise ResourceError(
            f"verification is desk-scale only (m <= {VERIFY_ORBITAL_CAP}, got {m})")
    rng = np.random.default_rng(seed)
    keys = sector_keys_for(m)
    results: list[PropertyResult] = []

    def record(name: str, residual: float, tol: float) -> None:
        res = PropertyResult(name, float(residual), tol)
        results.append(res)
        if progress is not None:
            progress(res)

    record("graph_excitation_maps", _check_graph_maps(m, keys), EXACT_TOL)
    record("dense_roundtrip", _check_roundtrip(m, keys, rng), EXACT_TOL)
    record("apply_term", _check_apply_term(m, keys, rng), EXACT_TOL)

    rham = _random_restricted(m, rng)
    sso = _random_sso(m, rng)
    h_dense = oracle.jw_matrix(rham, m).matrix
    sso_dense = oracle.jw_matrix(sso, m).matrix

    kh = hz = ss = ol = disp = 0.0
    for key in keys:
        wfn = _random_state(m, key, rng)
        ref = h_dense @ wfn.to_dense()
        kh = max(kh, _residual(apply_dense_kh(rham, wfn), ref))
        if key[0] >= 2:
            hz = max(hz, _residual(apply_dense_hz(rham, wfn), ref))
        ss = max(ss, _residual(apply_dense_sso(sso, wfn), sso_dense @ wfn.to_dense()))
        ol = max(ol, _residual(apply_dense_olsen(rham, wfn), ref))
        disp = max(disp, _residual(apply_dense(rham, wfn), ref))
    record("apply_dense_kh", kh, EXACT_TOL)
    record("apply_dense_hz", hz, EXACT_TOL)
    record("apply_dense_sso", ss, EXACT_TOL)
    record("apply_dense_olsen", ol, EXACT_TOL)
    record("apply_dense_dispatch", disp, EXACT_TOL)

    record("evolve_excitation", _check_evolve_excitation(m, keys, rng), EXACT_TOL)
    record("evolve_diagonal_coulomb", _check_evolve_diagonal(m, keys, rng), EXACT_TOL)

    taylor = cheb = sparse = quad = 0.0
    evals = np.linalg.eigvalsh(h_dense)
    window = SpectralWindow(float(evals.min()), float(evals.max()))
    ctrl = SeriesControl(threshold=1e-14, max_terms=128)
    t = 0.17
    for key in keys:
        wfn = _random_state(m, key, rng)
        dense = wfn.to_dense()
        ref = oracle.oracle_evolve(t, oracle.DenseOperator(h_dense, m), dense)
        taylor = max(taylor, _residual(evolve_taylor(t, rham, ctrl, wfn), ref))
        cheb = max(cheb, _residual(evolve_chebyshev(t, rham, window, ctrl, wfn), ref))
    record("evolve_taylor", taylor, SERIES_TOL)
    record("evolve_chebyshev", cheb, SERIES_TOL)

    terms = [ExcitationTerm(0.4 - 0.3j, (LadderOp(0, ALPHA, True), LadderOp(min(1, m - 1), ALPHA, False))),
             ExcitationTerm(0.2 + 0.1j, (LadderOp(0, BETA, True), LadderOp(0, BETA, False)))]
    if m >= 2:
        terms.append(ExcitationTerm(
            0.5, (LadderOp(1, ALPHA, True), LadderOp(1, BETA, True),
                  LadderOp(0, ALPHA, False), LadderOp(0, BETA, False))))
    sh = SparseHamiltonian(terms)
    sh_dense = oracle.jw_matrix(sh, m)
    for key in keys:
        wfn = _random_state(m, key, rng)
        ref = oracle.oracle_evolve(t, sh_dense, wfn.to_dense())
        sparse = max(sparse, _residual(
            evolve_sparse(t, sh, ctrl, wfn), ref))
    record("evolve_sparse", sparse, SERIES_TOL)

    a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q = QuadraticHamiltonian((a + a.conj().T) / 2)
    q_dense = oracle.jw_matrix(q, m)
    for key in keys:
        wfn = _random_state(m, key, rng)
        ref = oracle.oracle_evolve(0.9, q_dense, wfn.to_dense())
        quad = max(quad, _residual(evolve_quadratic(0.9, q, wfn), ref))
    record("evolve_quadratic", quad, EXACT_TOL)

    record("rdm_spin_summed", _check_rdm_ss(m, keys, rng), EXACT_TOL)
    record("rdm_spin_orbital", _check_rdm_so(m, keys, rng), EXACT_TOL)
    record("hole_rdm", _check_hole(m, keys, rng), EXACT_TOL)
    record("expectation", _check_expectation(m, keys, rng), EXACT_TOL)
    record("two_body_gradient", _check_gradient(m, rng, rham, h_dense), SERIES_TOL)
    return results


# -- individual property checks --------------------------------------------------

def _check_graph_maps(m: int, keys) -> float:
    """Channel excitation maps against the dense operator, entrywise.

    A channel is probed with the other channel empty, where the sector
    determinant equals the channel string and carries no reorder parity;
    the combined-parity cases are covered by the apply_term check.
    """
    from .graph import get_channel
    worst = 0.0
    counts = sorted({c for n, sz in keys for c in _split_counts(n, sz, m)})
    for spin in (ALPHA, BETA):
        for n_ch in counts:
            channel = get_channel(m, n_ch)
            shift = spin  # dense mode of orbital p in this channel is 2p + spin
            dense_idx = np.zeros(channel.dim, dtype=np.int64)
            for p in range(m):
                dense_idx |= ((channel.strings >> p) & 1) << (2 * p + shift)
            for i in range(m):
                for j in range(m):
                    src, tgt, par = channel.map(i, j)
                    built = np.zeros((channel.dim, channel.dim))
                    built[tgt, src] = par
                    term = ExcitationTerm(1.0, (LadderOp(i, spin, True),
                                                LadderOp(j, spin, False)))
                    full = oracle.jw_matrix(term, m).matrix
                    ref = full[np.ix_(dense_idx, dense_idx)]
                    worst = max(worst, float(np.max(np.abs(built - ref))))
    return worst


def _check_roundtrip(m: int, keys, rng) -> float:
    wfn = Wavefunction([(n, sz, m) for n, sz in keys])
    wfn.set_random(seed=int(rng.integers(2 ** 31)))
    back = Wavefunction.from_dense(wfn.to_dense(), thresh=0.0)
    worst = 0.0
    for key, sec in wfn.sectors.items():
        other = back.sectors[key].coeff if key in back.sectors else 0
        worst = max(worst, float(np.max(np.abs(sec.coeff - other))))
    return worst


def _sample_terms(m: int, rng):
    terms = []
    modes = 2 * m
    for _ in range(6):
        n_ops = int(rng.integers(1, 5))
        ops = tuple(LadderOp.from_mode(int(rng.integers(modes)), bool(rng.integers(2)))
                    for _ in range(n_ops))
        coeff = complex(rng.normal(), rng.normal())
        terms.append(ExcitationTerm(coeff, ops))
    return terms


def _check_apply_term(m: int, keys, rng) -> float:
    wfn = Wavefunction([(n, sz, m) for n, sz in keys])
    wfn.set_random(seed=int(rng.integers(2 ** 31)))
    dense = wfn.to_dense()
    worst = 0.0
    for term in _sample_terms(m, rng):
        ref = oracle.jw_matrix(term, m).matrix @ dense
        got = apply_term(term, wfn, missing_sector="drop").to_dense()
        # drop semantics: ignore amplitudes outside the stored sectors
        kept = Wavefunction.from_dense(ref, thresh=0.0)
        ref_kept = np.zeros_like(ref)
        for key in kept.sectors:
            if key in wfn.sectors:
                part = Wavefunction([(key[0], key[1], m)])
                part.sectors[key].coeff[...] = kept.sectors[key].coeff
                ref_kept += part.to_dense()
        worst = max(worst, float(np.max(np.abs(got - ref_kept))))
    # exact single excitations on each sector
    for n, sz in keys:
        state = _random_state(m, (n, sz), rng)
        sd = state.to_dense()
        for spin in (ALPHA, BETA):
            for i in range(m):
                for j in range(m):
                    term = ExcitationTerm(1.0, (LadderOp(i, spin, True),
                                                LadderOp(j, spin, False)))
                    ref = oracle.jw_matrix(term, m).matrix @ sd
                    got = apply_term(term, state).to_dense()
                    worst = max(worst, float(np.max(np.abs(got - ref))))
    return worst


def _check_evolve_excitation(m: int, keys, rng) -> float:
    worst = 0.0
    candidates = [
        ExcitationTerm(0.7 + 0.4j, (LadderOp(0, ALPHA, True),
                                    LadderOp(min(1, m - 1), ALPHA, False))),
        ExcitationTerm(0.3, (LadderOp(0, ALPHA, True), LadderOp(0, ALPHA, False))),
    ]
    if m >= 2:
        candidates.append(ExcitationTerm(
            0.5 - 0.2j, (LadderOp(0, ALPHA, True), LadderOp(1, BETA, True),
                         LadderOp(1, ALPHA, False), LadderOp(0, BETA, False))))
        candidates.append(ExcitationTerm(  # hybrid with a repeated index
            0.9j, (LadderOp(1, ALPHA, True), LadderOp(0, BETA, True),
                   LadderOp(1, ALPHA, False), LadderOp(1, BETA, False))))
    for key in keys:
        wfn = _random_state(m, key, rng)
        dense = wfn.to_dense()
        for term in candidates:
            if not term.conserves_sector():
                continue
            mat = oracle.jw_matrix(term, m).matrix
            herm = oracle.DenseOperator(mat + mat.conj().T, m)
            for eps in (0.1, 1.0):
                ref = oracle.oracle_evolve(eps, herm, dense)
                got = evolve_excitation(eps, term, wfn).to_dense()
                worst = max(worst, float(np.max(np.abs(got - ref))))
    return worst


def _check_evolve_diagonal(m: int, keys, rng) -> float:
    w = rng.normal(size=(m, m))
    dc = DiagonalCoulomb((w + w.T) / 2)
    dc_dense = oracle.jw_matrix(dc, m)
    worst = 0.0
    for key in keys:
        wfn = _random_state(m, key, rng)
        ref = oracle.oracle_evolve(0.6, dc_dense, wfn.to_dense())
        got = evolve_diagonal_coulomb(0.6, dc, wfn).to_dense()
        worst = max(worst, float(np.max(np.abs(got - ref))))
    return worst


def _ladder_stack(vec: np.ndarray, m: int, order: int, create: bool,
                  leading_first: bool) -> np.ndarray:
    """Stack of sequential ladder applications, reusing partial products.

    With leading_first, row (p_1..p_k) holds a_{p_k} ... a_{p_1} |vec>
    (creation operators instead when ``create``); otherwise the ops apply
    in reversed index order, a_{p_1} ... a_{p_k} |vec>.
    """
    modes = 2 * m
    mats = [oracle.creation(q, m) if create else oracle.annihilation(q, m)
            for q in range(modes)]
    stack = vec[None, :].astype(np.complex128)
    for _ in range(order):
        nxt = np.empty((modes * stack.shape[0], vec.size), dtype=np.complex128)
        for q in range(modes):
            block = (mats[q] @ stack.T).T
            if leading_first:
                # new index varies slowest relative to previous ones
                nxt.reshape(modes, stack.shape[0], -1)[q] = block
            else:
                nxt.reshape(stack.shape[0], modes, -1)[:, q] = block
        stack = nxt
    return stack


def _oracle_rdm_so(wfn: Wavefunction, order: int, hole: bool = False) -> np.ndarray:
    """Particle: Gamma[p..., q...] = <v| a+_{p1}..a+_{pk} a_{q1}..a_{qk} |v>;
    hole swaps every creation and annihilation.  One bra/ket stack each."""
    m = wfn.m
    vec = wfn.to_dense()
    modes = 2 * m
    # bra rows: (a+_{p1}..a+_{pk})^dag v = a_{pk}..a_{p1} v, p1 applied first,
    # so iteration order matches index order (new index fastest)
    bra = _ladder_stack(vec, m, order, create=hole, leading_first=False)
    # ket rows: a_{q1}..a_{qk} v with q_k applied first (new index slowest)
    ket = _ladder_stack(vec, m, order, create=hole, leading_first=True)
    g = np.conj(bra) @ ket.T
    return g.reshape((modes,) * (2 * order))


def _oracle_rdm_ss(wfn: Wavefunction, order: int, hole: bool = False) -> np.ndarray:
    """Spin-summed reduction of the spin-orbital oracle tensor: pair t's
    creation and annihilation share one summed spin label."""
    m = wfn.m
    so = _oracle_rdm_so(wfn, order, hole=hole)
    so = so.reshape((m, 2) * (2 * order))
    letters = "abcdefgh"
    spins = "stuv"
    lhs = "".join(letters[t] + spins[t] for t in range(order))
    lhs += "".join(letters[order + t] + spins[t] for t in range(order))
    return np.einsum(f"{lhs}->{letters[:2 * order]}", so)


def _check_rdm_ss(m: int, keys, rng) -> float:
    worst = 0.0
    for key in keys:
        wfn = _random_state(m, key, rng)
        for order in (1, 2, 3):
            got = compute_rdm(wfn, order).data
            worst = max(worst, float(np.max(np.abs(got - _oracle_rdm_ss(wfn, order)))))
        if key[0] >= 2:
            both = compute_rdm(wfn, 2, force_path="kh").data - \
                compute_rdm(wfn, 2, force_path="hz").data
            worst = max(worst, float(np.max(np.abs(both))))
    return worst


def _check_rdm_so(m: int, keys, rng) -> float:
    worst = 0.0
    for key in keys:
        wfn = _random_state(m, key, rng)
        for order in (1, 2, 3):
            got = compute_rdm(wfn, order, "spin_orbital").data
            worst = max(worst, float(np.max(np.abs(got - _oracle_rdm_so(wfn, order)))))
    return worst


def _check_hole(m: int, keys, rng) -> float:
    worst = 0.0
    for key in keys:
        wfn = _random_state(m, key, rng)
        for order in (1, 2):
            got = hole_rdm(wfn, order, "spin_summed").data
            ref = _oracle_rdm_ss(wfn, order, hole=True)
            worst = max(worst, float(np.max(np.abs(got - ref))))
            got = hole_rdm(wfn, order, "spin_orbital").data
            ref = _oracle_rdm_so(wfn, order, hole=True)
            worst = max(worst, float(np.max(np.abs(got - ref))))
    return worst


def _check_expectation(m: int, keys, rng) -> float:
    worst = 0.0
    for key in keys:
        wfn = _random_state(m, key, rng)
        dense = wfn.to_dense()
        for term in _sample_terms(m, rng):
            got = expectation(wfn, SparseHamiltonian([term]))
            ref = oracle.oracle_term_expectation(term, dense, m)
            worst = max(worst, abs(got - ref))
    return worst


def _check_gradient(m: int, rng, rham, h_dense) -> float:
    key = (2, 0) if m >= 1 else (0, 0)
    wfn = _random_state(m, key, rng)
    dense = wfn.to_dense()
    got = two_body_gradient(wfn, rham)
    worst = 0.0
    hv = h_dense @ dense
    for idx in product(range(2 * m), repeat=4):
        ops = [(idx[0], True), (idx[1], True), (idx[2], False), (idx[3], False)]
        gv = oracle.apply_ladder_sequence(ops, dense, m)
        ghv = oracle.apply_ladder_sequence(ops, hv, m)
        ref = np.vdot(hv, gv) - np.vdot(dense, ghv)
        worst = max(worst, abs(got[idx] - ref))
    return worst
