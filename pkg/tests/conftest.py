"""Shared builders for random operators, states, and oracle references."""

from __future__ import annotations

import numpy as np
import pytest

from fermisim import (QuadraticHamiltonian, RestrictedHamiltonian,
                      SSOHamiltonian, Wavefunction, apply_dense)


def random_hermitian(m: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return (h + h.conj().T) / 2


def random_two_body(m: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(m,) * 4) + 1j * rng.normal(size=(m,) * 4)
    return (v + np.conj(np.transpose(v, (2, 3, 0, 1)))) / 2


def random_restricted(m: int, seed: int, with_v: bool = True,
                      e_core: float = 0.0) -> RestrictedHamiltonian:
    v = random_two_body(m, seed + 1) if with_v else None
    return RestrictedHamiltonian(random_hermitian(m, seed), v, e_core)


def random_sso(m: int, seed: int) -> SSOHamiltonian:
    return SSOHamiltonian(random_two_body(m, seed), random_two_body(m, seed + 1),
                          random_two_body(m, seed + 2), random_two_body(m, seed + 3))


def random_state(keys, seed: int) -> Wavefunction:
    return Wavefunction(keys).set_random(seed=seed)


def sector_matrix(h, n: int, sz: int, m: int) -> np.ndarray:
    """Dense sector-block Hamiltonian built column-by-column from apply."""
    basis = Wavefunction([(n, sz, m)])
    sec = basis.sectors[(n, sz)]
    dim = sec.coeff.size
    out = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        sec.coeff[...] = 0.0
        sec.coeff.flat[col] = 1.0
        out[:, col] = apply_dense(h, basis).sectors[(n, sz)].coeff.ravel()
    sec.coeff[...] = 0.0
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
