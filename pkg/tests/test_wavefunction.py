import re
from math import comb

import numpy as np
import pytest

from fermisim import SectorKey, Wavefunction, create, inner_product
from fermisim.errors import DomainError, FormatError, ResourceError


def test_create_shapes():
    w = create([(4, 0, 6)])
    assert w.sector(4, 0).coeff.shape == (15, 15)
    w = create([(2, 0, 4), (2, -2, 4)])
    assert w.sector(2, 0).coeff.shape == (4, 4)
    assert w.sector(2, -2).coeff.shape == (1, 6)


def test_create_rejects_bad_sectors():
    with pytest.raises(DomainError):
        create([(3, 0, 4)])  # n + sz odd
    with pytest.raises(DomainError):
        create([(2, 4, 4)])  # |sz| > n
    with pytest.raises(DomainError):
        create([(2, 0, 4), (2, 0, 5)])  # mixed m
    with pytest.raises(DomainError):
        create([(10, 0, 4)])  # channel overfilled


def test_hartree_fock_occupies_lowest_orbitals():
    w = create([(4, 0, 4)]).set_hartree_fock()
    sec = w.sector(4, 0)
    assert sec.coeff[0, 0] == 1.0
    assert np.count_nonzero(sec.coeff) == 1
    assert int(sec.graph.alpha.strings[0]) == 0b0011


def test_hartree_fock_needs_single_sector():
    with pytest.raises(DomainError):
        create([(2, 0, 3), (2, 2, 3)]).set_hartree_fock()


def test_random_is_deterministic_and_normalized():
    a = create([(2, 0, 4), (2, 2, 4)]).set_random(seed=7)
    b = create([(2, 0, 4), (2, 2, 4)]).set_random(seed=7)
    for key in a.sectors:
        assert np.array_equal(a.sectors[key].coeff, b.sectors[key].coeff)
    assert abs(a.norm() - 1.0) < 1e-12
    c = create([(2, 0, 4), (2, 2, 4)]).set_random(seed=8)
    assert any(not np.array_equal(a.sectors[k].coeff, c.sectors[k].coeff)
               for k in a.sectors)


def test_explicit_initialization_and_errors():
    w = create([(2, 0, 3)]).set_explicit([(0b001, 0b010, 0.5j)])
    sec = w.sector(2, 0)
    assert sec.coeff[sec.graph.index_alpha(0b001),
                     sec.graph.index_beta(0b010)] == 0.5j
    with pytest.raises(DomainError):
        create([(2, 0, 3)]).set_explicit([(0b011, 0b001, 1.0)])  # (3, 1) absent
    with pytest.raises(DomainError):
        create([(2, 0, 3)]).set_explicit([(0b1000, 0b001, 1.0)])  # out of range


def test_inner_product_basics():
    w = create([(2, 0, 3)]).set_random(seed=3)
    assert abs(inner_product(w, w) - 1.0) < 1e-12
    a = create([(2, 0, 3)]).set_hartree_fock()
    b = create([(2, 2, 3)]).set_hartree_fock()
    assert inner_product(a, b) == 0  # disjoint sectors
    u = create([(2, 0, 3)]).set_random(seed=4)
    assert abs(inner_product(w, u) - np.conj(inner_product(u, w))) < 1e-15
    with pytest.raises(DomainError):
        inner_product(w, create([(2, 0, 4)]))


def test_to_dense_hartree_fock_position():
    d = create([(2, 0, 2)]).set_hartree_fock().to_dense()
    assert d[3] == 1.0
    assert np.count_nonzero(d) == 1


def test_to_dense_zero_state():
    assert not np.any(create([(2, 0, 2)]).to_dense())


def test_dense_round_trip_all_n2_sectors():
    w = create([(2, 0, 3), (2, 2, 3), (2, -2, 3)]).set_random(seed=11)
    back = Wavefunction.from_dense(w.to_dense(), 1e-12)
    for key, sec in w.sectors.items():
        assert np.allclose(back.sectors[key].coeff, sec.coeff, atol=1e-13)


def test_dense_round_trip_403():
    w = create([(4, 0, 3)]).set_random(seed=5)
    back = Wavefunction.from_dense(w.to_dense(), 1e-12)
    assert np.allclose(back.sector(4, 0).coeff, w.sector(4, 0).coeff, atol=1e-12)


def test_from_dense_unit_vector_is_hartree_fock():
    v = np.zeros(16)
    v[3] = 1.0
    w = Wavefunction.from_dense(v)
    assert list(w.sectors) == [(2, 0)]
    assert w.sector(2, 0).coeff[0, 0] == 1.0


def test_from_dense_zero_vector():
    w = Wavefunction.from_dense(np.zeros(16))
    assert w.norm() == 0.0


def test_from_dense_rejects_bad_length():
    with pytest.raises(FormatError):
        Wavefunction.from_dense(np.zeros(8))


def test_dense_preserves_inner_products():
    for m in (2, 3, 4):
        keys = [(2, 0, m), (1, 1, m), (3, -1, m)]
        a = create(keys).set_random(seed=m)
        b = create(keys).set_random(seed=m + 50)
        lhs = inner_product(a, b)
        rhs = np.vdot(a.to_dense(), b.to_dense())
        assert abs(lhs - rhs) < 1e-13


def test_dense_cap_guard():
    w = create([(2, 0, 8)])
    with pytest.raises(ResourceError):
        w.to_dense()
    # override allows it in principle; use a smaller case to stay quick
    create([(2, 0, 5)]).to_dense(orbital_cap=5)


def test_sector_memory_counts():
    # m=8 at half filling, sz=0: 70 x 70 = 4900 stored amplitudes vs 4^8
    w = create([(8, 0, 8)])
    sec = w.sector(8, 0)
    assert sec.coeff.size == comb(8, 4) ** 2 == 4900
    assert 4 ** 8 == 65536
    assert abs(4900 / 65536 - 0.0748) < 5e-4


def test_save_load_round_trip(tmp_path):
    w = create([(2, 0, 3), (3, 1, 3)]).set_random(seed=9)
    path = tmp_path / "state.fqew"
    w.save(path)
    back = Wavefunction.load(path)
    for key, sec in w.sectors.items():
        assert np.array_equal(back.sectors[key].coeff, sec.coeff)
    assert inner_product(w, back) == inner_product(w, w)
    assert abs(inner_product(w, back) - 1.0) < 1e-12


def test_load_rejects_truncation(tmp_path):
    w = create([(2, 0, 3)]).set_random(seed=2)
    path = tmp_path / "state.fqew"
    w.save(path)
    data = path.read_bytes()
    truncated = tmp_path / "cut.fqew"
    truncated.write_bytes(data[:len(data) - 7])
    with pytest.raises(FormatError):
        Wavefunction.load(truncated)


def test_load_rejects_bad_magic_and_version(tmp_path):
    path = tmp_path / "bad.fqew"
    path.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(FormatError):
        Wavefunction.load(path)
    w = create([(2, 0, 3)])
    good = tmp_path / "good.fqew"
    w.save(good)
    data = bytearray(good.read_bytes())
    data[4] = 99  # version byte
    bad_version = tmp_path / "v99.fqew"
    bad_version.write_bytes(bytes(data))
    with pytest.raises(FormatError, match="99"):
        Wavefunction.load(bad_version)


def test_print_format():
    text = create([(2, 0, 2)]).set_hartree_fock().print_wfn()
    lines = text.splitlines()
    assert lines[0] == "Sector N = 2 : S_z = 0"
    assert lines[1] == "a'01'b'01' (1+0j)"


def test_print_zero_state_headers_only():
    text = create([(2, 0, 4), (2, -2, 4)]).print_wfn()
    assert text.splitlines() == ["Sector N = 2 : S_z = -2",
                                 "Sector N = 2 : S_z = 0"]


def test_print_threshold_hides_small_amplitudes():
    w = create([(2, 0, 2)]).set_explicit([(0b01, 0b01, 0.9), (0b10, 0b10, 0.1)])
    text = w.print_wfn(threshold=0.5)
    assert "a'01'b'01'" in text
    assert "a'10'b'10'" not in text


def test_print_parse_round_trip():
    w = create([(2, 0, 3), (2, 2, 3)]).set_random(seed=17)
    pattern = re.compile(r"a'([01]+)'b'([01]+)' \((.+)\)")
    assignments = []
    for line in w.print_wfn(threshold=0.0).splitlines():
        match = pattern.match(line)
        if match:
            abits, bbits, amp = match.groups()
            assignments.append((int(abits, 2), int(bbits, 2), complex(amp)))
    back = create([(2, 0, 3), (2, 2, 3)]).set_explicit(assignments)
    for key, sec in w.sectors.items():
        assert np.allclose(back.sectors[key].coeff, sec.coeff, atol=1e-15)


def test_sector_key_tuple():
    key = SectorKey(2, 0, 4)
    assert (key.n, key.sz, key.m) == (2, 0, 4)
