from math import comb

import numpy as np
import pytest

from fermisim import FciGraphSet, get_fci_graph
from fermisim.bitstrings import lexical_index
from fermisim.errors import DomainError
from fermisim.graph import ALPHA, BETA


def test_graph_dimensions():
    graph = get_fci_graph(2, 1, 4)
    assert (graph.lena, graph.lenb) == (comb(4, 2), comb(4, 1)) == (6, 4)


def test_graph_rejects_overfilled_channel():
    with pytest.raises(DomainError):
        get_fci_graph(5, 0, 4)


def test_excitation_map_example_entry():
    # a+_2 a_0 on alpha string 0b0011 -> -|0b0110>: one electron crossed
    graph = get_fci_graph(2, 0, 4)
    src, tgt, par = graph.alpha_map(2, 0)
    s0 = lexical_index(0b0011, 4, 2)
    t0 = lexical_index(0b0110, 4, 2)
    hits = np.nonzero(src == s0)[0]
    assert hits.size == 1
    assert tgt[hits[0]] == t0
    assert par[hits[0]] == -1


def test_number_operator_map():
    graph = get_fci_graph(1, 0, 2)
    src, tgt, par = graph.alpha_map(0, 0)
    idx = lexical_index(0b01, 2, 1)
    assert src.tolist() == [idx]
    assert tgt.tolist() == [idx]
    assert par.tolist() == [1]


def test_map_entry_counts_and_diagonal_parity():
    # one entry per string with j occupied and (i == j or i free)
    graph = get_fci_graph(2, 2, 4)
    strings = graph.alpha.strings
    for i in range(4):
        for j in range(4):
            src, tgt, par = graph.alpha_map(i, j)
            occ_j = (strings >> j) & 1 == 1
            if i == j:
                assert src.size == np.count_nonzero(occ_j)
                assert np.all(par == 1)
            else:
                free_i = (strings >> i) & 1 == 0
                assert src.size == np.count_nonzero(occ_j & free_i)


def test_hermitian_pair_parity():
    # parity(i, j) * parity(j, i) == +1 on paired entries
    graph = get_fci_graph(2, 1, 4)
    for i in range(4):
        for j in range(4):
            src, tgt, par = graph.alpha_map(i, j)
            rsrc, rtgt, rpar = graph.alpha_map(j, i)
            forward = {(s, t): p for s, t, p in zip(src, tgt, par)}
            backward = {(t, s): p for s, t, p in zip(rsrc, rtgt, rpar)}
            for key, p in forward.items():
                assert forward[key] * backward[key] == 1


def test_graph_set_single_sector_has_no_links():
    gs = FciGraphSet([(2, 0, 2)])
    assert not gs._links


def test_graph_set_link_counts_exhaustive_m2():
    gs = FciGraphSet([(2, 0, 2), (1, 1, 2)])
    # create(p, alpha) maps (1,1)<-... (1, 1) has (na, nb) = (1, 0);
    # adding an alpha electron reaches (2, 2), not (2, 0), so the only
    # alpha links between these two sectors are annihilations from (2, 0)?
    # (2, 0) has (na, nb) = (1, 1): alpha change gives (0, 1) or (2, 1);
    # beta change gives (1, 0) = sector (1, 1): beta links exist.
    for p in range(2):
        src, tgt, par = gs.link((2, 0), (1, 1), p, BETA, "annihilate")
        # beta channel: from nb=1 strings with p occupied
        assert src.size == 1
    assert not gs.has_link((2, 0), (1, 1), 0, ALPHA, "annihilate")


def test_graph_set_annihilate_is_transpose_of_create():
    gs = FciGraphSet([(2, 0, 3), (3, 1, 3), (1, -1, 3)])
    for p in range(3):
        csrc, ctgt, cpar = gs.link((2, 0), (3, 1), p, ALPHA, "create")
        asrc, atgt, apar = gs.link((3, 1), (2, 0), p, ALPHA, "annihilate")
        forward = {(s, t): p_ for s, t, p_ in zip(csrc, ctgt, cpar)}
        backward = {(t, s): p_ for s, t, p_ in zip(asrc, atgt, apar)}
        assert forward == backward


def test_graph_set_beta_links_carry_alpha_block_sign():
    # composing create(p, beta) then annihilate(p, beta) must reproduce the
    # beta number operator with +1 parity regardless of n_alpha
    gs = FciGraphSet([(3, 1, 3), (4, 0, 3)])
    for p in range(3):
        csrc, ctgt, cpar = gs.link((3, 1), (4, 0), p, BETA, "create")
        asrc, atgt, apar = gs.link((4, 0), (3, 1), p, BETA, "annihilate")
        create = {s: (t, pr) for s, t, pr in zip(csrc, ctgt, cpar)}
        annihilate = {s: (t, pr) for s, t, pr in zip(asrc, atgt, apar)}
        for s, (mid, pc) in create.items():
            back, pa = annihilate[mid]
            assert back == s
            assert pc * pa == 1


def test_graph_set_rejects_mixed_m():
    with pytest.raises(DomainError):
        FciGraphSet([(2, 0, 2), (2, 0, 3)])
