from math import comb

import numpy as np
import pytest

from fermisim import lexical_index, strings_of
from fermisim.bitstrings import index_table, popcount
from fermisim.errors import DomainError


@pytest.mark.parametrize("bits,expected", [
    (0b0011, 0),
    (0b0110, 2),
    (0b1100, 5),
])
def test_lexical_index_examples(bits, expected):
    assert lexical_index(bits, 4, 2) == expected


@pytest.mark.parametrize("m,n", [(4, 2), (5, 3), (6, 1), (6, 6), (3, 0)])
def test_lexical_index_is_ascending_bijection(m, n):
    strings = strings_of(m, n)
    assert strings.size == comb(m, n)
    assert np.all(np.diff(strings) > 0) or strings.size == 1
    indices = [lexical_index(int(s), m, n) for s in strings]
    assert indices == list(range(comb(m, n)))


def test_lexical_index_rejects_wrong_popcount():
    with pytest.raises(DomainError):
        lexical_index(0b0111, 4, 2)
    with pytest.raises(DomainError):
        lexical_index(1 << 5, 4, 1)


def test_index_table_inverts_enumeration():
    table = index_table(5, 2)
    strings = strings_of(5, 2)
    assert np.array_equal(table[strings], np.arange(strings.size))
    off = np.setdiff1d(np.arange(32), strings)
    assert np.all(table[off] == -1)


def test_popcount_vectorized():
    xs = np.array([0, 1, 0b1011, (1 << 40) - 1], dtype=np.int64)
    assert popcount(xs).tolist() == [0, 1, 3, 40]
