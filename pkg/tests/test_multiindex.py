import math

import pytest
from hypothesis import given, strategies as st

from gbspe.multiindex import (add, count_sigma, degree, enumerate_degree,
                              format_index, multiindex_factorial, parse_index)


def test_enumeration_order_is_lexicographic_ascending():
    assert enumerate_degree(2, 2) == ((0, 2), (1, 1), (2, 0))
    assert enumerate_degree(3, 2) == (
        (0, 0, 2), (0, 1, 1), (0, 2, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0))


@given(st.integers(1, 5), st.integers(0, 6))
def test_enumeration_count_matches_stars_and_bars(n, d):
    patterns = enumerate_degree(n, d)
    assert len(patterns) == math.comb(d + n - 1, n - 1)
    assert len(set(patterns)) == len(patterns)
    assert all(degree(p) == d and len(p) == n for p in patterns)
    assert list(patterns) == sorted(patterns)


def test_count_sigma_values():
    assert count_sigma(6, 2) == 126
    assert count_sigma(1, 3) == 1
    assert count_sigma(3, 2) == 15


def test_factorial():
    assert multiindex_factorial(()) == 1
    assert multiindex_factorial((0, 0)) == 1
    assert multiindex_factorial((3, 1, 2)) == 12


def test_add_and_length_mismatch():
    assert add((1, 0), (0, 2)) == (1, 2)
    with pytest.raises(ValueError):
        add((1,), (1, 2))


def test_format_parse_roundtrip():
    idx = (0, 3, 1)
    assert parse_index(format_index(idx)) == idx
    with pytest.raises(ValueError):
        parse_index("1,-2")
    with pytest.raises(ValueError):
        parse_index("a,b")
