from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpkernel import exact


def _dense_rank(matrix):
    """Plain Gauss-Jordan over Fractions, independent of the integer echelon."""
    m = [[F(v) for v in row] for row in matrix]
    r = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c] / m[r][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
    return r


def _rows(matrix):
    return [{c: F(v) for c, v in enumerate(row) if v != 0} for row in matrix]


matrices = st.integers(1, 6).flatmap(
    lambda cols: st.lists(st.lists(st.integers(-5, 5), min_size=cols, max_size=cols), min_size=0, max_size=6))


def test_primitive_normalises_sign_and_gcd():
    assert exact.primitive({0: -4, 2: 6}) == {0: 2, 2: -3}


def test_rref_example():
    red, piv = exact.rref(_rows([[1, 1, 0], [2, 2, 1]]))
    assert piv == [0, 2]
    assert red == [{0: 1, 1: 1}, {2: 1}]


def test_nullspace_example():
    # null space of [1 1 0; 0 0 1] is spanned by (1, -1, 0)
    assert exact.nullspace(_rows([[1, 1, 0], [0, 0, 1]]), range(3)) == [{0: F(-1), 1: F(1)}]


def test_inverse_example():
    assert exact.inverse([[1, 0], [1, 1]]) == [[1, 0], [-1, 1]]


def test_inverse_singular():
    with pytest.raises(ValueError):
        exact.inverse([[1, 2], [2, 4]])


@given(matrices)
def test_rank_matches_dense_elimination(m):
    assert exact.rank(_rows(m)) == _dense_rank(m)


@given(matrices)
def test_rank_nullity(m):
    cols = len(m[0]) if m else 3
    rows = _rows(m)
    assert exact.rank(rows) + len(exact.nullspace(rows, range(cols))) == cols


@given(matrices)
def test_nullspace_vectors_are_annihilated(m):
    cols = len(m[0]) if m else 3
    for v in exact.nullspace(_rows(m), range(cols)):
        for row in m:
            assert sum(F(row[c]) * x for c, x in v.items()) == 0


@given(st.integers(1, 5).flatmap(lambda n: st.lists(
    st.lists(st.integers(-4, 4), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_inverse_is_inverse(m):
    if _dense_rank(m) < len(m):
        return
    inv = exact.inverse(m)
    n = len(m)
    prod = [[sum(F(m[i][k]) * inv[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    assert prod == [[int(i == j) for j in range(n)] for i in range(n)]
