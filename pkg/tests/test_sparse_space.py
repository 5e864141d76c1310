from fractions import Fraction as F

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import families, rationals
from lpkernel import (
    FLOAT,
    Kind,
    SpaceDescriptor,
    SparseVector,
    VectorFamily,
    annihilator,
    dual_norm,
    family_from_rows,
    norm,
    norm_power,
    pairing,
    pre_annihilator,
    unit_vector,
)
from lpkernel.verification import span, subspace_equal


def test_norm_examples(abc):
    x = SparseVector(abc, {"a": 3, "b": 4})
    assert norm(x) == 5
    assert norm(x, SpaceDescriptor.lp(1, abc.universe)) == 7
    assert norm(x, SpaceDescriptor.c0(abc.universe)) == 4


def test_norm_non_integer_p_is_flagged_approximate():
    sp = SpaceDescriptor.lp(F(3, 2), range(2))
    value = norm(SparseVector(sp, {0: 1, 1: 1}))
    assert isinstance(value, mpmath.mpf)
    with mpmath.workdps(60):
        assert abs(value - mpmath.cbrt(4)) < mpmath.mpf(10) ** -45


def test_pairing_examples(abc):
    a, b = unit_vector("a", abc), unit_vector("b", abc)
    assert pairing(a, a) == 1
    assert pairing(a, b) == 0
    assert pairing(SparseVector(abc, {"a": 1, "b": 2}), SparseVector(abc, {"b": 3, "c": 5})) == 6


def test_pairing_universe_mismatch(abc):
    other = SpaceDescriptor.lp(2, ("a", "b"))
    with pytest.raises(ValueError):
        pairing(unit_vector("a", abc), unit_vector("a", other))


@pytest.mark.parametrize("space", [SpaceDescriptor.lp(1, "ab"), SpaceDescriptor.lp(F(3, 2), "ab"),
                                   SpaceDescriptor.lp(3, "ab"), SpaceDescriptor.c0("ab")])
def test_unit_vector_has_norm_one(space):
    assert norm(unit_vector("a", space)) == 1


def test_unit_vector_outside_universe(abc):
    with pytest.raises(KeyError):
        unit_vector("z", abc)


def test_canonical_form_drops_zeros(abc):
    assert SparseVector(abc, {"a": 1, "b": 0}) == SparseVector(abc, {"a": 1})
    assert SparseVector(abc, {"a": 1, "b": 0}).support == frozenset({"a"})


def test_space_invariants():
    with pytest.raises(ValueError):
        SpaceDescriptor.lp(F(1, 2), range(3))
    with pytest.raises(ValueError):
        SpaceDescriptor.lp(2, ("a", "a"))
    sp = SpaceDescriptor.lp(3, range(2))
    q = sp.conjugate_exponent()
    assert 1 / sp.p + 1 / q == 1 and q == F(3, 2)


def test_dual_models():
    u = range(4)
    assert SpaceDescriptor.lp(1, u).dual().kind is Kind.C0
    assert SpaceDescriptor.c0(u).dual() == SpaceDescriptor.lp(1, u)
    assert SpaceDescriptor.lp(3, u).dual().dual() == SpaceDescriptor.lp(3, u)


def test_header_round_trip():
    for sp in (SpaceDescriptor.lp(F(3, 2), range(5)), SpaceDescriptor.c0(("x", "y"))):
        assert SpaceDescriptor.from_header(sp.header()) == sp


def test_annihilator_example(l2_3):
    Y = family_from_rows(l2_3, [{0: 1, 1: 1}])
    Z = annihilator(Y)
    assert Z.space == l2_3.dual()
    assert [dict(v.items()) for _, v in Z] == [{0: 1, 1: -1}, {2: 1}]


def test_annihilator_of_full_and_empty(l2_3):
    full = family_from_rows(l2_3, [{0: 1}, {1: 1}, {2: 1}])
    assert len(annihilator(full)) == 0
    empty = family_from_rows(l2_3, [])
    assert [dict(v.items()) for _, v in annihilator(empty)] == [{0: 1}, {1: 1}, {2: 1}]


def test_pre_annihilator_examples():
    sp = SpaceDescriptor.lp(2, range(2))
    Z = family_from_rows(sp.dual(), [{0: 1}])
    assert [dict(v.items()) for _, v in pre_annihilator(Z)] == [{1: 1}]
    assert len(pre_annihilator(family_from_rows(sp.dual(), []))) == 2


def test_family_rejects_bad_ids(l2_3):
    with pytest.raises(ValueError):
        family_from_rows(l2_3, [{0: 1}, {1: 1}], ids=[3, 1])


def test_family_csr_views(l2_3):
    fam = family_from_rows(l2_3, [{0: 2, 2: 1}, {1: F(1, 3)}], ids=[4, 9])
    assert fam.vector(9) == SparseVector(l2_3, {1: F(1, 3)})
    assert fam.support_sizes().tolist() == [2, 1]
    assert fam.index_of(4) == 0
    assert np.allclose(fam.dense(), [[2, 0, 1], [0, 1 / 3, 0]])
    assert fam.to_float().mode == FLOAT


def _holder_holds(x, f, space):
    lhs = abs(pairing(x, f))
    nx, nf = norm(x), dual_norm(f, space)
    if isinstance(nx, F) and isinstance(nf, F):
        return lhs <= nx * nf
    with mpmath.workdps(60):
        return mpmath.mpf(lhs.numerator) / lhs.denominator <= nx * nf * (1 + mpmath.mpf(10) ** -40)


@given(families(max_universe=6, max_vectors=2), st.data())
def test_holder_inequality(fam, data):
    if len(fam) == 0:
        return
    space = fam.space
    x = fam[0]
    f_entries = data.draw(st.dictionaries(st.integers(0, space.size - 1), rationals(), max_size=space.size))
    f = SparseVector.from_positions(space.dual(), f_entries)
    assert _holder_holds(x, f, space)


@given(families(max_universe=8, max_vectors=8))
def test_rank_nullity_and_double_annihilator(Y):
    Z = annihilator(Y)
    assert span(Y).dim + len(Z) == Y.space.size
    back = pre_annihilator(Z)
    assert back.space == Y.space
    assert subspace_equal(span(back), span(Y))


@given(families(max_universe=8, max_vectors=8))
def test_dual_side_double_annihilator(Y):
    Z = Y.with_space(Y.space.dual())
    assert subspace_equal(span(annihilator(pre_annihilator(Z))), span(Z))


@given(families(max_universe=6, max_vectors=5))
def test_float_annihilator_matches_oracle(Y):
    Zf = annihilator(Y.to_float())
    Zo = annihilator(Y)
    assert len(Zf) == len(Zo)
    assert subspace_equal(span(Zf), span(Zo.to_float()))


def test_sparse_vector_arithmetic(abc):
    x = SparseVector(abc, {"a": 1, "b": 2})
    y = SparseVector(abc, {"b": -2, "c": 1})
    assert x + y == SparseVector(abc, {"a": 1, "c": 1})
    assert (x - x).support == frozenset()
    assert (x * F(1, 2))["b"] == 1
    assert norm_power(x) == 5


def test_holder_batch_ten_thousand_pairs():
    rng = np.random.default_rng(77)
    spaces = [SpaceDescriptor.lp(1, range(6)), SpaceDescriptor.lp(2, range(6)),
              SpaceDescriptor.lp(3, range(6)), SpaceDescriptor.c0(range(6))]
    for i in range(10 ** 4):
        space = spaces[i % 4]

        def draw(sp):
            k = int(rng.integers(1, 7))
            pos = rng.choice(6, k, replace=False)
            return SparseVector.from_positions(sp, {int(p): F(int(rng.integers(-9, 10)), int(rng.integers(1, 9)))
                                                    for p in pos})

        x, f = draw(space), draw(space.dual())
        assert _holder_holds(x, f, space), (x, f)
