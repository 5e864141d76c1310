from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import families
from lpkernel import (
    LinearOperator,
    SpaceDescriptor,
    certify_kernel,
    check_dense_image,
    check_duality_chain,
    check_spanning_roundtrip,
    family_from_rows,
    image,
    kernel_basis,
    pre_annihilator,
    rank,
    row_space,
    span,
    subspace_equal,
)
from lpkernel.generate import random_family, random_operator
from lpkernel.verification import self_consistency

L3 = SpaceDescriptor.lp(2, range(3))


def basis(*rows, space=L3):
    return span(family_from_rows(space, list(rows)))


def test_kernel_basis_examples():
    assert kernel_basis(LinearOperator.identity(L3)).dim == 0
    zero = kernel_basis(LinearOperator.zero(L3, L3))
    assert [dict(v.items()) for v in zero.vectors()] == [{0: 1}, {1: 1}, {2: 1}]
    T = LinearOperator.from_dense(L3, SpaceDescriptor.lp(2, range(2)), [[1, 1, 0], [0, 0, 1]])
    assert [dict(v.items()) for v in kernel_basis(T).vectors()] == [{0: 1, 1: -1}]


def test_subspace_equal_examples():
    a = basis({0: 1}, {1: 1})
    assert subspace_equal(a, a)
    assert subspace_equal(basis({0: 1}), basis({0: 2}))
    assert not subspace_equal(basis({0: 1}), basis({1: 1}))
    with pytest.raises(ValueError):
        subspace_equal(basis({0: 1}), basis({0: 1}, space=SpaceDescriptor.lp(2, range(4))))


def test_span_is_reduced_echelon():
    B = basis({0: 2, 1: 2}, {0: 1, 1: 1, 2: 3})
    assert [dict(v.items()) for v in B.vectors()] == [{0: 1, 1: 1}, {2: 1}]


def test_duality_chain_examples():
    sp = SpaceDescriptor.lp(3, range(4))
    rep = check_duality_chain(LinearOperator.zero(sp, sp))
    assert rep["failures"] == []
    dims = {r["identity"]: r.get("dims") for r in rep["identities"]}
    assert dims["ker T = (T*[X*])_perp"] == [4, 4]
    rank_one = LinearOperator.from_dense(sp, sp, [[1, 2, 0, -1]] + [[0] * 4] * 3)
    rep = check_duality_chain(rank_one)
    assert rep["failures"] == [] and kernel_basis(rank_one).dim == 3


def test_duality_chain_requires_reflexive_model():
    c0 = SpaceDescriptor.c0(range(2))
    with pytest.raises(ValueError):
        check_duality_chain(LinearOperator.identity(c0))


@given(st.integers(0, 2 ** 32))
def test_duality_chain_random_12x12(seed):
    rng = np.random.default_rng(seed)
    sp = SpaceDescriptor.lp(2, range(12))
    T = random_operator(rng, sp, sp, rank=int(rng.integers(1, 13)))
    assert check_duality_chain(T)["failures"] == []


@given(st.integers(0, 2 ** 32))
def test_kernel_equals_preannihilator_of_row_space(seed):
    rng = np.random.default_rng(seed)
    sp = SpaceDescriptor.lp(F(3, 2), range(6))
    T = random_operator(rng, sp, SpaceDescriptor.lp(F(3, 2), range(5)))
    assert subspace_equal(kernel_basis(T), span(pre_annihilator(row_space(T).basis)))
    assert rank(T) + kernel_basis(T).dim == 6
    assert self_consistency(T)


@given(st.integers(0, 2 ** 32))
def test_float_and_oracle_subspace_equal_agree(seed):
    rng = np.random.default_rng(seed)
    sp = SpaceDescriptor.lp(2, range(6))
    A = random_family(rng, sp, int(rng.integers(1, 5)), 4, den_max=8)
    B = random_family(rng, sp, int(rng.integers(1, 5)), 4, den_max=8) if rng.random() < 0.5 else \
        family_from_rows(sp, [dict(v.positions()) for _, v in A][::-1])
    assert subspace_equal(span(A), span(B)) == subspace_equal(span(A.to_float()), span(B.to_float()))


def test_certify_kernel_reports_witness():
    T = LinearOperator.identity(L3)
    Y = family_from_rows(L3, [{1: 1}])
    rep = certify_kernel(T, Y)
    assert rep["failures"] and rep["failures"][0]["witness"] == {"1": "1"}


def test_image_and_row_space_dims():
    T = LinearOperator.from_dense(L3, L3, [[1, 1, 0], [0, 0, 0], [2, 2, 1]])
    assert image(T).dim == row_space(T).dim == rank(T) == 2
    assert row_space(T).ambient == L3.dual()


def test_roundtrip_examples():
    sp = SpaceDescriptor.lp(2, range(10))
    disjoint = family_from_rows(sp, [{0: 1}, {1: 1}, {2: 1}])
    rep = check_spanning_roundtrip(disjoint, trials=10)
    assert rep["failures"] == [] and rep["n_groups"] == 1 and rep["rank"] == 3
    chain = family_from_rows(sp, [{0: 1, 1: 1}, {1: 1, 2: 1}, {2: 1, 3: 1}])
    rep = check_spanning_roundtrip(chain, trials=10)
    assert rep["failures"] == [] and rep["n_groups"] == 3 and rep["rank"] == rep["dim_span"] == 3


@given(families(max_universe=12, max_vectors=6, max_support=4))
def test_dense_image_property(D):
    if len(D) > D.space.size:
        return
    rep = check_dense_image(D, trials=20)
    assert rep["failures"] == []
    assert rep["exact"] == (D.space.integer_p is not None or D.space.kind.value == "c0")


@given(families(max_universe=12, max_vectors=6, max_support=4))
def test_dense_image_float_mode(D):
    if len(D) > D.space.size:
        return
    assert check_dense_image(D.to_float(), trials=20)["failures"] == []


def test_roundtrip_batch():
    rng = np.random.default_rng(2024)
    sp = SpaceDescriptor.lp(2, range(10 ** 4))
    for _ in range(25):
        D = random_family(rng, sp, int(rng.integers(1, 200)), 4)
        assert check_spanning_roundtrip(D)["failures"] == []


def test_float_oracle_agreement_batch():
    """Entries in {-8..8}/{1..8}: float and exact equality verdicts coincide on 10^4 pairs."""
    rng = np.random.default_rng(99)
    sp = SpaceDescriptor.lp(2, range(5))
    agree_true = 0
    for i in range(10 ** 4):
        A = random_family(rng, sp, int(rng.integers(1, 4)), 3, den_max=8)
        if i % 2:
            # a re-mixed copy of A, so about half the pairs are equal
            rows = [dict(v.positions()) for _, v in A]
            scales = [F(int(rng.integers(1, 5)), int(rng.integers(1, 5))) for _ in rows]
            mixed = [{c: a * k for c, a in r.items()} for r, k in zip(rows[::-1], scales)]
            B = family_from_rows(sp, mixed)
        else:
            B = random_family(rng, sp, int(rng.integers(1, 4)), 3, den_max=8)
        exact_verdict = subspace_equal(span(A), span(B))
        assert exact_verdict == subspace_equal(span(A.to_float()), span(B.to_float()))
        agree_true += exact_verdict
    assert agree_true >= 4000
