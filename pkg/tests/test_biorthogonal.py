from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given

from conftest import families
from lpkernel import (
    SpaceDescriptor,
    SparseVector,
    build_incidence,
    certify,
    coordinate_system,
    family_from_rows,
    incidence_count,
    markushevich,
    unit_vector,
)
from lpkernel import exact

L2 = SpaceDescriptor.lp(2, range(2))
L3 = SpaceDescriptor.lp(2, range(3))


def funcs(sys):
    return [dict(f.items()) for _, f in sys.functionals]


def test_coordinate_subspace():
    Y = family_from_rows(L3, [{0: 1}, {1: 1}])
    sys = markushevich(Y)
    assert [dict(v.items()) for _, v in sys.vectors] == [{0: 1}, {1: 1}]
    assert funcs(sys) == [{0: 1}, {1: 1}]


def test_two_by_two_example():
    Y = family_from_rows(L2, [{0: 1}, {0: 1, 1: 1}])
    sys = markushevich(Y)
    assert funcs(sys) == [{0: 1, 1: -1}, {1: 1}]
    assert sys.evaluation_matrix() == [[1, 0], [0, 1]]
    assert sys.functionals.space == L2.dual()


def test_zero_subspace_rejected():
    with pytest.raises(ValueError):
        markushevich(family_from_rows(L3, []))


def test_dependent_members_are_skipped():
    Y = family_from_rows(L3, [{0: 1, 1: 1}, {0: 2, 1: 2}, {2: 1}])
    sys = markushevich(Y)
    assert sys.vectors.ids.tolist() == [0, 2]
    assert certify(sys, Y)["ok"]


def test_incidence_count_examples():
    sys = coordinate_system(L3)
    assert incidence_count(sys, unit_vector(2, L3.dual())) == (1, [2])
    assert incidence_count(sys, SparseVector(L3.dual())).count == 0
    sys = markushevich(family_from_rows(L2, [{0: 1}, {0: 1, 1: 1}]))
    assert incidence_count(sys, unit_vector(0, L2.dual())) == (2, [0, 1])


def test_float_example():
    Y = family_from_rows(L2, [{0: 1}, {0: 1, 1: 1}]).to_float()
    sys = markushevich(Y)
    assert np.allclose(np.asarray(sys.evaluation_matrix()), np.eye(2), atol=1e-12)


@given(families(max_universe=8, max_vectors=7, max_support=5))
def test_biorthogonality_exact(Y):
    dim = exact.rank(Y.rows())
    if dim == 0:
        return
    sys = markushevich(Y)
    k = len(sys)
    assert k == dim
    assert sys.evaluation_matrix() == [[int(i == j) for j in range(k)] for i in range(k)]
    rep = certify(sys, Y)
    assert rep["ok"] and rep["max_deviation"] == 0


@given(families(max_universe=8, max_vectors=7, max_support=5))
def test_biorthogonality_float(Y):
    dim = exact.rank(Y.rows())
    if dim == 0:
        return
    sys = markushevich(Y.to_float())
    assert len(sys) == dim
    assert certify(sys, Y.to_float(), tol=1e-10)["ok"]


@given(families(max_universe=8, max_vectors=7, max_support=5))
def test_coordinate_functionals_reproduce_incidence(Y):
    """Witnesses of e*_g against the basis vectors equal the incidence lists."""
    if exact.rank(Y.rows()) == 0:
        return
    sys = markushevich(Y)
    inc = build_incidence(sys.vectors).per_coordinate
    for g in Y.space.universe:
        count, witnesses = incidence_count(sys, unit_vector(g, Y.space.dual()))
        assert tuple(witnesses) == inc.get(g, ())
        assert count == len(witnesses)


def test_certify_flags_broken_system():
    Y = family_from_rows(L2, [{0: 1}, {0: 1, 1: 1}])
    sys = markushevich(Y)
    from lpkernel.biorthogonal import BiorthogonalSystem

    broken = BiorthogonalSystem(sys.vectors, family_from_rows(L2.dual(), [{0: 1}, {1: 1}]))
    rep = certify(broken, Y)
    assert not rep["biorthogonal"] and rep["max_deviation"] == 1 and not rep["ok"]
