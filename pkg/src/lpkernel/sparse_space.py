"""Finite models of l_p(Gamma) and c_0(Gamma): spaces, sparse vectors, families.

Scalars come in two modes. ``"oracle"`` values are :class:`fractions.Fraction`
and every identity is decided exactly; ``"float"`` values are binary64 and
are meant to be cross-checked against the oracle on small instances.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

import mpmath
import numpy as np

from . import exact

ORACLE = "oracle"
FLOAT = "float"

# significant digits used when a norm cannot be represented exactly
APPROX_DPS = 50

CoordinateLabel = Hashable


class Kind(str, enum.Enum):
    LP = "lp"
    C0 = "c0"


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, tuple) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    raise TypeError(f"cannot read {value!r} as an exact rational")


def scalar_mode(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT
    return ORACLE


@dataclass(frozen=True)
class SpaceDescriptor:
    """Which sequence space, and its finite, ordered coordinate universe.

    ``universe`` is either a ``range`` of integer labels or a strictly
    increasing tuple of labels.
    """

    kind: Kind
    p: Fraction | None
    universe: range | tuple
    _index: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.LP:
            if self.p is None:
                raise ValueError("l_p space needs an exponent p")
            p = as_fraction(self.p)
            if p < 1:
                raise ValueError(f"p must be >= 1, got {p}")
            object.__setattr__(self, "p", p)
        elif self.p is not None:
            raise ValueError("c0 space takes no exponent")
        uni = self.universe
        if isinstance(uni, int):
            uni = range(uni)
        if isinstance(uni, range):
            if uni.step != 1:
                raise ValueError("range universes must have step 1")
        else:
            uni = tuple(uni)
            if any(a >= b for a, b in zip(uni, uni[1:])):
                if len(set(uni)) != len(uni):
                    raise ValueError("universe contains duplicate labels")
                raise ValueError("universe labels must be given in increasing order")
            object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(uni)})
        object.__setattr__(self, "universe", uni)

    @classmethod
    def lp(cls, p, universe) -> "SpaceDescriptor":
        return cls(Kind.LP, as_fraction(p), universe)

    @classmethod
    def c0(cls, universe) -> "SpaceDescriptor":
        return cls(Kind.C0, None, universe)

    @property
    def size(self) -> int:
        return len(self.universe)

    def __contains__(self, label) -> bool:
        if self._index is not None:
            return label in self._index
        return isinstance(label, (int, np.integer)) and label in self.universe

    def position(self, label) -> int:
        if self._index is not None:
            try:
                return self._index[label]
            except KeyError:
                raise KeyError(f"label {label!r} is not in the universe") from None
        if not (isinstance(label, (int, np.integer)) and label in self.universe):
            raise KeyError(f"label {label!r} is not in the universe")
        return int(label) - self.universe.start

    def label(self, pos: int):
        return self.universe[pos]

    @property
    def integer_p(self) -> int | None:
        if self.kind is Kind.LP and self.p.denominator == 1:
            return self.p.numerator
        return None

    def conjugate_exponent(self) -> Fraction | None:
        """p* with 1/p + 1/p* = 1; None when p = 1 (dual is sup-normed)."""
        if self.kind is not Kind.LP or self.p == 1:
            return None
        return self.p / (self.p - 1)

    def dual(self) -> "SpaceDescriptor":
        """Dual model on the same universe: l_p <-> l_p*, l_1 <-> c0."""
        if self.kind is Kind.C0:
            return SpaceDescriptor(Kind.LP, Fraction(1), self.universe)
        if self.p == 1:
            return SpaceDescriptor(Kind.C0, None, self.universe)
        return SpaceDescriptor(Kind.LP, self.conjugate_exponent(), self.universe)

    def same_universe(self, other: "SpaceDescriptor") -> bool:
        return self.universe == other.universe

    def header(self) -> dict:
        out: dict = {"space": self.kind.value}
        if self.kind is Kind.LP:
            out["p"] = [self.p.numerator, self.p.denominator]
        out["universe_size"] = self.size
        if not isinstance(self.universe, range) or self.universe.start != 0:
            out["labels"] = list(self.universe)
        return out

    @classmethod
    def from_header(cls, header: Mapping) -> "SpaceDescriptor":
        kind = Kind(header["space"])
        universe = header.get("labels")
        universe = tuple(universe) if universe is not None else range(int(header["universe_size"]))
        if kind is Kind.LP:
            p = header.get("p", [2, 1])
            return cls.lp(as_fraction(tuple(p)) if isinstance(p, list) else p, universe)
        return cls.c0(universe)

    def __str__(self):
        if self.kind is Kind.C0:
            return f"c0[{self.size}]"
        return f"l_{self.p}[{self.size}]"


class SparseVector:
    """Finitely supported vector; immutable, with no stored zeros."""

    __slots__ = ("space", "_entries", "_mode")

    def __init__(self, space: SpaceDescriptor, entries: Mapping | Iterable = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        raw = []
        mode = ORACLE
        for lab, val in items:
            if lab not in space:
                raise KeyError(f"label {lab!r} is not in the universe of {space}")
            if scalar_mode(val) == FLOAT:
                mode = FLOAT
            raw.append((lab, val))
        if mode == FLOAT:
            vals = [(lab, float(v)) for lab, v in raw]
        else:
            vals = [(lab, as_fraction(v)) for lab, v in raw]
        clean: dict = {}
        for lab, v in vals:
            clean[lab] = clean[lab] + v if lab in clean else v
        ordered = sorted(((space.position(lab), lab, v) for lab, v in clean.items() if v != 0))
        self.space = space
        self._entries = {lab: v for _, lab, v in ordered}
        self._mode = mode

    @classmethod
    def from_positions(cls, space: SpaceDescriptor, entries: Mapping[int, object]) -> "SparseVector":
        return cls(space, {space.label(pos): v for pos, v in entries.items()})

    @property
    def mode(self) -> str:
        return self._mode

    @property
    def entries(self) -> dict:
        return dict(self._entries)

    def items(self):
        return self._entries.items()

    def positions(self) -> dict[int, object]:
        pos = self.space.position
        return {pos(lab): v for lab, v in self._entries.items()}

    @property
    def support(self) -> frozenset:
        return frozenset(self._entries)

    def __getitem__(self, label):
        if label not in self.space:
            raise KeyError(label)
        return self._entries.get(label, 0.0 if self._mode == FLOAT else Fraction(0))

    def __len__(self):
        return len(self._entries)

    def __bool__(self):
        return bool(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self.space == other.space and self._entries == other._entries

    def __hash__(self):
        return hash((self.space, tuple(self._entries.items())))

    def __repr__(self):
        body = ", ".join(f"{lab!r}: {v}" for lab, v in self._entries.items())
        return f"SparseVector({{{body}}})"

    def _check(self, other: "SparseVector"):
        if not self.space.same_universe(other.space):
            raise ValueError("vectors live on different coordinate universes")

    def __add__(self, other: "SparseVector") -> "SparseVector":
        self._check(other)
        out = dict(self._entries)
        for lab, v in other._entries.items():
            out[lab] = out.get(lab, 0) + v
        return SparseVector(self.space, out)

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self + (-other)

    def __neg__(self) -> "SparseVector":
        return SparseVector(self.space, {lab: -v for lab, v in self._entries.items()})

    def __mul__(self, scalar) -> "SparseVector":
        if scalar_mode(scalar) == ORACLE and self._mode == ORACLE:
            scalar = as_fraction(scalar)
        return SparseVector(self.space, {lab: v * scalar for lab, v in self._entries.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "SparseVector":
        if scalar_mode(scalar) == ORACLE and self._mode == ORACLE:
            return self * (1 / as_fraction(scalar))
        return self * (1.0 / float(scalar))

    def to_float(self) -> "SparseVector":
        return SparseVector(self.space, {lab: float(v) for lab, v in self._entries.items()})

    def in_space(self, space: SpaceDescriptor) -> "SparseVector":
        """Same coordinates viewed in another model over the same universe."""
        if not self.space.same_universe(space):
            raise ValueError("vectors live on different coordinate universes")
        out = SparseVector.__new__(SparseVector)
        out.space = space
        out._entries = dict(self._entries)
        out._mode = self._mode
        return out


def unit_vector(label, space: SpaceDescriptor, mode: str = ORACLE) -> SparseVector:
    if label not in space:
        raise KeyError(f"label {label!r} is not in the universe of {space}")
    return SparseVector(space, {label: 1.0 if mode == FLOAT else Fraction(1)})


def _iroot(n: int, k: int) -> int | None:
    """Exact integer k-th root of n >= 0, or None."""
    if n < 2:
        return n
    r = int(round(float(mpmath.root(mpmath.mpf(n), k)))) if n.bit_length() < 1000 else None
    if r is None:
        lo, hi = 0, 1 << (n.bit_length() // k + 1)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if mid ** k <= n:
                lo = mid
            else:
                hi = mid - 1
        r = lo
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def exact_root(q: Fraction, k: int) -> Fraction | None:
    """The rational k-th root of q >= 0 when it exists."""
    num, den = _iroot(q.numerator, k), _iroot(q.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def norm_power(x: SparseVector, space: SpaceDescriptor | None = None):
    """sum |x(g)|^p for l_p (max |x(g)| for c0).

    Exact :class:`Fraction` in oracle mode when p is an integer or the space
    is c0; for non-integer p the oracle returns an ``mpmath.mpf`` with
    ``APPROX_DPS`` digits, and its type marks the value as approximate.
    """
    space = space or x.space
    vals = [abs(v) for v in x._entries.values()]
    if space.kind is Kind.C0:
        if not vals:
            return 0.0 if x.mode == FLOAT else Fraction(0)
        return max(vals)
    if x.mode == FLOAT:
        p = float(space.p)
        return float(sum(v ** p for v in vals))
    k = space.integer_p
    if k is not None:
        return sum((v ** k for v in vals), Fraction(0))
    with mpmath.workdps(APPROX_DPS):
        p = mpmath.mpf(space.p.numerator) / space.p.denominator
        return mpmath.fsum(mpmath.power(mpmath.mpf(v.numerator) / v.denominator, p) for v in vals)


def norm(x: SparseVector, space: SpaceDescriptor | None = None):
    """The l_p or sup norm of ``x``.

    Oracle mode returns a Fraction whenever the norm is rational and an
    ``mpmath.mpf`` (``APPROX_DPS`` digits) otherwise. Exact comparisons should
    use :func:`norm_power` instead.
    """
    space = space or x.space
    power = norm_power(x, space)
    if space.kind is Kind.C0 or space.p == 1:
        return power
    if x.mode == FLOAT:
        return float(power) ** (1.0 / float(space.p))
    if isinstance(power, Fraction):
        root = exact_root(power, space.integer_p)
        if root is not None:
            return root
        power = mpmath.mpf(power.numerator) / power.denominator
    with mpmath.workdps(APPROX_DPS):
        return mpmath.power(power, mpmath.mpf(space.p.denominator) / space.p.numerator)


def dual_norm(f: SparseVector, space: SpaceDescriptor):
    """Norm of the functional ``f`` acting on ``space``."""
    return norm(f, space.dual())


def pairing(x: SparseVector, f: SparseVector):
    """<x, f> = sum over the common support of x(g) f(g)."""
    if not x.space.same_universe(f.space):
        raise ValueError("pairing needs vectors over the same coordinate universe")
    if len(f) < len(x):
        x, f = f, x
    fe = f._entries
    total = 0.0 if FLOAT in (x.mode, f.mode) else Fraction(0)
    for lab, v in x._entries.items():
        w = fe.get(lab)
        if w is not None:
            total += v * w
    return total


class RationalArray:
    """Rationals stored as parallel int64 numerator/denominator arrays.

    Iterating or indexing with an int yields Fractions; slicing or fancy
    indexing yields another RationalArray.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        self.num = np.asarray(num, dtype=np.int64)
        self.den = np.ones_like(self.num) if den is None else np.asarray(den, dtype=np.int64)
        if self.num.shape != self.den.shape:
            raise ValueError("numerators and denominators differ in shape")
        if np.any(self.den <= 0):
            raise ValueError("denominators must be positive")

    def __len__(self):
        return len(self.num)

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return Fraction(int(self.num[key]), int(self.den[key]))
        return RationalArray(self.num[key], self.den[key])

    def __iter__(self):
        for a, b in zip(self.num.tolist(), self.den.tolist()):
            yield Fraction(a, b)

    def any_zero(self) -> bool:
        return bool(np.any(self.num == 0))

    def to_float(self) -> np.ndarray:
        return self.num / self.den


class VectorFamily:
    """Ordered family of sparse vectors with unique, increasing ids.

    Stored as CSR arrays over universe positions so that families with
    millions of members stay cheap; members are materialised on access.
    Oracle values are a list of Fractions, float values a float64 array.
    """

    def __init__(self, space: SpaceDescriptor, ids, indptr, positions, values, *, check: bool = True):
        self.space = space
        self.ids = np.asarray(ids, dtype=np.int64)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.positions = np.asarray(positions, dtype=np.int64)
        if isinstance(values, np.ndarray) and values.dtype.kind == "f":
            self.values = values.astype(np.float64, copy=False)
            self.mode = FLOAT
        elif isinstance(values, RationalArray):
            self.values = values
            self.mode = ORACLE
        else:
            self.values = [as_fraction(v) for v in values]
            self.mode = ORACLE
        if check:
            self._validate()

    def _validate(self):
        n = len(self.ids)
        if self.indptr.shape != (n + 1,) or self.indptr[0] != 0 or self.indptr[-1] != len(self.positions):
            raise ValueError("malformed indptr")
        if len(self.values) != len(self.positions):
            raise ValueError("positions and values differ in length")
        if n > 1 and np.any(np.diff(self.ids) <= 0):
            raise ValueError("vector ids must be unique and strictly increasing")
        if n and self.ids[0] < 0:
            raise ValueError("vector ids must be non-negative")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("malformed indptr")
        pos = self.positions
        if len(pos) and (pos.min() < 0 or pos.max() >= self.space.size):
            raise ValueError("coordinate outside the universe")
        if len(pos) > 1:
            inner = np.ones(len(pos) - 1, dtype=bool)
            starts = self.indptr[1:-1]
            inner[starts[(starts > 0) & (starts < len(pos))] - 1] = False
            if np.any(np.diff(pos)[inner] <= 0):
                raise ValueError("coordinates within a vector must be strictly increasing")
        if self.mode == FLOAT:
            if np.any(self.values == 0):
                raise ValueError("explicit zero stored in a sparse vector")
        elif isinstance(self.values, RationalArray):
            if self.values.any_zero():
                raise ValueError("explicit zero stored in a sparse vector")
        elif any(v == 0 for v in self.values):
            raise ValueError("explicit zero stored in a sparse vector")

    @classmethod
    def from_vectors(cls, vectors: Sequence[SparseVector], ids: Sequence[int] | None = None,
                     space: SpaceDescriptor | None = None) -> "VectorFamily":
        vectors = list(vectors)
        if space is None:
            if not vectors:
                raise ValueError("an empty family needs an explicit space")
            space = vectors[0].space
        if ids is None:
            ids = range(len(vectors))
        indptr = [0]
        positions: list[int] = []
        values: list = []
        float_mode = any(v.mode == FLOAT for v in vectors)
        for vec in vectors:
            if not vec.space.same_universe(space):
                raise ValueError("all members must share the family's universe")
            for pos, val in sorted(vec.positions().items()):
                positions.append(pos)
                values.append(float(val) if float_mode else val)
            indptr.append(len(positions))
        vals = np.asarray(values, dtype=np.float64) if float_mode else values
        return cls(space, list(ids), indptr, positions, vals)

    @classmethod
    def empty(cls, space: SpaceDescriptor, mode: str = ORACLE) -> "VectorFamily":
        vals = np.zeros(0) if mode == FLOAT else []
        return cls(space, [], [0], [], vals)

    def __len__(self):
        return len(self.ids)

    @property
    def nnz(self) -> int:
        return len(self.positions)

    def support_sizes(self) -> np.ndarray:
        return np.diff(self.indptr)

    def row_positions(self, i: int) -> dict[int, object]:
        a, b = int(self.indptr[i]), int(self.indptr[i + 1])
        vals = self.values[a:b]
        return dict(zip(self.positions[a:b].tolist(), vals.tolist() if self.mode == FLOAT else vals))

    def row_support(self, i: int) -> set:
        return set(self.positions[self.indptr[i]:self.indptr[i + 1]].tolist())

    def __getitem__(self, i: int) -> SparseVector:
        a, b = int(self.indptr[i]), int(self.indptr[i + 1])
        vals = self.values[a:b]
        if self.mode == FLOAT:
            vals = vals.tolist()
        elif isinstance(vals, RationalArray):
            vals = list(vals)
        lab = self.space.label
        vec = SparseVector.__new__(SparseVector)
        vec.space = self.space
        vec._entries = {lab(int(p)): v for p, v in zip(self.positions[a:b], vals)}
        vec._mode = self.mode
        return vec

    def __iter__(self) -> Iterator[tuple[int, SparseVector]]:
        for i in range(len(self)):
            yield int(self.ids[i]), self[i]

    @property
    def members(self) -> list[tuple[int, SparseVector]]:
        return list(self)

    def vectors(self) -> list[SparseVector]:
        return [self[i] for i in range(len(self))]

    def index_of(self, vector_id: int) -> int:
        i = int(np.searchsorted(self.ids, vector_id))
        if i >= len(self.ids) or self.ids[i] != vector_id:
            raise KeyError(f"no member with id {vector_id}")
        return i

    def vector(self, vector_id: int) -> SparseVector:
        return self[self.index_of(vector_id)]

    def rows(self) -> list[dict[int, object]]:
        """Members as position-keyed dicts (the elimination input format)."""
        return [self.row_positions(i) for i in range(len(self))]

    def take(self, indices) -> "VectorFamily":
        """Sub-family of the given row indices (kept in increasing order)."""
        idx = np.asarray(sorted(int(i) for i in indices), dtype=np.int64)
        sizes = np.diff(self.indptr)[idx] if len(idx) else np.zeros(0, dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        if len(idx):
            gather = np.concatenate([np.arange(self.indptr[i], self.indptr[i + 1]) for i in idx]).astype(np.int64)
        else:
            gather = np.zeros(0, dtype=np.int64)
        if self.mode == FLOAT or isinstance(self.values, RationalArray):
            vals = self.values[gather]
        else:
            vals = [self.values[j] for j in gather]
        return VectorFamily(self.space, self.ids[idx], indptr, self.positions[gather], vals, check=False)

    def nonzero(self) -> "VectorFamily":
        keep = np.flatnonzero(np.diff(self.indptr) > 0)
        return self if len(keep) == len(self) else self.take(keep)

    def with_space(self, space: SpaceDescriptor) -> "VectorFamily":
        if not self.space.same_universe(space):
            raise ValueError("universe mismatch")
        return VectorFamily(space, self.ids, self.indptr, self.positions, self.values, check=False)

    def _float_values(self) -> np.ndarray:
        if self.mode == FLOAT:
            return self.values
        if isinstance(self.values, RationalArray):
            return self.values.to_float()
        return np.asarray([float(v) for v in self.values], dtype=np.float64)

    def to_float(self) -> "VectorFamily":
        vals = self._float_values()
        return VectorFamily(self.space, self.ids, self.indptr, self.positions, vals, check=False)

    def dense(self) -> np.ndarray:
        """Members as rows of a dense float array (small families only)."""
        out = np.zeros((len(self), self.space.size))
        rows = np.repeat(np.arange(len(self)), np.diff(self.indptr))
        out[rows, self.positions] = self._float_values()
        return out

    def __eq__(self, other):
        if not isinstance(other, VectorFamily):
            return NotImplemented
        return (self.space == other.space and np.array_equal(self.ids, other.ids)
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.positions, other.positions)
                and list(self.values) == list(other.values))

    def __repr__(self):
        return f"VectorFamily({len(self)} members over {self.space}, mode={self.mode})"


def family_from_rows(space: SpaceDescriptor, rows: Sequence[Mapping[int, object]], mode: str = ORACLE,
                     ids: Sequence[int] | None = None) -> VectorFamily:
    """Build a family from position-keyed rows, dropping explicit zeros."""
    indptr = [0]
    positions: list[int] = []
    values: list = []
    for row in rows:
        for pos, v in sorted(row.items()):
            if v != 0:
                positions.append(pos)
                values.append(v)
        indptr.append(len(positions))
    vals = np.asarray(values, dtype=np.float64) if mode == FLOAT else values
    return VectorFamily(space, list(ids) if ids is not None else range(len(rows)), indptr, positions, vals)


def _null_family(fam: VectorFamily, target: SpaceDescriptor, tol: float) -> VectorFamily:
    if fam.mode == FLOAT:
        from scipy.linalg import null_space

        mat = fam.dense()
        if len(fam) == 0:
            basis = np.eye(target.size)
        else:
            basis = null_space(mat, rcond=tol).T
        basis[np.abs(basis) < tol] = 0.0
        rows = [{j: v for j, v in enumerate(r) if v != 0.0} for r in basis]
        return family_from_rows(target, rows, FLOAT)
    rows, _ = exact.rref(exact.nullspace(fam.rows(), range(target.size)))
    return family_from_rows(target, rows, ORACLE)


def annihilator(Y: VectorFamily, tol: float = 1e-12) -> VectorFamily:
    """Basis of {f in X* : <y, f> = 0 for all y in Y}, living in the dual model.

    In oracle mode the basis is the reduced echelon null space of the matrix
    whose rows are the members of ``Y`` (deterministic). Float mode returns
    an orthonormal basis.
    """
    return _null_family(Y, Y.space.dual(), tol)


def pre_annihilator(Z: VectorFamily, tol: float = 1e-12) -> VectorFamily:
    """Basis of {x in X : <x, f> = 0 for all f in Z}; Z lives in the dual model."""
    return _null_family(Z, Z.space.dual(), tol)
