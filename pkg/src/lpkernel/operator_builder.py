"""Bounded operators on the finite sequence-space models, and their builders.

A :class:`LinearOperator` is a sparse matrix between two space models,
optionally sandwiched between positive diagonal scalings. The scalings
exist because normalising a vector in l_p usually divides by an irrational
number: oracle mode keeps the matrix rational and records the column factor
``1/||d||`` symbolically as a :class:`RootScale`. Kernels, ranks and row
spaces never depend on positive diagonal factors on the far side, so they
stay exactly computable.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import mpmath
import numpy as np

from . import exact
from .biorthogonal import markushevich
from .sparse_space import (
    APPROX_DPS,
    FLOAT,
    ORACLE,
    Kind,
    SpaceDescriptor,
    SparseVector,
    VectorFamily,
    annihilator,
    exact_root,
    family_from_rows,
    norm_power,
)
from .support_graph import (
    ComponentDecomposition,
    DisjointPartition,
    components_equivrel,
    disjoint_partition,
)


class InexactError(ValueError):
    """The requested quantity is irrational in oracle mode."""


@dataclass(frozen=True)
class RootScale:
    """The positive real ``base ** (1/root)``.

    ``base`` is a Fraction when known exactly; an ``mpmath.mpf`` base (from a
    non-integer exponent) is an ``APPROX_DPS``-digit approximation.
    """

    base: Fraction | object
    root: Fraction

    @property
    def exact(self) -> bool:
        return isinstance(self.base, Fraction)

    def value(self):
        with mpmath.workdps(APPROX_DPS):
            b = mpmath.mpf(self.base.numerator) / self.base.denominator if self.exact else mpmath.mpf(self.base)
            return mpmath.power(b, mpmath.mpf(self.root.denominator) / self.root.numerator)

    def __float__(self):
        return float(self.value())

    def to_json(self):
        base = [self.base.numerator, self.base.denominator] if self.exact else mpmath.nstr(self.base, APPROX_DPS)
        return [base, [self.root.numerator, self.root.denominator]]

    @classmethod
    def from_json(cls, data) -> "RootScale":
        base, root = data
        if isinstance(base, list):
            base = Fraction(base[0], base[1])
        else:
            with mpmath.workdps(APPROX_DPS):
                base = mpmath.mpf(base)
        return cls(base, Fraction(root[0], root[1]))


class LinearOperator:
    """diag(row_scale) . M . diag(col_scale) with M sparse.

    ``M`` is stored column-wise over universe positions. Scales default to 1
    and only appear for oracle-mode factors that are irrational.
    """

    def __init__(self, domain: SpaceDescriptor, codomain: SpaceDescriptor,
                 columns: Mapping[int, Mapping[int, object]], *,
                 col_scale: Mapping[int, RootScale] | None = None,
                 row_scale: Mapping[int, RootScale] | None = None,
                 mode: str | None = None):
        self.domain = domain
        self.codomain = codomain
        cols: dict[int, dict[int, object]] = {}
        seen_float = False
        for c, col in columns.items():
            if not 0 <= c < domain.size:
                raise ValueError(f"column position {c} outside the domain universe")
            kept = {}
            for r, v in col.items():
                if not 0 <= r < codomain.size:
                    raise ValueError(f"row position {r} outside the codomain universe")
                if v != 0:
                    kept[r] = v
                    seen_float = seen_float or isinstance(v, float)
            if kept:
                cols[c] = dict(sorted(kept.items()))
        self._cols = dict(sorted(cols.items()))
        self.col_scale = dict(col_scale or {})
        self.row_scale = dict(row_scale or {})
        self.mode = mode or (FLOAT if seen_float else ORACLE)
        if self.mode == FLOAT:
            self._cols = {c: {r: float(v) for r, v in col.items()} for c, col in self._cols.items()}
            if self.col_scale or self.row_scale:
                raise ValueError("float operators carry no symbolic scales")

    # construction helpers
    @classmethod
    def zero(cls, domain, codomain, mode: str = ORACLE) -> "LinearOperator":
        return cls(domain, codomain, {}, mode=mode)

    @classmethod
    def identity(cls, space, mode: str = ORACLE) -> "LinearOperator":
        one = 1.0 if mode == FLOAT else Fraction(1)
        return cls(space, space, {i: {i: one} for i in range(space.size)}, mode=mode)

    @classmethod
    def from_dense(cls, domain, codomain, matrix) -> "LinearOperator":
        """``matrix[r][c]`` is the entry in codomain row r, domain column c."""
        cols: dict[int, dict[int, object]] = {}
        for r, row in enumerate(matrix):
            for c, v in enumerate(row):
                if v != 0:
                    if not isinstance(v, float):
                        v = Fraction(v)
                    cols.setdefault(c, {})[r] = v
        return cls(domain, codomain, cols)

    @classmethod
    def from_triplets(cls, domain, codomain, triplets: Iterable, **kw) -> "LinearOperator":
        """Triplets ``(row_label, col_label, value)``."""
        cols: dict[int, dict[int, object]] = {}
        for row, col, v in triplets:
            r, c = codomain.position(row), domain.position(col)
            cols.setdefault(c, {})[r] = v
        return cls(domain, codomain, cols, **kw)

    # views
    @property
    def scaled(self) -> bool:
        return bool(self.col_scale or self.row_scale)

    @property
    def entries(self) -> dict:
        """Raw matrix entries keyed by ``(row_label, col_label)``."""
        rl, cl = self.codomain.label, self.domain.label
        return {(rl(r), cl(c)): v for c, col in self._cols.items() for r, v in col.items()}

    def triplets(self) -> list[tuple]:
        return sorted(((r, c, v) for c, col in self._cols.items() for r, v in col.items()))

    def raw_column(self, label) -> SparseVector:
        c = self.domain.position(label)
        return SparseVector.from_positions(self.codomain, self._cols.get(c, {}))

    def column_positions(self) -> dict[int, dict[int, object]]:
        return {c: dict(col) for c, col in self._cols.items()}

    def row_positions(self) -> dict[int, dict[int, object]]:
        rows: dict[int, dict[int, object]] = {}
        for c, col in self._cols.items():
            for r, v in col.items():
                rows.setdefault(r, {})[c] = v
        return dict(sorted(rows.items()))

    def raw_rows(self) -> VectorFamily:
        """Rows of M as functionals on the domain (ids = codomain positions)."""
        rows = self.row_positions()
        return family_from_rows(self.domain.dual(), list(rows.values()), self.mode, ids=list(rows))

    def raw_columns(self) -> VectorFamily:
        """Columns of M as vectors in the codomain (ids = domain positions)."""
        return family_from_rows(self.codomain, list(self._cols.values()), self.mode, ids=list(self._cols))

    def __eq__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        return (self.domain == other.domain and self.codomain == other.codomain
                and self._cols == other._cols and self.col_scale == other.col_scale
                and self.row_scale == other.row_scale)

    def __repr__(self):
        nnz = sum(len(c) for c in self._cols.values())
        tag = ", scaled" if self.scaled else ""
        return f"LinearOperator({self.domain} -> {self.codomain}, nnz={nnz}, mode={self.mode}{tag})"

    # arithmetic
    def apply_raw(self, x: SparseVector) -> SparseVector:
        """M x, ignoring both scalings."""
        if not x.space.same_universe(self.domain):
            raise ValueError("vector is not in the operator's domain")
        float_mode = self.mode == FLOAT or x.mode == FLOAT
        out: dict[int, object] = {}
        for c, v in x.positions().items():
            col = self._cols.get(c)
            if not col:
                continue
            for r, a in col.items():
                out[r] = out.get(r, 0) + (float(a) * float(v) if float_mode else a * v)
        return SparseVector.from_positions(self.codomain, out)

    def apply(self, x: SparseVector) -> SparseVector:
        """T x; raises InexactError when an irrational scale would enter the result."""
        if self.mode == FLOAT or x.mode == FLOAT:
            return self.to_float().apply_raw(x.to_float())
        pos = x.positions()
        if any(c in self.col_scale for c in pos):
            raise InexactError("input touches an irrationally scaled column; use apply_raw or to_float")
        y = self.apply_raw(x)
        if any(self.codomain.position(lab) in self.row_scale for lab in y):
            raise InexactError("output touches an irrationally scaled row; use to_float")
        return y

    def to_float(self) -> "LinearOperator":
        cs = {c: float(s) for c, s in self.col_scale.items()}
        rs = {r: float(s) for r, s in self.row_scale.items()}
        cols = {c: {r: float(v) * cs.get(c, 1.0) * rs.get(r, 1.0) for r, v in col.items()}
                for c, col in self._cols.items()}
        return LinearOperator(self.domain, self.codomain, cols, mode=FLOAT)

    def dense(self) -> np.ndarray:
        """Float array, scales folded in (small operators only)."""
        out = np.zeros((self.codomain.size, self.domain.size))
        for c, col in self.to_float()._cols.items():
            for r, v in col.items():
                out[r, c] = v
        return out


def adjoint(T: LinearOperator) -> LinearOperator:
    """Transpose between the dual models (l_p <-> l_p*, c0 <-> l_1)."""
    rows = T.row_positions()
    return LinearOperator(T.codomain.dual(), T.domain.dual(), rows,
                          col_scale=T.row_scale, row_scale=T.col_scale, mode=T.mode)


@dataclass(frozen=True)
class InjectionMap:
    """Injective map (vector_id, group n) -> coordinate label of the domain."""

    theta: dict
    space: SpaceDescriptor

    def __post_init__(self):
        labels = list(self.theta.values())
        if len(set(labels)) != len(labels):
            raise ValueError("theta is not injective")
        for lab in labels:
            if lab not in self.space:
                raise ValueError(f"theta sends a pair to {lab!r}, outside the universe")

    def __getitem__(self, key):
        return self.theta[key]

    def __len__(self):
        return len(self.theta)

    def group_labels(self, n: int) -> list:
        return [lab for (vid, m), lab in sorted(self.theta.items()) if m == n]


def allocate_theta(part: DisjointPartition, space: SpaceDescriptor) -> InjectionMap:
    """Take labels from the top of the universe downwards, group by group."""
    need = len(part.ids)
    if need > space.size:
        raise ValueError(f"universe of size {space.size} is too small for {need} (vector, group) pairs")
    theta = {}
    nxt = space.size - 1
    for n, members in enumerate(part.groups, start=1):
        for vid in members:
            theta[(vid, n)] = space.label(nxt)
            nxt -= 1
    return InjectionMap(theta, space)


def _normalising(d: dict[int, object], space: SpaceDescriptor, mode: str):
    """Return (factor, scale): d/||d|| = factor * scale * d, scale None if folded."""
    vec = SparseVector.from_positions(space, d)
    power = norm_power(vec, space)
    if mode == FLOAT:
        nrm = power if space.kind is Kind.C0 or space.p == 1 else power ** (1.0 / float(space.p))
        return 1.0 / nrm, None
    if space.kind is Kind.C0 or space.p == 1:
        return 1 / power, None
    k = space.integer_p
    if k is not None:
        root = exact_root(power, k)
        if root is not None:
            return 1 / root, None
        return Fraction(1), RootScale(1 / power, space.p)
    with mpmath.workdps(APPROX_DPS):
        return Fraction(1), RootScale(1 / power, space.p)


def _check_partition(D: VectorFamily, part: DisjointPartition):
    from .support_graph import partition_violations

    rows = [D.index_of(int(v)) for v in part.ids]
    sub = D.take(rows)
    bad = partition_violations(sub, part)
    if bad:
        raise ValueError(f"partition is not valid for this family: {bad[0]}")


def dense_image_operator(D: VectorFamily, part: DisjointPartition,
                         theta: InjectionMap | None = None) -> LinearOperator:
    """T x = sum_n U_n(x o theta_n) / 2^n, where U_n sends e_d to d/||d||.

    Column theta(d, n) of T is d / (2^n ||d||); every other column is zero.
    Zero members are dropped. In oracle mode an irrational 1/||d|| is kept as
    a column scale.
    """
    _check_partition(D, part)
    theta = theta or allocate_theta(part, D.space)
    if not theta.space.same_universe(D.space):
        raise ValueError("theta maps into a different universe")
    cols: dict[int, dict[int, object]] = {}
    scales: dict[int, RootScale] = {}
    for n, members in enumerate(part.groups, start=1):
        weight = 2.0 ** -n if D.mode == FLOAT else Fraction(1, 2 ** n)
        for vid in members:
            d = D.row_positions(D.index_of(vid))
            if not d:
                continue
            try:
                lab = theta[(vid, n)]
            except KeyError:
                raise ValueError(f"theta does not cover (vector {vid}, group {n})") from None
            factor, scale = _normalising(d, D.space, D.mode)
            c = D.space.position(lab)
            cols[c] = {r: v * factor * weight for r, v in d.items()}
            if scale is not None:
                scales[c] = scale
    return LinearOperator(D.space, D.space, cols, col_scale=scales, mode=D.mode)


def _random_rational(rng: random.Random) -> Fraction:
    num = rng.choice([i for i in range(-9, 10) if i])
    return Fraction(num, rng.randint(1, 5))


def _power_sum(vals, space: SpaceDescriptor, scales=None):
    """sum |v|^p / base (or max for c0), exact where possible."""
    k = space.integer_p
    if space.kind is Kind.C0:
        return max((abs(v) for v in vals), default=Fraction(0))
    if k is not None and all(s is None or s.exact for s in (scales or [None] * len(vals))):
        total = Fraction(0)
        for i, v in enumerate(vals):
            t = abs(v) ** k
            s = scales[i] if scales else None
            total += t / s.base if s is not None else t
        return total
    with mpmath.workdps(APPROX_DPS):
        p = mpmath.mpf(space.p.numerator) / space.p.denominator
        total = mpmath.mpf(0)
        for i, v in enumerate(vals):
            t = mpmath.power(abs(mpmath.mpf(v.numerator) / v.denominator), p)
            s = scales[i] if scales else None
            if s is not None:
                t /= mpmath.mpf(s.base.numerator) / s.base.denominator if s.exact else s.base
            total += t
        return total


def operator_norm_bound_check(T: LinearOperator, theta: InjectionMap, trials: int = 100,
                              seed: int = 0, tol: float = 1e-12) -> dict:
    """Check ||Tx|| <= ||x|| on random x and ||Tx|| = 2^-n ||x|| on single groups.

    Oracle mode samples x through its scaled coordinates, x_c = q_c / s_c for
    rational q, so both sides are rational for integer p and c0 and the
    comparison is exact. Non-integer p falls back to ``APPROX_DPS`` digits.
    """
    if T.row_scale:
        raise ValueError("expected an operator built by dense_image_operator")
    rng = random.Random(seed)
    dom = T.domain
    labels = list(dom.universe)
    groups = sorted({n for (_, n) in theta.theta})
    float_mode = T.mode == FLOAT
    Tf = T.to_float() if float_mode else None
    exact_run = float_mode or dom.kind is Kind.C0 or (
        dom.integer_p is not None and all(s.exact for s in T.col_scale.values()))
    failures = []

    def sample(support_labels):
        return {dom.position(lab): _random_rational(rng) for lab in support_labels}

    def measure(q: dict[int, Fraction]):
        if float_mode:
            x = SparseVector.from_positions(dom, {c: float(v) for c, v in q.items()})
            y = Tf.apply_raw(x)
            return float(norm_power(y)), float(norm_power(x))
        y = T.apply_raw(SparseVector.from_positions(dom, q))
        out = _power_sum(list(y.positions().values()), T.codomain)
        cs = [T.col_scale.get(c) for c in q]
        inp = _power_sum(list(q.values()), dom, cs)
        return out, inp

    def leq(a, b):
        if float_mode:
            return a <= b * (1 + tol) + tol * 1e-300
        if isinstance(a, Fraction) and isinstance(b, Fraction):
            return a <= b
        return a <= b * (1 + mpmath.mpf(10) ** (-APPROX_DPS + 5))

    def same(a, b):
        if float_mode:
            return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)
        if isinstance(a, Fraction) and isinstance(b, Fraction):
            return a == b
        return abs(a - b) <= abs(b) * mpmath.mpf(10) ** (-APPROX_DPS + 5)

    def witness(q):
        return {str(dom.label(c)): str(v) for c, v in sorted(q.items())}

    theta_labels = list(theta.theta.values())
    for t in range(trials):
        if t == 0:
            q: dict[int, Fraction] = {}
        else:
            k = rng.randint(1, min(8, len(labels)))
            pool = theta_labels if theta_labels and rng.random() < 0.8 else labels
            q = sample(rng.sample(pool, min(k, len(pool))))
        out, inp = measure(q)
        if not leq(out, inp):
            failures.append({"identity": "contraction", "witness": witness(q), "lhs": str(out), "rhs": str(inp)})
        if groups:
            n = rng.choice(groups)
            glabels = theta.group_labels(n)
            q = sample(rng.sample(glabels, rng.randint(1, min(4, len(glabels)))))
            out, inp = measure(q)
            if dom.kind is Kind.C0:
                want = inp / 2 ** n
            elif float_mode:
                want = inp * 2.0 ** (-n * float(dom.p))
            elif isinstance(inp, Fraction):
                want = inp / 2 ** (n * dom.integer_p)
            else:
                with mpmath.workdps(APPROX_DPS):
                    want = inp * mpmath.power(2, -n * mpmath.mpf(dom.p.numerator) / dom.p.denominator)
            if not same(out, want):
                failures.append({"identity": f"block isometry (group {n})", "witness": witness(q),
                                 "lhs": str(out), "rhs": str(want)})
    return {"check": "operator_norm_bound", "instances": trials, "exact": bool(exact_run and not float_mode),
            "failures": failures}


def kernel_operator_via_duality(Y: VectorFamily) -> LinearOperator:
    """T on l_p (1 < p < oo) with ker T = span Y, built through the dual.

    Y^perp in l_p* gets a biorthogonal spanning set D, D is split into
    disjoint-support groups, S is the dense-image operator onto Y^perp, and
    T is its adjoint: ker T = S[X*]_perp = (Y^perp)_perp = span Y.
    """
    X = Y.space
    if X.kind is Kind.C0 or X.p == 1:
        raise ValueError("the duality construction needs 1 < p < oo; use the quotient construction")
    Z = annihilator(Y)
    if len(Z) == 0:
        return LinearOperator.zero(X, X, mode=Y.mode)
    D = markushevich(Z).vectors
    part = disjoint_partition(D, components_equivrel(D))
    S = dense_image_operator(D, part, allocate_theta(part, Z.space))
    return adjoint(S)


def kernel_operator_via_quotient(Y: VectorFamily, X: SpaceDescriptor | None = None) -> LinearOperator:
    """T = R o q with ker T = span Y, on any model including c0 and l_1.

    q projects along span Y onto the coordinates that are not pivots of the
    reduced echelon form of Y; R puts those coordinates back in place, which
    is injective on the complement.
    """
    X = X or Y.space
    if not X.same_universe(Y.space):
        raise ValueError("Y does not live in X")
    float_mode = Y.mode == FLOAT
    red, pivots = exact.rref(Y.rows())
    pivot_set = set(pivots)
    cols: dict[int, dict[int, object]] = {}
    for f in range(X.size):
        if f not in pivot_set:
            cols[f] = {f: Fraction(1)}
    for piv, row in zip(pivots, red):
        cols[piv] = {f: -v for f, v in row.items() if f != piv}
    if float_mode:
        cols = {c: {r: float(v) for r, v in col.items()} for c, col in cols.items()}
    return LinearOperator(X, X, cols, mode=FLOAT if float_mode else ORACLE)


@dataclass(frozen=True)
class LpSumDecomposition:
    """Blocks spanned by the components; their supports are pairwise disjoint."""

    space: SpaceDescriptor
    blocks: list[VectorFamily]
    block_supports: list[frozenset] = field(default_factory=list)

    def assemble(self, parts) -> SparseVector:
        """U z = sum of the per-block vectors."""
        out = SparseVector(self.space)
        for z in parts:
            out = out + z
        return out


def lp_sum_decomposition(Y: VectorFamily, comp: ComponentDecomposition) -> LpSumDecomposition:
    if Y.space.kind is not Kind.LP:
        raise ValueError("l_p-sum decomposition needs an l_p model")
    Yn = Y.nonzero()
    if not np.array_equal(Yn.ids, comp.ids):
        raise ValueError("components were computed for a different family")
    blocks, supports = [], []
    owner: dict[int, int] = {}
    for b, (cid, members) in enumerate(sorted(comp.components.items())):
        block = Yn.take([Yn.index_of(v) for v in members])
        sup = set(block.positions.tolist())
        for pos in sup:
            if owner.setdefault(pos, b) != b:
                raise ValueError(f"blocks {owner[pos]} and {b} overlap at coordinate {Y.space.label(pos)!r}")
        blocks.append(block)
        supports.append(frozenset(Y.space.label(pos) for pos in sup))
    return LpSumDecomposition(Y.space, blocks, supports)


def isometry_check(dec: LpSumDecomposition, trials: int = 100, seed: int = 0, tol: float = 1e-12) -> dict:
    """||sum z_xi||^p = sum ||z_xi||^p for random per-block vectors z_xi."""
    rng = random.Random(seed)
    failures = []
    exact_run = dec.space.integer_p is not None
    for t in range(trials):
        parts = []
        for block in dec.blocks:
            if rng.random() < 0.3:
                continue
            z = SparseVector(dec.space)
            for i in range(len(block)):
                if rng.random() < 0.7:
                    z = z + block[i] * (_random_rational(rng) if block.mode == ORACLE else rng.uniform(-3, 3))
            parts.append(z)
        total = norm_power(dec.assemble(parts))
        pieces = [norm_power(z) for z in parts]
        if not pieces:
            summed = type(total)(0)
        elif isinstance(pieces[0], Fraction):
            summed = sum(pieces, Fraction(0))
        elif isinstance(pieces[0], float):
            summed = sum(pieces)
        else:
            with mpmath.workdps(APPROX_DPS):
                summed = mpmath.fsum(pieces)
        if isinstance(total, Fraction):
            ok = total == summed
        elif isinstance(total, float):
            ok = abs(total - summed) <= tol * max(abs(total), 1.0)
        else:
            ok = abs(total - summed) <= abs(summed) * mpmath.mpf(10) ** (-APPROX_DPS + 5)
        if not ok:
            failures.append({"trial": t, "identity": "lp-sum isometry", "lhs": str(total), "rhs": str(summed)})
    return {"check": "lp_sum_isometry", "instances": trials, "exact": exact_run, "failures": failures}
