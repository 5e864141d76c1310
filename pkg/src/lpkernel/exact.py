"""Exact sparse linear algebra over the rationals.

Rows are sparse maps ``column -> value`` with integer column positions.
Elimination is fraction-free: every stored row holds Python integers with
content 1 and a positive leading coefficient, so no rational normalisation
happens until :meth:`IntegerEchelon.reduced` produces the canonical reduced
row echelon form.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence

Row = Mapping[int, "int | Fraction"]


def primitive(row: Row) -> dict[int, int]:
    """Scale ``row`` to integers with content 1 and positive leading entry."""
    items = [(c, v) for c, v in row.items() if v != 0]
    if not items:
        return {}
    den = 1
    for _, v in items:
        if isinstance(v, Fraction):
            den = lcm(den, v.denominator)
    ints = {c: int(v * den) for c, v in items}
    g = 0
    for v in ints.values():
        g = gcd(g, v)
        if g == 1:
            break
    if ints[min(ints)] < 0:
        g = -g
    if g != 1:
        ints = {c: v // g for c, v in ints.items()}
    return ints


def _combine(row: dict[int, int], piv: dict[int, int], col: int) -> dict[int, int]:
    # a*row - b*piv kills `col`; result is made primitive again
    a, b = piv[col], row[col]
    g = gcd(a, b)
    a //= g
    b //= g
    out = {c: v * a for c, v in row.items()} if a != 1 else dict(row)
    for c, v in piv.items():
        w = out.get(c, 0) - b * v
        if w:
            out[c] = w
        else:
            out.pop(c, None)
    return primitive(out)


class IntegerEchelon:
    """Incrementally built row echelon basis with integer rows.

    Each stored row is keyed by its pivot (leading) column; rows never
    contain another row's pivot to the left of their own.
    """

    def __init__(self, rows: Iterable[Row] = ()):
        self.rows: dict[int, dict[int, int]] = {}
        for row in rows:
            self.insert(row)

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> list[int]:
        return sorted(self.rows)

    def reduce(self, row: Row) -> dict[int, int]:
        """Return ``row`` with every pivot column eliminated (primitive)."""
        work = primitive(row)
        done = -1
        while work:
            hits = [c for c in work if c > done and c in self.rows]
            if not hits:
                break
            col = min(hits)
            work = _combine(work, self.rows[col], col)
            done = col
        return work

    def insert(self, row: Row) -> int | None:
        """Add ``row``; return its new pivot column, or None if dependent."""
        work = self.reduce(row)
        if not work:
            return None
        col = min(work)
        self.rows[col] = work
        return col

    def contains(self, row: Row) -> bool:
        return not self.reduce(row)

    def reduced(self) -> list[dict[int, Fraction]]:
        """Canonical reduced row echelon form, rows ordered by pivot."""
        done: dict[int, dict[int, int]] = {}
        for col in sorted(self.rows, reverse=True):
            work = self.rows[col]
            for other in sorted(c for c in work if c != col and c in done):
                if other in work:
                    work = _combine(work, done[other], other)
            done[col] = work
        out = []
        for col in sorted(done):
            row = done[col]
            lead = row[col]
            out.append({c: Fraction(v, lead) for c, v in sorted(row.items())})
        return out


def rref(rows: Iterable[Row]) -> tuple[list[dict[int, Fraction]], list[int]]:
    ech = IntegerEchelon(rows)
    return ech.reduced(), ech.pivots


def rank(rows: Iterable[Row]) -> int:
    return IntegerEchelon(rows).rank


def nullspace(rows: Iterable[Row], columns: Sequence[int] | range) -> list[dict[int, Fraction]]:
    """Basis of ``{x : <row, x> = 0 for every row}`` over ``columns``.

    One basis vector per free column ``f``: ``e_f`` minus the pivot
    combination read off the reduced form. Output is ordered by free column
    and is itself in reduced echelon form.
    """
    red, pivots = rref(rows)
    pivot_set = set(pivots)
    by_free: dict[int, dict[int, Fraction]] = {}
    for piv, row in zip(pivots, red):
        for c, v in row.items():
            if c != piv:
                by_free.setdefault(c, {})[piv] = -v
    out = []
    for f in columns:
        if f in pivot_set:
            continue
        vec = {f: Fraction(1)}
        vec.update(by_free.get(f, {}))
        out.append(dict(sorted(vec.items())))
    return out


def inverse(matrix: Sequence[Sequence["int | Fraction"]]) -> list[list[Fraction]]:
    """Exact inverse of a square matrix; raises ValueError if singular."""
    n = len(matrix)
    rows = []
    for i, r in enumerate(matrix):
        if len(r) != n:
            raise ValueError("matrix is not square")
        row = {j: v for j, v in enumerate(r) if v != 0}
        row[n + i] = 1
        rows.append(row)
    red, pivots = rref(rows)
    if pivots[:n] != list(range(n)) or len(red) < n:
        raise ValueError("matrix is singular")
    return [[red[i].get(n + j, Fraction(0)) for j in range(n)] for i in range(n)]
