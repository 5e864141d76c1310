"""Finite Markushevich bases: biorthogonal systems spanning a subspace."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import exact
from .sparse_space import FLOAT, SparseVector, VectorFamily, family_from_rows, pairing


@dataclass(frozen=True)
class BiorthogonalSystem:
    """Vectors y_j spanning Y and ambient dual vectors f_j with <y_j, f_k> = delta_jk.

    Both families carry the same ids; the j-th functional belongs to the
    j-th vector.
    """

    vectors: VectorFamily
    functionals: VectorFamily

    def __len__(self):
        return len(self.vectors)

    def evaluation_matrix(self):
        """[<y_j, f_k>] as a list of rows (Fractions or floats)."""
        ys = self.vectors.vectors()
        fs = self.functionals.vectors()
        return [[pairing(y, f) for f in fs] for y in ys]


class Incidence(NamedTuple):
    count: int
    witnesses: list[int]


def _basis_rows(Y: VectorFamily) -> tuple[list[int], exact.IntegerEchelon]:
    ech = exact.IntegerEchelon()
    chosen = []
    for i in range(len(Y)):
        if ech.insert(Y.row_positions(i)) is not None:
            chosen.append(i)
    return chosen, ech


def markushevich(Y: VectorFamily, tol: float = 1e-10) -> BiorthogonalSystem:
    """Biorthogonal system for span Y.

    The vectors are the members of ``Y`` that raise the rank when taken in
    id order. Each functional is supported on the pivot columns of that
    basis, obtained by inverting the basis restricted to those columns, so
    it is the minimal-support solution of the biorthogonality equations.
    """
    if Y.mode == FLOAT:
        return _markushevich_float(Y, tol)
    chosen, ech = _basis_rows(Y)
    if not chosen:
        raise ValueError("Y = {0} has no Markushevich basis")
    pivots = ech.pivots
    basis = [Y.row_positions(i) for i in chosen]
    restricted = [[row.get(c, Fraction(0)) for c in pivots] for row in basis]
    inv = exact.inverse(restricted)
    k = len(chosen)
    funcs = [{pivots[i]: inv[i][j] for i in range(k) if inv[i][j] != 0} for j in range(k)]
    vectors = Y.take(chosen)
    functionals = family_from_rows(Y.space.dual(), funcs, ids=vectors.ids.tolist())
    return BiorthogonalSystem(vectors, functionals)


def _markushevich_float(Y: VectorFamily, tol: float) -> BiorthogonalSystem:
    from scipy.linalg import qr

    mat = Y.dense()
    chosen: list[int] = []
    q = np.zeros((0, mat.shape[1]))
    for i, row in enumerate(mat):
        scale = np.linalg.norm(row)
        if scale == 0:
            continue
        resid = row - q.T @ (q @ row)
        r = np.linalg.norm(resid)
        if r > tol * scale * max(1, mat.shape[1]):
            chosen.append(i)
            q = np.vstack([q, resid / r])
    if not chosen:
        raise ValueError("Y = {0} has no Markushevich basis")
    basis = mat[chosen]
    _, _, perm = qr(basis, pivoting=True, mode="economic")
    pivots = np.sort(perm[: len(chosen)])
    inv = np.linalg.inv(basis[:, pivots])
    funcs = np.zeros((len(chosen), mat.shape[1]))
    funcs[:, pivots] = inv.T
    rows = [{j: v for j, v in enumerate(r) if v != 0.0} for r in funcs]
    vectors = Y.take(chosen)
    functionals = family_from_rows(Y.space.dual(), rows, FLOAT, ids=vectors.ids.tolist())
    return BiorthogonalSystem(vectors, functionals)


def coordinate_system(space, labels=None) -> BiorthogonalSystem:
    """(e_g, e*_g) over ``labels`` (default: the whole universe)."""
    labels = list(space.universe) if labels is None else list(labels)
    rows = [{space.position(lab): Fraction(1)} for lab in labels]
    ids = [space.position(lab) for lab in labels]
    order = np.argsort(ids)
    rows = [rows[i] for i in order]
    ids = [ids[i] for i in order]
    return BiorthogonalSystem(family_from_rows(space, rows, ids=ids),
                              family_from_rows(space.dual(), rows, ids=ids))


def certify(sys: BiorthogonalSystem, Y: VectorFamily | None = None, tol: float = 1e-10) -> dict:
    """Check the three defining conditions; returns a pass/fail report.

    ``spans`` compares span{y_j} with span Y, ``total`` asks that no nonzero
    element of span{y_j} is killed by every f_j (full rank of the evaluation
    matrix), which at finite dimension also means the f_j are shrinking.
    """
    ev = sys.evaluation_matrix()
    k = len(sys)
    float_mode = FLOAT in (sys.vectors.mode, sys.functionals.mode)
    if float_mode:
        err = float(np.max(np.abs(np.asarray(ev, dtype=float) - np.eye(k)))) if k else 0.0
        biorth = err <= tol
        total = k == 0 or np.linalg.matrix_rank(np.asarray(ev, dtype=float)) == k
    else:
        err = max((abs(ev[j][l] - (1 if j == l else 0)) for j in range(k) for l in range(k)), default=Fraction(0))
        biorth = err == 0
        total = exact.rank([{c: v for c, v in enumerate(r) if v != 0} for r in ev]) == k
    report = {"biorthogonal": bool(biorth), "max_deviation": float(err), "total": bool(total)}
    if Y is not None:
        if float_mode:
            a = Y.dense()
            b = sys.vectors.dense()
            ra = np.linalg.matrix_rank(a) if len(Y) else 0
            rb = np.linalg.matrix_rank(b) if k else 0
            rab = np.linalg.matrix_rank(np.vstack([a, b])) if len(Y) + k else 0
            report["spans"] = bool(ra == rb == rab)
        else:
            ech = exact.IntegerEchelon(sys.vectors.rows())
            report["spans"] = ech.rank == k and all(ech.contains(r) for r in Y.rows())
    report["ok"] = all(v for key, v in report.items() if key != "max_deviation")
    return report


def incidence_count(sys: BiorthogonalSystem, f: SparseVector) -> Incidence:
    """How many y_j see the functional ``f``, and which (by vector id)."""
    hits = [vid for vid, y in sys.vectors if pairing(y, f) != 0]
    return Incidence(len(hits), hits)
