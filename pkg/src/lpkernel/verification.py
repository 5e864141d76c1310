"""Exact certificates for the constructions.

Everything here is decided by fraction-free elimination over the integers
(see :mod:`lpkernel.exact`) in oracle mode, or by projection residuals in
float mode. Checks return plain report dicts of the shape
``{"check", "instances", "failures": [...]}`` so they can be dumped as JSON.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from . import exact
from .operator_builder import (
    InexactError,
    InjectionMap,
    LinearOperator,
    adjoint,
    allocate_theta,
    dense_image_operator,
    operator_norm_bound_check,
)
from .sparse_space import (
    APPROX_DPS,
    FLOAT,
    ORACLE,
    Kind,
    SpaceDescriptor,
    SparseVector,
    VectorFamily,
    annihilator,
    family_from_rows,
    norm,
    norm_power,
    pre_annihilator,
)
from .support_graph import (
    DisjointPartition,
    build_incidence,
    components_equivrel,
    components_graph,
    disjoint_partition,
    partition_report,
    partition_violations,
)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SubspaceBasis:
    """Independent rows spanning a subspace; reduced echelon form in oracle mode."""

    basis: VectorFamily
    ambient: SpaceDescriptor

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def mode(self) -> str:
        return self.basis.mode

    def vectors(self) -> list[SparseVector]:
        return self.basis.vectors()


def _orthonormal_rows(mat: np.ndarray, tol: float) -> np.ndarray:
    if mat.size == 0 or mat.shape[0] == 0:
        return np.zeros((0, mat.shape[1] if mat.ndim == 2 else 0))
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    cut = tol * max(s[0], 1e-300) if len(s) else 0
    return vt[s > cut]


def span(family: VectorFamily, tol: float = 1e-12) -> SubspaceBasis:
    """Canonical basis of span(family)."""
    if family.mode == FLOAT:
        rows = _orthonormal_rows(family.dense(), tol)
        fam = family_from_rows(family.space, [{j: v for j, v in enumerate(r) if v != 0.0} for r in rows], FLOAT)
        return SubspaceBasis(fam, family.space)
    red, _ = exact.rref(family.rows())
    return SubspaceBasis(family_from_rows(family.space, red), family.space)


def _from_rows(space: SpaceDescriptor, rows, mode: str) -> SubspaceBasis:
    return span(family_from_rows(space, rows, mode))


def rank(T: LinearOperator, tol: float = 1e-12) -> int:
    """Rank of T; positive diagonal scales never change it."""
    if T.mode == FLOAT:
        mat = T.dense()
        return int(np.linalg.matrix_rank(mat, tol=None)) if mat.size else 0
    return exact.rank(T.row_positions().values())


def kernel_basis(T: LinearOperator, tol: float = 1e-12) -> SubspaceBasis:
    """Canonical basis of {x : Tx = 0} in the domain."""
    if T.mode == FLOAT:
        from scipy.linalg import null_space

        mat = T.dense()
        basis = null_space(mat, rcond=tol).T if mat.size else np.eye(T.domain.size)
        basis[np.abs(basis) < tol] = 0.0
        return _from_rows(T.domain, [{j: v for j, v in enumerate(r) if v != 0.0} for r in basis], FLOAT)
    rows = exact.nullspace(T.row_positions().values(), range(T.domain.size))
    if T.col_scale and any(c in T.col_scale for r in rows for c in r):
        raise InexactError("kernel meets irrationally scaled columns; it has no rational basis")
    return _from_rows(T.domain, rows, ORACLE)


def row_space(T: LinearOperator) -> SubspaceBasis:
    """span of the rows of T, as functionals on the domain (= T*[X*])."""
    if T.mode == FLOAT:
        return span(T.to_float().raw_rows())
    rows = T.row_positions().values()
    if T.col_scale and any(c in T.col_scale for r in rows for c in r):
        raise InexactError("row space meets irrationally scaled columns")
    return _from_rows(T.domain.dual(), rows, ORACLE)


def image(T: LinearOperator) -> SubspaceBasis:
    """Column space of T in the codomain."""
    if T.mode == FLOAT:
        return span(T.to_float().raw_columns())
    cols = T.column_positions().values()
    if T.row_scale and any(r in T.row_scale for c in cols for r in c):
        raise InexactError("image meets irrationally scaled rows")
    return _from_rows(T.codomain, cols, ORACLE)


def _residual(rows_a: np.ndarray, rows_b: np.ndarray) -> float:
    """max over b of ||b - P_A b|| / ||b||, with rows_a orthonormal."""
    worst = 0.0
    for b in rows_b:
        nb = np.linalg.norm(b)
        if nb == 0:
            continue
        proj = rows_a.T @ (rows_a @ b) if len(rows_a) else np.zeros_like(b)
        worst = max(worst, float(np.linalg.norm(b - proj) / nb))
    return worst


def subspace_equal(A: SubspaceBasis, B: SubspaceBasis, tol: float = DEFAULT_TOL) -> bool:
    """Exact comparison of reduced forms, or mutual projection residual < tol."""
    if A.ambient.universe != B.ambient.universe or A.ambient.kind != B.ambient.kind or A.ambient.p != B.ambient.p:
        raise ValueError(f"ambient mismatch: {A.ambient} vs {B.ambient}")
    if A.mode == ORACLE and B.mode == ORACLE:
        return A.basis.rows() == B.basis.rows()
    a = _orthonormal_rows(A.basis.dense(), 1e-12)
    b = _orthonormal_rows(B.basis.dense(), 1e-12)
    if len(a) != len(b):
        return False
    return _residual(a, b) < tol and _residual(b, a) < tol


def _missing_vector(A: SubspaceBasis, B: SubspaceBasis):
    """A vector of A outside span B, for witnesses (oracle mode)."""
    if A.mode != ORACLE or B.mode != ORACLE:
        return None
    ech = exact.IntegerEchelon(B.basis.rows())
    for i in range(len(A.basis)):
        if not ech.contains(A.basis.row_positions(i)):
            return {str(A.ambient.label(c)): str(v) for c, v in A.basis.row_positions(i).items()}
    return None


def _identity(name: str, A: SubspaceBasis, B: SubspaceBasis, tol: float) -> dict:
    ok = subspace_equal(A, B, tol)
    entry = {"identity": name, "pass": bool(ok), "dims": [A.dim, B.dim]}
    if not ok:
        entry["witness"] = _missing_vector(A, B) or _missing_vector(B, A)
    return entry


def check_duality_chain(T: LinearOperator, tol: float = DEFAULT_TOL) -> dict:
    """ker T = (row space)_perp, (ker T)^perp = row space, ((ker T)^perp)_perp = ker T."""
    X = T.domain
    if X.kind is not Kind.LP or X.p == 1:
        raise ValueError("the duality chain is stated for l_p with 1 < p < oo")
    K = kernel_basis(T, tol=1e-12)
    R = row_space(T)
    results = [
        _identity("ker T = (T*[X*])_perp", K, span(pre_annihilator(R.basis)), tol),
        _identity("(ker T)^perp = T*[X*]", span(annihilator(K.basis)), R, tol),
        _identity("((ker T)^perp)_perp = ker T", span(pre_annihilator(annihilator(K.basis))), K, tol),
    ]
    r = rank(T)
    results.append({"identity": "rank + nullity = dim", "pass": r + K.dim == X.size, "dims": [r, K.dim]})
    bad = None
    scale = max(1.0, float(np.abs(T.dense()).max())) if T.mode == FLOAT and T.domain.size else 1.0
    for vec in K.vectors():
        y = T.apply_raw(vec)
        if T.mode == FLOAT:
            if y and max(abs(v) for v in y.entries.values()) > 1e-8 * scale:
                bad = vec
        elif y:
            bad = vec
        if bad is not None:
            break
    results.append({"identity": "T k = 0 on the kernel basis", "pass": bad is None,
                    **({"witness": {str(k): str(v) for k, v in bad.entries.items()}} if bad is not None else {})})
    failures = [r for r in results if not r["pass"]]
    return {"check": "duality_chain", "instances": 1, "identities": results, "failures": failures}


def certify_kernel(T: LinearOperator, Y: VectorFamily, tol: float = DEFAULT_TOL) -> dict:
    """Report whether ker T = span Y, with T y = 0 checked member by member."""
    K = kernel_basis(T)
    S = span(Y)
    ok = subspace_equal(K, S, tol)
    entry = {"identity": "ker T = span Y", "pass": bool(ok), "dims": [K.dim, S.dim],
             "exact": T.mode == ORACLE and Y.mode == ORACLE}
    if not ok:
        entry["witness"] = _missing_vector(K, S) or _missing_vector(S, K)
    failures = [] if ok else [entry]
    return {"check": "kernel", "instances": 1, "identities": [entry], "failures": failures}


def brute_force_components(D: VectorFamily) -> np.ndarray:
    """Component (least id) of each member from the explicit intersection graph.

    Builds the dense member-by-coordinate incidence matrix, forms the
    adjacency A A^T > 0 and closes it transitively by repeated squaring.
    Quadratic in |D|; meant for small families.
    """
    n = len(D)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    used, col = np.unique(D.positions, return_inverse=True)
    inc = np.zeros((n, len(used)), dtype=np.float32)
    rows = np.repeat(np.arange(n), np.diff(D.indptr))
    inc[rows, col] = 1.0
    reach = (inc @ inc.T) > 0
    np.fill_diagonal(reach, True)
    while True:
        r = reach.astype(np.float32)
        nxt = (r @ r) > 0
        if np.array_equal(nxt, reach):
            break
        reach = nxt
    least = np.argmax(reach, axis=1)
    return D.ids[least]


def probe_dense_image(D: VectorFamily, theta: InjectionMap, T: LinearOperator, tol: float = 1e-12) -> list[dict]:
    """T(2^n e_theta(d,n)) = d / ||d|| for every (d, n); zero columns elsewhere.

    With a symbolic column scale s the probe value is s * 2^n * M e_theta;
    it is certified by 2^n M e_theta = d exactly and s^p ||d||_p^p = 1.
    """
    failures = []
    cols = T.column_positions()
    used = set()
    for (vid, n), lab in sorted(theta.theta.items()):
        d = D.vector(vid)
        c = T.domain.position(lab)
        used.add(c)
        raw = SparseVector.from_positions(T.codomain, cols.get(c, {})) * (2 ** n if T.mode == ORACLE else 2.0 ** n)
        scale = T.col_scale.get(c)
        if T.mode == FLOAT:
            want = d / norm(d)
            diff = raw - want
            ok = not diff or max(abs(v) for v in diff.entries.values()) <= tol
        elif scale is None:
            # folded: raw = d / ||d|| with ||d|| rational
            nd = norm(d)
            ok = isinstance(nd, Fraction) and raw == d / nd
        else:
            power = norm_power(d)
            if scale.exact and isinstance(power, Fraction):
                ok = raw == d and scale.base * power == 1
            else:
                with mpmath.workdps(APPROX_DPS):
                    err = abs(scale.base * power - 1)
                    ok = raw == d and err <= mpmath.mpf(10) ** (-APPROX_DPS + 5)
        if not ok:
            failures.append({"identity": "T(2^n e_theta(d,n)) = d/||d||", "vector_id": vid, "group": n})
    stray = sorted(set(cols) - used)
    if stray:
        failures.append({"identity": "zero columns off theta", "columns": [str(T.domain.label(c)) for c in stray]})
    return failures


def check_dense_image(D: VectorFamily, part: DisjointPartition | None = None, theta: InjectionMap | None = None,
                      trials: int = 100, seed: int = 0, tol: float = 1e-12) -> dict:
    """Probe every column of the dense-image operator against D, then test the norm bound."""
    Dn = D.nonzero()
    if part is None:
        part = disjoint_partition(Dn, components_equivrel(Dn))
    theta = theta or allocate_theta(part, D.space)
    T = dense_image_operator(Dn, part, theta)
    failures = probe_dense_image(Dn, theta, T, tol)
    if T.mode == ORACLE:
        ech = exact.IntegerEchelon(T.column_positions().values())
        r_T = ech.rank
        r_D = exact.rank(Dn.rows())
        outside = [int(vid) for vid, d in Dn if not ech.contains(d.positions())]
    else:
        r_T = rank(T)
        r_D = int(np.linalg.matrix_rank(Dn.dense())) if len(Dn) else 0
        a = _orthonormal_rows(image(T).basis.dense(), 1e-12)
        outside = [int(vid) for vid, d in Dn
                   if _residual(a, VectorFamily.from_vectors([d], space=D.space).dense()) > DEFAULT_TOL]
    if r_T != r_D:
        failures.append({"identity": "rank T = dim span D", "rank": r_T, "dim": r_D})
    if outside:
        failures.append({"identity": "D inside the image of T", "vector_ids": outside[:10]})
    bound = operator_norm_bound_check(T, theta, trials=trials, seed=seed, tol=tol)
    failures.extend(bound["failures"])
    return {"check": "dense_image", "instances": 1, "rank": r_T, "dim_span": r_D,
            "n_groups": part.n_groups, "exact": bound["exact"], "failures": failures}


def check_spanning_roundtrip(D: VectorFamily, trials: int = 0, seed: int = 0) -> dict:
    """Spanning set -> incidence -> partition -> dense-image operator, all asserted.

    Both component algorithms must agree, the partition must be sound and
    complete with as many groups as the largest component, and the operator
    must have rank dim span D with every d in its image.
    """
    inc = build_incidence(D)
    comp = components_equivrel(D, inc)
    failures = []
    if comp != components_graph(D, inc):
        failures.append({"identity": "union-find = BFS components"})
    part = disjoint_partition(D, comp)
    failures.extend(partition_violations(D, part))
    report = partition_report(D, comp, part)
    if report["n_groups"] != report["max_component"]:
        failures.append({"identity": "groups = max component size", **report})
    dense = check_dense_image(D, part, trials=trials, seed=seed)
    failures.extend(dense["failures"])
    return {"check": "spanning_roundtrip", "instances": 1, "failures": failures,
            "rank": dense["rank"], "dim_span": dense["dim_span"], **report}


def self_consistency(T: LinearOperator) -> bool:
    """kernel_basis(T**) = kernel_basis(T)."""
    return subspace_equal(kernel_basis(adjoint(adjoint(T))), kernel_basis(T))


check_lemma25_roundtrip = check_spanning_roundtrip
