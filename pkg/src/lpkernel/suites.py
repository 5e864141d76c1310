"""Randomised verification suites.

Each suite draws one instance per seed, runs the relevant certificates and
returns the failures it found. :func:`run_suite` aggregates them into the
report shape ``{"check", "instances", "failures": [{"seed", "identity",
"witness"}]}``.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable

import numpy as np

from . import exact
from .biorthogonal import certify, markushevich
from .generate import instance_seed, random_family, random_operator
from .operator_builder import (
    isometry_check,
    kernel_operator_via_duality,
    kernel_operator_via_quotient,
    lp_sum_decomposition,
)
from .sparse_space import RationalArray, SpaceDescriptor, VectorFamily
from .support_graph import (
    build_incidence,
    components_equivrel,
    components_graph,
    disjoint_partition,
    partition_violations,
)
from .verification import (
    brute_force_components,
    certify_kernel,
    check_dense_image,
    check_duality_chain,
    check_spanning_roundtrip,
    kernel_basis,
    subspace_equal,
)

KERNEL_EXPONENTS = (Fraction(3, 2), Fraction(2), Fraction(3))


def sample_structure(rng: np.random.Generator, n: int, universe: int, max_support: int,
                     space: SpaceDescriptor | None = None) -> VectorFamily:
    """Fast random family: support sizes uniform in [1, max_support], values +-1..8.

    Coordinates are drawn with replacement and de-duplicated per vector.
    """
    sizes = rng.integers(1, min(max_support, universe) + 1, n).astype(np.int64)
    rows = np.repeat(np.arange(n, dtype=np.int64), sizes)
    key = rows * np.int64(universe) + rng.integers(0, universe, len(rows), dtype=np.int64)
    key = np.unique(key)
    rows = key // universe
    pos = key - rows * universe
    indptr = np.concatenate(([0], np.cumsum(np.bincount(rows, minlength=n)))).astype(np.int64)
    nums = rng.integers(1, 9, len(pos)) * rng.choice([-1, 1], len(pos))
    space = space or SpaceDescriptor.lp(2, range(universe))
    return VectorFamily(space, np.arange(n), indptr, pos, RationalArray(nums), check=False)


def _partition_instance(rng: np.random.Generator) -> list[dict]:
    n = int(rng.integers(1, 501))
    s = int(rng.integers(1, 17))
    universe = int(rng.integers(max(s, 2), max(s + 2, 2 * n * s // 3)))
    D = sample_structure(rng, n, universe, s)
    inc = build_incidence(D)
    uf = components_equivrel(D, inc)
    bfs = components_graph(D, inc)
    out = []
    if uf != bfs:
        diff = np.flatnonzero(uf.component_of != bfs.component_of)
        out.append({"identity": "union-find = BFS", "witness": {"vector_id": int(D.ids[diff[0]])}})
    if n <= 200:
        brute = brute_force_components(D)
        if not np.array_equal(brute, uf.component_of):
            diff = np.flatnonzero(brute != uf.component_of)
            out.append({"identity": "union-find = brute force", "witness": {"vector_id": int(D.ids[diff[0]])}})
    part = disjoint_partition(D, uf)
    out.extend({"identity": v.pop("identity"), "witness": v} for v in partition_violations(D, part))
    if part.n_groups != int(uf.sizes().max()):
        out.append({"identity": "groups = max component size",
                    "witness": {"groups": part.n_groups, "max_component": int(uf.sizes().max())}})
    return out


def _random_space(rng, universe, choices=("l1", "l2", "l3", "c0")) -> SpaceDescriptor:
    pick = choices[int(rng.integers(0, len(choices)))]
    if pick == "c0":
        return SpaceDescriptor.c0(range(universe))
    return SpaceDescriptor.lp(Fraction(pick[1:]), range(universe))


def _dense_image_instance(rng: np.random.Generator, trials: int = 100) -> list[dict]:
    n = int(rng.integers(1, 25))
    universe = int(rng.integers(n, n + 25))
    space = _random_space(rng, universe)
    D = random_family(rng, space, n, max_support=5, value_range=(-6, 6), den_max=3)
    if rng.random() < 0.25:
        D = D.to_float()
    rep = check_dense_image(D, trials=trials, seed=int(rng.integers(0, 2 ** 31)))
    return [{"identity": f.pop("identity"), "witness": f} for f in rep["failures"]]


def _random_subspace(rng, universe: int, space: SpaceDescriptor, max_dim: int = 50) -> VectorFamily:
    k = int(rng.integers(0, min(max_dim, universe) + 1))
    return random_family(rng, space, k, max_support=4, value_range=(-5, 5), den_max=2)


def _kernel_instance(rng: np.random.Generator) -> list[dict]:
    universe = int(rng.integers(1, 57))
    p = KERNEL_EXPONENTS[int(rng.integers(0, len(KERNEL_EXPONENTS)))]
    space = SpaceDescriptor.lp(p, range(universe))
    Y = _random_subspace(rng, universe, space)
    out = []
    T_dual = kernel_operator_via_duality(Y)
    T_quot = kernel_operator_via_quotient(Y)
    for name, T in (("duality", T_dual), (f"quotient l_{p}", T_quot)):
        for f in certify_kernel(T, Y)["failures"]:
            out.append({"identity": f"{name}: ker T = span Y", "witness": f})
    if not subspace_equal(kernel_basis(T_dual), kernel_basis(T_quot)):
        out.append({"identity": "duality and quotient kernels agree", "witness": {"dim": universe}})
    for other in (SpaceDescriptor.lp(1, range(universe)), SpaceDescriptor.c0(range(universe))):
        Yo = Y.with_space(other)
        for f in certify_kernel(kernel_operator_via_quotient(Yo), Yo)["failures"]:
            out.append({"identity": f"quotient {other}: ker T = span Y", "witness": f})
    return out


def _duality_instance(rng: np.random.Generator) -> list[dict]:
    n = int(rng.integers(1, 21))
    m = int(rng.integers(1, 21))
    p = KERNEL_EXPONENTS[int(rng.integers(0, len(KERNEL_EXPONENTS)))]
    dom = SpaceDescriptor.lp(p, range(n))
    cod = SpaceDescriptor.lp(p, range(m))
    roll = rng.random()
    if roll < 0.1:
        T = random_operator(rng, dom, cod, density=0.0)
    elif roll < 0.4:
        T = random_operator(rng, dom, cod, rank=int(rng.integers(1, min(n, m) + 1)))
    else:
        T = random_operator(rng, dom, cod)
    rep = check_duality_chain(T)
    return [{"identity": f["identity"], "witness": f.get("witness")} for f in rep["failures"]]


def _biorthogonal_instance(rng: np.random.Generator) -> list[dict]:
    universe = int(rng.integers(1, 41))
    k = int(rng.integers(1, min(30, universe) + 1))
    space = SpaceDescriptor.lp(2, range(universe))
    Y = random_family(rng, space, k, max_support=6, value_range=(-8, 8), den_max=8)
    out = []
    dim = exact.rank(Y.rows())
    sys = markushevich(Y)
    rep = certify(sys, Y)
    if not rep["ok"]:
        out.append({"identity": "oracle Markushevich conditions", "witness": rep})
    ev_rank = exact.rank({c: v for c, v in enumerate(r) if v != 0} for r in sys.evaluation_matrix())
    if ev_rank != dim:
        out.append({"identity": "evaluation rank = dim Y", "witness": {"rank": ev_rank, "dim": dim}})
    fsys = markushevich(Y.to_float())
    frep = certify(fsys, Y.to_float(), tol=1e-10)
    if not frep["ok"] or len(fsys) != dim:
        out.append({"identity": "float Markushevich conditions (1e-10)", "witness": {**frep, "dim": dim}})
    return out


def _lpsum_instance(rng: np.random.Generator) -> list[dict]:
    p = int(rng.integers(1, 4))
    n = int(rng.integers(1, 21))
    universe = int(rng.integers(n, 3 * n + 2))
    space = SpaceDescriptor.lp(p, range(universe))
    Y = random_family(rng, space, n, max_support=3, value_range=(-6, 6), den_max=4)
    dec = lp_sum_decomposition(Y, components_equivrel(Y))
    rep = isometry_check(dec, trials=1, seed=int(rng.integers(0, 2 ** 31)))
    return [{"identity": f["identity"], "witness": f} for f in rep["failures"]]


def _roundtrip_instance(rng: np.random.Generator) -> list[dict]:
    n = int(rng.integers(1, 201))
    space = SpaceDescriptor.lp(2, range(10 ** 4))
    D = random_family(rng, space, n, max_support=4, value_range=(-8, 8), den_max=2)
    rep = check_spanning_roundtrip(D, trials=5, seed=int(rng.integers(0, 2 ** 31)))
    return [{"identity": f.pop("identity"), "witness": f} for f in rep["failures"]]


SUITES: dict[str, Callable[[np.random.Generator], list[dict]]] = {
    "partition": _partition_instance,
    "dense_image": _dense_image_instance,
    "kernel": _kernel_instance,
    "duality": _duality_instance,
    "biorthogonal": _biorthogonal_instance,
    "lpsum": _lpsum_instance,
    "roundtrip": _roundtrip_instance,
}


def _run_chunk(args) -> list[dict]:
    name, seed, start, stop = args
    fn = SUITES[name]
    failures = []
    for i in range(start, stop):
        s = instance_seed(seed, i)
        try:
            found = fn(np.random.default_rng(s))
        except Exception as exc:  # a crash is a failed instance, not a dead suite
            found = [{"identity": "exception", "witness": {"error": f"{type(exc).__name__}: {exc}"}}]
        for f in found:
            failures.append({"seed": s, "identity": f["identity"], "witness": f.get("witness")})
    return failures


def run_suite(name: str, instances: int, seed: int = 0, threads: int = 1) -> dict:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    if threads <= 1 or instances < 2:
        failures = _run_chunk((name, seed, 0, instances))
    else:
        bounds = np.linspace(0, instances, threads + 1).astype(int)
        chunks = [(name, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            failures = [f for part in pool.map(_run_chunk, chunks) for f in part]
    return {"check": name, "instances": instances, "failures": failures}
