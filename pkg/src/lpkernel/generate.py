"""Seeded random families and operators.

Everything is drawn from ``numpy.random.default_rng(seed)`` in a fixed
order, so a given config always yields the same family, byte for byte once
serialised.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .operator_builder import LinearOperator
from .sparse_space import FLOAT, ORACLE, RationalArray, SpaceDescriptor, VectorFamily, family_from_rows


@dataclass(frozen=True)
class GenConfig:
    n_vectors: int
    universe_size: int
    support: tuple = ("fixed", 2)  # ("fixed", k) or ("geometric", mean)
    value_range: tuple = (-8, 8)
    den_max: int = 1
    seed: int = 0
    space: str = "lp"
    p: Fraction = Fraction(2)
    mode: str = ORACLE

    def __post_init__(self):
        kind, param = self.support
        if kind not in ("fixed", "geometric"):
            raise ValueError(f"unknown support distribution {kind!r}")
        if self.n_vectors < 0 or self.universe_size < 1:
            raise ValueError("need n_vectors >= 0 and universe_size >= 1")
        if kind == "fixed" and not 1 <= int(param) <= self.universe_size:
            raise ValueError(f"fixed support {param} does not fit a universe of {self.universe_size}")
        if kind == "geometric" and float(param) < 1:
            raise ValueError("geometric mean support must be >= 1")
        lo, hi = self.value_range
        if lo > hi or (lo == 0 and hi == 0):
            raise ValueError(f"value range {self.value_range} has no nonzero integer")
        if self.den_max < 1:
            raise ValueError("den_max must be >= 1")

    def space_descriptor(self) -> SpaceDescriptor:
        if self.space == "c0":
            return SpaceDescriptor.c0(range(self.universe_size))
        return SpaceDescriptor.lp(self.p, range(self.universe_size))


def _nonzero_ints(rng: np.random.Generator, lo: int, hi: int, size: int) -> np.ndarray:
    choices = np.array([v for v in range(lo, hi + 1) if v != 0], dtype=np.int64)
    return choices[rng.integers(0, len(choices), size)]


def generate_family(cfg: GenConfig) -> VectorFamily:
    """Random family with the configured support sizes and values.

    Coordinates are drawn uniformly with replacement and then de-duplicated
    within each vector, so a vector can come out slightly sparser than its
    drawn size when the universe is small.
    """
    rng = np.random.default_rng(cfg.seed)
    n, U = cfg.n_vectors, cfg.universe_size
    kind, param = cfg.support
    if kind == "fixed":
        sizes = np.full(n, int(param), dtype=np.int64)
    else:
        sizes = rng.geometric(1.0 / float(param), n).astype(np.int64)
    np.minimum(sizes, U, out=sizes)
    rows = np.repeat(np.arange(n, dtype=np.int64), sizes)
    pos = rng.integers(0, U, int(sizes.sum()), dtype=np.int64)
    key = rows * np.int64(U) + pos
    key.sort()
    if len(key):
        keep = np.concatenate(([True], key[1:] != key[:-1]))
        key = key[keep]
    rows = key // U
    pos = key - rows * U
    counts = np.bincount(rows, minlength=n) if n else np.zeros(0, dtype=np.int64)
    indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    nums = _nonzero_ints(rng, cfg.value_range[0], cfg.value_range[1], len(pos))
    dens = rng.integers(1, cfg.den_max + 1, len(pos), dtype=np.int64)
    if cfg.mode == FLOAT:
        values = nums / dens
    else:
        values = RationalArray(nums, dens)
    return VectorFamily(cfg.space_descriptor(), np.arange(n), indptr, pos, values, check=False)


def random_family(rng: np.random.Generator, space: SpaceDescriptor, n_vectors: int, max_support: int,
                  value_range=(-8, 8), den_max: int = 1, mode: str = ORACLE) -> VectorFamily:
    """Nonzero members with support sizes uniform in [1, max_support]."""
    U = space.size
    rows = []
    for _ in range(n_vectors):
        k = int(rng.integers(1, min(max_support, U) + 1))
        pos = rng.choice(U, size=k, replace=False)
        nums = _nonzero_ints(rng, value_range[0], value_range[1], k)
        dens = rng.integers(1, den_max + 1, k)
        if mode == FLOAT:
            rows.append({int(p): float(a) / float(b) for p, a, b in zip(pos, nums, dens)})
        else:
            rows.append({int(p): Fraction(int(a), int(b)) for p, a, b in zip(pos, nums, dens)})
    return family_from_rows(space, rows, mode)


def random_operator(rng: np.random.Generator, domain: SpaceDescriptor, codomain: SpaceDescriptor,
                    density: float | None = None, value_range=(-4, 4), rank: int | None = None) -> LinearOperator:
    """Random rational matrix; with ``rank`` given, a product of two thin factors."""
    m, n = codomain.size, domain.size
    if rank is not None:
        left = rng.integers(value_range[0], value_range[1] + 1, (m, rank))
        right = rng.integers(value_range[0], value_range[1] + 1, (rank, n))
        mat = left @ right
    else:
        density = rng.uniform(0.1, 0.6) if density is None else density
        mask = rng.random((m, n)) < density
        mat = np.where(mask, rng.integers(value_range[0], value_range[1] + 1, (m, n)), 0)
    return LinearOperator.from_dense(domain, codomain, [[int(v) for v in row] for row in mat])


def instance_seed(seed: int, i: int) -> int:
    return (int(seed) << 32) | int(i)
