"""Support-intersection structure of a vector family and its disjoint partition.

Two vectors are linked when their supports meet; the classes of the
transitive closure of that relation are the components. Enumerating every
component in vector-id order and sending its n-th member to group n gives
groups whose members have pairwise disjoint supports.

Both component algorithms work on the coordinate incidence index, so their
cost is linear in the total support size rather than in the (possibly
quadratic) number of intersecting pairs.
"""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _engine
from .sparse_space import VectorFamily


class ZeroMemberError(ValueError):
    """A family handed to the component algorithms contains a zero vector."""

    def __init__(self, vector_id: int):
        super().__init__(f"zero member: vector_id={vector_id}")
        self.vector_id = vector_id


@dataclass(frozen=True)
class IncidenceIndex:
    """For each touched coordinate, the ids of members whose support hits it."""

    family: VectorFamily
    coords: np.ndarray
    indptr: np.ndarray
    rows: np.ndarray
    entry_coord: np.ndarray

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, label) -> tuple[int, ...]:
        pos = self.family.space.position(label)
        c = int(np.searchsorted(self.coords, pos))
        if c >= len(self.coords) or self.coords[c] != pos:
            return ()
        return tuple(self.family.ids[self.rows[self.indptr[c]:self.indptr[c + 1]]].tolist())

    @property
    def per_coordinate(self) -> dict:
        lab = self.family.space.label
        ids = self.family.ids
        return {
            lab(int(pos)): tuple(ids[self.rows[self.indptr[c]:self.indptr[c + 1]]].tolist())
            for c, pos in enumerate(self.coords)
        }


@dataclass(frozen=True)
class ComponentDecomposition:
    """Component of every member, named by its least vector id.

    ``component_of`` is aligned with the family's row order.
    """

    ids: np.ndarray
    component_of: np.ndarray

    def __len__(self):
        return len(self.ids)

    def of(self, vector_id: int) -> int:
        i = int(np.searchsorted(self.ids, vector_id))
        if i >= len(self.ids) or self.ids[i] != vector_id:
            raise KeyError(vector_id)
        return int(self.component_of[i])

    @cached_property
    def components(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for vid, cid in zip(self.ids.tolist(), self.component_of.tolist()):
            out.setdefault(cid, []).append(vid)
        return out

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.ids.tolist(), self.component_of.tolist()))

    def sizes(self) -> np.ndarray:
        if len(self.ids) == 0:
            return np.zeros(0, dtype=np.int64)
        _, counts = np.unique(self.component_of, return_counts=True)
        return counts

    def __eq__(self, other):
        if not isinstance(other, ComponentDecomposition):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(self.component_of, other.component_of)


@dataclass(frozen=True)
class DisjointPartition:
    """Groups D_1, D_2, ... of vector ids; ``group_of`` is 0-based, row-aligned."""

    ids: np.ndarray
    group_of: np.ndarray

    @property
    def n_groups(self) -> int:
        return int(self.group_of.max()) + 1 if len(self.group_of) else 0

    @cached_property
    def groups(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_groups)]
        for vid, g in zip(self.ids.tolist(), self.group_of.tolist()):
            out[g].append(vid)
        return out

    def group(self, n: int) -> list[int]:
        """Members of group ``n``, counting from 1."""
        return self.groups[n - 1]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.ids, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.group_of, dtype="<i8").tobytes())
        return h.hexdigest()

    def to_json(self) -> dict:
        return {"groups": self.groups}


def _require_nonzero(D: VectorFamily):
    sizes = np.diff(D.indptr)
    bad = np.flatnonzero(sizes == 0)
    if len(bad):
        raise ZeroMemberError(int(D.ids[bad[0]]))


def build_incidence(D: VectorFamily) -> IncidenceIndex:
    coords, indptr, rows, entry_coord = _engine.incidence_csr(D.indptr, D.positions)
    return IncidenceIndex(D, coords, indptr, rows, entry_coord)


def components_equivrel(D: VectorFamily, incidence: IncidenceIndex | None = None) -> ComponentDecomposition:
    """Classes of the chained-intersection relation, via a disjoint-set forest."""
    _require_nonzero(D)
    inc = incidence or build_incidence(D)
    rep = _engine.union_find_components(len(D), inc.indptr, inc.rows)
    return ComponentDecomposition(D.ids, D.ids[rep])


def components_graph(D: VectorFamily, incidence: IncidenceIndex | None = None) -> ComponentDecomposition:
    """Connected components of the support-intersection graph, via BFS."""
    _require_nonzero(D)
    inc = incidence or build_incidence(D)
    rep = _engine.bfs_components(len(D), D.indptr, inc.entry_coord, len(inc.coords), inc.indptr, inc.rows)
    return ComponentDecomposition(D.ids, D.ids[rep])


def disjoint_partition(D: VectorFamily, comp: ComponentDecomposition) -> DisjointPartition:
    """Put the n-th member (by id) of every component into group n."""
    if not np.array_equal(comp.ids, D.ids):
        raise ValueError("component decomposition was computed for a different family")
    return DisjointPartition(D.ids, _engine.rank_within_components(comp.component_of))


def partition_family(D: VectorFamily, algo: str = "equivrel"):
    """Partition a family in one call, starting from its incidence index.

    ``algo`` is ``"equivrel"``, ``"graph"`` or ``"both"``; with ``"both"``
    the two decompositions are compared and a mismatch raises.
    """
    inc = build_incidence(D)
    if algo == "graph":
        comp = components_graph(D, inc)
    else:
        comp = components_equivrel(D, inc)
        if algo == "both":
            other = components_graph(D, inc)
            if comp != other:
                raise AssertionError("union-find and BFS components disagree")
        elif algo != "equivrel":
            raise ValueError(f"unknown algorithm {algo!r}")
    return comp, disjoint_partition(D, comp)


def partition_violations(D: VectorFamily, part: DisjointPartition) -> list[dict]:
    """Soundness and completeness problems of ``part`` (empty list if none)."""
    problems: list[dict] = []
    nonzero = np.diff(D.indptr) > 0
    if not np.array_equal(part.ids, D.ids):
        problems.append({"identity": "coverage", "detail": "partition ids differ from family ids"})
        return problems
    if np.any(part.group_of[nonzero] < 0):
        problems.append({"identity": "coverage", "detail": "nonzero member left out"})
    rows = np.repeat(np.arange(len(D)), np.diff(D.indptr))
    key = part.group_of[rows].astype(np.int64) * np.int64(D.space.size) + D.positions
    uniq, first, counts = np.unique(key, return_index=True, return_counts=True)
    clash = np.flatnonzero(counts > 1)
    if len(clash):
        k = uniq[clash[0]]
        hit = rows[key == k]
        problems.append({
            "identity": "disjoint supports",
            "group": int(k // D.space.size) + 1,
            "coordinate": D.space.label(int(k % D.space.size)),
            "vector_ids": D.ids[hit].tolist(),
        })
    return problems


def partition_report(D: VectorFamily, comp: ComponentDecomposition, part: DisjointPartition) -> dict:
    sizes = comp.sizes()
    hist = sorted(Counter(sizes.tolist()).items())
    return {
        "n_vectors": int(len(D)),
        "n_components": int(len(sizes)),
        "max_component": int(sizes.max()) if len(sizes) else 0,
        "n_groups": part.n_groups,
        "component_size_histogram": [[int(s), int(c)] for s, c in hist],
    }
