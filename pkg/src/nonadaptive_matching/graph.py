"""Bipartite multigraphs in adjacency-list form and the matching oracles.

Vertex ids are dense: ``0 .. left_count-1`` is the left side and
``left_count .. left_count+right_count-1`` the right side. Each adjacency row
is ordered, and that order is exactly what the adjacency-list oracle returns,
so two graphs with the same edges in a different order are different inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import _kernels


class VertexClass(enum.IntEnum):
    A = 0
    B = 1
    D = 2


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BipartiteMultigraph:
    left_count: int
    right_count: int
    offsets: np.ndarray
    targets: np.ndarray
    class_of: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_vertices(self) -> int:
        return self.left_count + self.right_count

    @property
    def num_edges(self) -> int:
        """Edge count with multiplicity."""
        return int(self.targets.size // 2)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.targets[self.offsets[v] : self.offsets[v + 1]]

    def is_left(self, v: int) -> bool:
        return 0 <= v < self.left_count

    def left_vertices(self) -> np.ndarray:
        return np.arange(self.left_count)

    def right_vertices(self) -> np.ndarray:
        return np.arange(self.left_count, self.num_vertices)

    @classmethod
    def from_edges(
        cls,
        left_count: int,
        right_count: int,
        edges: Iterable[tuple[int, int]] | np.ndarray,
        class_of: np.ndarray | None = None,
    ) -> "BipartiteMultigraph":
        """Build from (left, right) pairs; each row lists its edges in input order."""
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        us, vs = arr[:, 0], arr[:, 1]
        n = left_count + right_count
        if arr.size and (
            us.min() < 0 or us.max() >= left_count or vs.min() < left_count or vs.max() >= n
        ):
            raise GraphError("edges must join a left vertex to a right vertex")
        offsets, targets = _kernels.fill_csr(n, us, vs, np.arange(n, dtype=np.int64))
        return cls(left_count, right_count, offsets, targets, class_of)

    @classmethod
    def from_adjacency(
        cls, left_count: int, right_count: int, lists: Sequence[Sequence[int]]
    ) -> "BipartiteMultigraph":
        """Build from explicit per-vertex lists; raises unless they describe a valid graph."""
        n = left_count + right_count
        if len(lists) != n:
            raise GraphError(f"expected {n} adjacency lists, got {len(lists)}")
        offsets = np.zeros(n + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(row) for row in lists])
        flat = [x for row in lists for x in row]
        targets = np.asarray(flat, dtype=np.int32) if flat else np.zeros(0, dtype=np.int32)
        g = cls(left_count, right_count, offsets, targets)
        g.validate()
        return g

    def validate(self) -> None:
        """Check the bipartite and reverse-multiplicity invariants."""
        n = self.num_vertices
        if self.offsets.size != n + 1 or self.offsets[0] != 0 or self.offsets[-1] != self.targets.size:
            raise GraphError("malformed offsets")
        src = np.repeat(np.arange(n, dtype=np.int64), self.degrees)
        dst = self.targets.astype(np.int64)
        if dst.size and (dst.min() < 0 or dst.max() >= n):
            raise GraphError("neighbor id out of range")
        if np.any((src < self.left_count) == (dst < self.left_count)):
            raise GraphError("edge inside one side")
        fwd = np.sort(src * n + dst)
        rev = np.sort(dst * n + src)
        if not np.array_equal(fwd, rev):
            raise GraphError("adjacency is not symmetric with multiplicity")

    def edge_array(self) -> np.ndarray:
        """All edges as (left, right) rows, with multiplicity, in left-row order."""
        src = np.repeat(np.arange(self.left_count, dtype=np.int64), self.degrees[: self.left_count])
        dst = self.targets[: self.offsets[self.left_count]].astype(np.int64)
        return np.column_stack([src, dst])

    def simple_edge_array(self) -> np.ndarray:
        """Distinct (left, right) pairs, sorted."""
        return np.unique(self.edge_array(), axis=0)

    def write_text(self, path: str | Path) -> None:
        """Header ``n_left n_right`` then one line per vertex, left side first.

        Readers that stop after the left lines still recover the edge multiset;
        the right lines pin down right-side adjacency order.
        """
        with open(path, "w") as fh:
            fh.write(f"{self.left_count} {self.right_count}\n")
            for v in range(self.num_vertices):
                fh.write(" ".join(map(str, self.neighbors(v).tolist())) + "\n")

    @classmethod
    def read_text(cls, path: str | Path) -> "BipartiteMultigraph":
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise GraphError("empty graph file")
        n_left, n_right = (int(x) for x in lines[0].split())
        rows = [[int(x) for x in line.split()] for line in lines[1:]]
        if len(rows) == n_left + n_right:
            return cls.from_adjacency(n_left, n_right, rows)
        if len(rows) != n_left:
            raise GraphError(f"expected {n_left} or {n_left + n_right} vertex lines, got {len(rows)}")
        edges = [(u, v) for u, row in enumerate(rows) for v in row]
        return cls.from_edges(n_left, n_right, edges)


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]

    @property
    def size(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def is_valid(self) -> bool:
        seen: set[int] = set()
        for u, v in self.pairs:
            if u == v or u in seen or v in seen:
                return False
            seen.add(u)
            seen.add(v)
        return True


def _biadjacency(g: BipartiteMultigraph) -> csr_matrix:
    edges = g.edge_array()
    data = np.ones(len(edges), dtype=np.int8)
    m = csr_matrix(
        (data, (edges[:, 0], edges[:, 1] - g.left_count)),
        shape=(g.left_count, g.right_count),
    )
    m.sum_duplicates()
    return m


def _max_matching_columns(g: BipartiteMultigraph) -> np.ndarray:
    if g.left_count == 0 or g.right_count == 0:
        return np.full(g.left_count, -1, dtype=np.int64)
    return maximum_bipartite_matching(_biadjacency(g), perm_type="column")


def exact_maximum_matching(g: BipartiteMultigraph) -> Matching:
    """Maximum matching by Hopcroft-Karp phases (scipy's compiled routine)."""
    cols = _max_matching_columns(g)
    rows = np.flatnonzero(cols >= 0)
    return Matching(tuple((int(u), int(cols[u]) + g.left_count) for u in rows))


def minimum_vertex_cover(g: BipartiteMultigraph) -> np.ndarray:
    """Koenig's construction from a maximum matching.

    Let Z be everything reachable from free left vertices by alternating
    paths. The cover is (L minus Z) together with (R intersect Z).
    """
    cols = _max_matching_columns(g)
    match_right = np.full(g.right_count, -1, dtype=np.int64)
    matched_left = np.flatnonzero(cols >= 0)
    match_right[cols[matched_left]] = matched_left
    if g.left_count == 0 or g.right_count == 0:
        return np.zeros(0, dtype=np.int64)
    adj = _biadjacency(g)
    seen_left = np.zeros(g.left_count, dtype=bool)
    seen_right = np.zeros(g.right_count, dtype=bool)
    stack = [int(u) for u in np.flatnonzero(cols < 0)]
    seen_left[stack] = True
    while stack:
        u = stack.pop()
        for r in adj.indices[adj.indptr[u] : adj.indptr[u + 1]]:
            if seen_right[r] or cols[u] == r:
                continue
            seen_right[r] = True
            w = match_right[r]
            if w >= 0 and not seen_left[w]:
                seen_left[w] = True
                stack.append(int(w))
    left_part = np.flatnonzero(~seen_left)
    right_part = np.flatnonzero(seen_right) + g.left_count
    return np.concatenate([left_part, right_part])


def min_vertex_cover_size_exact(g: BipartiteMultigraph) -> int:
    return int(minimum_vertex_cover(g).size)


def greedy_maximal_matching(edges: Iterable[tuple[int, int]] | np.ndarray) -> Matching:
    """One pass over the stream; an edge is taken when both endpoints are free.

    Ids are global vertex ids. Duplicates and reversed copies of an edge never
    change the outcome, so no deduplication pass is needed.
    """
    arr = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return Matching(())
    if arr.min() < 0:
        raise GraphError("vertex ids must be non-negative")
    keep = _kernels.greedy_mask(arr[:, 0], arr[:, 1], int(arr.max()) + 1)
    return Matching(tuple((int(u), int(v)) for u, v in arr[keep]))


def greedy_matching_size(us: np.ndarray, vs: np.ndarray, n_ids: int) -> int:
    """Size-only greedy pass for large edge streams already split into arrays."""
    if us.size == 0:
        return 0
    return int(_kernels.greedy_mask(us, vs, n_ids).sum())
