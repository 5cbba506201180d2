"""Non-adaptive adjacency-list access.

A client commits to a whole plan of ``(vertex, index)`` probes and hands it to
:func:`answer_plan`, the only oracle entry point. Nothing in a plan can depend
on an answer, because answers do not exist until the plan is frozen.

Degree probes ride along with a plan and are not charged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from . import _kernels
from .graph import BipartiteMultigraph
from .rng import kernel_seed

NULL = _kernels.NULL

#: Probes generated per block when a degree-guessing plan is streamed.
BLOCK_PROBES = 1 << 21


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class ProbeBlock:
    vertices: np.ndarray
    indices: np.ndarray
    levels: np.ndarray | None
    answers: np.ndarray


@dataclass(frozen=True, eq=False)
class QueryPlan:
    """An explicit probe list; ``indices`` are 1-based."""

    vertices: np.ndarray
    indices: np.ndarray
    degree_probes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.int64).ravel()
        i = np.asarray(self.indices, dtype=np.int64).ravel()
        if v.shape != i.shape:
            raise PlanError("vertices and indices differ in length")
        if i.size and i.min() < 1:
            raise PlanError("probe indices are 1-based")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "indices", i)
        object.__setattr__(self, "degree_probes", np.unique(np.asarray(self.degree_probes, dtype=np.int64)))

    @classmethod
    def from_pairs(cls, probes, degree_probes=()) -> "QueryPlan":
        arr = np.asarray(list(probes), dtype=np.int64).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], np.asarray(list(degree_probes), dtype=np.int64))

    @property
    def charged_queries(self) -> int:
        return int(self.vertices.size)

    def probed_vertices(self) -> np.ndarray:
        return np.concatenate([self.vertices, self.degree_probes])


@dataclass(frozen=True, eq=False)
class RandomNeighborPlan:
    """Degree-guessing plan in compact form.

    Every sample of a vertex is one probe per guess level ``j`` in
    ``0..num_levels-1``, at an index uniform on ``[1, 2**j]``. The probes are a
    fixed function of the fields (the seed included) and are generated in
    blocks only when the plan is answered.
    """

    vertices: np.ndarray
    samples: np.ndarray
    num_levels: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.int64).ravel())
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.int64).ravel())
        if self.vertices.shape != self.samples.shape:
            raise PlanError("one sample count per vertex is required")
        if self.num_levels < 1:
            raise PlanError("need at least one guess level")

    @property
    def degree_probes(self) -> np.ndarray:
        return np.unique(self.vertices)

    @property
    def charged_queries(self) -> int:
        return int(self.samples.sum()) * self.num_levels

    def probed_vertices(self) -> np.ndarray:
        return self.vertices

    def _block_bounds(self) -> list[tuple[int, int]]:
        per_vertex = self.samples * self.num_levels
        bounds, start, acc = [], 0, 0
        for a, c in enumerate(per_vertex.tolist()):
            if acc and acc + c > BLOCK_PROBES:
                bounds.append((start, a))
                start, acc = a, 0
            acc += c
        if start < self.vertices.size:
            bounds.append((start, self.vertices.size))
        return bounds

    def iter_block_args(self) -> Iterator[tuple[np.ndarray, np.ndarray, int, int]]:
        """``(vertices, samples, num_levels, seed)`` of every block, in plan order."""
        for b, (lo, hi) in enumerate(self._block_bounds()):
            block_seed = int(np.random.SeedSequence([self.seed, b]).generate_state(1)[0])
            yield self.vertices[lo:hi], self.samples[lo:hi], self.num_levels, block_seed

    def iter_probes(self) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        for args in self.iter_block_args():
            yield _kernels.random_neighbor_block(*args)

    def materialize(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All probes as ``(vertices, indices, levels)``; for small plans."""
        parts = list(self.iter_probes())
        if not parts:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0, dtype=np.int8)
        return tuple(np.concatenate(col) for col in zip(*parts))


Plan = Union[QueryPlan, RandomNeighborPlan]


def num_guess_levels(max_degree_bound: int) -> int:
    """``ceil(log2 bound) + 1`` levels, so the top guess covers the bound."""
    if max_degree_bound < 1:
        raise PlanError("max_degree_bound must be at least 1")
    return (int(max_degree_bound) - 1).bit_length() + 1


def guess_level(degree: int) -> int:
    """Smallest ``j`` with ``degree <= 2**j``."""
    return (int(degree) - 1).bit_length() if degree > 0 else 0


def build_random_neighbor_plan(
    v_set,
    samples_per_vertex: float,
    max_degree_bound: int,
    rng: np.random.Generator,
) -> RandomNeighborPlan:
    """Random-neighbor probes for each vertex of ``v_set``.

    A rate below 1 gives each vertex a single sample with that probability;
    otherwise every vertex gets ``ceil(samples_per_vertex)`` samples.
    """
    vertices = np.asarray(v_set, dtype=np.int64).ravel()
    if samples_per_vertex < 0:
        raise PlanError("negative sample rate")
    if samples_per_vertex < 1:
        samples = (rng.random(vertices.size) < samples_per_vertex).astype(np.int64)
    else:
        samples = np.full(vertices.size, int(np.ceil(samples_per_vertex)), dtype=np.int64)
    return RandomNeighborPlan(vertices, samples, num_guess_levels(max_degree_bound), kernel_seed(rng))


class QueryAnswerSet:
    """Answers to one plan. Degree-guessing plans are answered block by block."""

    def __init__(self, graph: BipartiteMultigraph, plan: Plan, degrees: np.ndarray):
        self._graph = graph
        self.plan = plan
        #: Degree of every vertex named in ``plan.degree_probes``; -1 elsewhere.
        self.degrees = degrees
        self._explicit: np.ndarray | None = None
        if isinstance(plan, QueryPlan):
            self._explicit = _kernels.gather_answers(graph.offsets, graph.targets, plan.vertices, plan.indices)

    def iter_blocks(self) -> Iterator[ProbeBlock]:
        if isinstance(self.plan, QueryPlan):
            yield ProbeBlock(self.plan.vertices, self.plan.indices, None, self._explicit)
            return
        g = self._graph
        for pv, pi, pl in self.plan.iter_probes():
            yield ProbeBlock(pv, pi, pl, _kernels.gather_answers(g.offsets, g.targets, pv, pi))

    def iter_retained(self, degrees: np.ndarray) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Per block, the probes kept by the degree-level rule; same result as filtering :meth:`iter_blocks`."""
        g = self._graph
        for args in self.plan.iter_block_args():
            yield _kernels.random_neighbor_retained(*args, g.offsets, g.targets, degrees)

    @property
    def answers(self) -> np.ndarray:
        if self._explicit is not None:
            return self._explicit
        parts = [b.answers for b in self.iter_blocks()]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    def degree(self, v: int) -> int:
        d = int(self.degrees[v])
        if d < 0:
            raise KeyError(f"degree of {v} was not requested")
        return d


def answer_plan(g: BipartiteMultigraph, plan: Plan) -> QueryAnswerSet:
    """Answer a whole plan: ``(v, i)`` gives the i-th neighbor of v, or NULL past deg(v)."""
    ids = plan.probed_vertices()
    if ids.size and (ids.min() < 0 or ids.max() >= g.num_vertices):
        raise PlanError("plan probes a vertex id outside the graph")
    degrees = np.full(g.num_vertices, -1, dtype=np.int64)
    dp = plan.degree_probes
    degrees[dp] = g.degrees[dp]
    return QueryAnswerSet(g, plan, degrees)


def extract_random_neighbor_answers(
    answers: QueryAnswerSet, degrees: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform random neighbors recovered from a degree-guessing plan.

    For each vertex only the level ``j`` with ``2**(j-1) < deg <= 2**j`` is
    used, and only its probes with index at most ``deg``. A vertex whose degree
    exceeds the top guess contributes nothing. Returns ``(sources, neighbors)``
    in plan order.
    """
    if not isinstance(answers.plan, RandomNeighborPlan):
        raise PlanError("random-neighbor extraction needs a degree-guessing plan")
    deg = answers.degrees if degrees is None else np.asarray(degrees, dtype=np.int64)
    src, dst = [], []
    for s, d in answers.iter_retained(deg):
        src.append(s)
        dst.append(d)
    if not src:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(src), np.concatenate(dst)


@dataclass(frozen=True, eq=False)
class ObservedGraph:
    """Directed edges revealed by answered probes, each labeled with its list position."""

    sources: np.ndarray
    targets: np.ndarray
    positions: np.ndarray
    queried: np.ndarray
    queries_per_vertex: np.ndarray

    @property
    def num_edges(self) -> int:
        return int(self.sources.size)

    def probe_count(self, v: int) -> int:
        k = np.searchsorted(self.queried, v)
        if k < self.queried.size and self.queried[k] == v:
            return int(self.queries_per_vertex[k])
        return 0

    @classmethod
    def from_edges(cls, sources, targets, positions, probe_vertices) -> "ObservedGraph":
        s = np.asarray(sources, dtype=np.int64)
        t = np.asarray(targets, dtype=np.int64)
        p = np.asarray(positions, dtype=np.int64)
        if s.size:
            # a repeated probe re-reads the same slot; keep the first reading
            _, first = np.unique(np.column_stack([s, p]), axis=0, return_index=True)
            first.sort()
            s, t, p = s[first], t[first], p[first]
        queried, counts = np.unique(np.asarray(probe_vertices, dtype=np.int64), return_counts=True)
        return cls(s, t, p, queried, counts)


def observed_graph_from(plan: Plan, answers: QueryAnswerSet) -> ObservedGraph:
    src, dst, pos, probed = [], [], [], []
    for block in answers.iter_blocks():
        hit = block.answers != NULL
        src.append(block.vertices[hit])
        dst.append(block.answers[hit])
        pos.append(block.indices[hit])
        probed.append(block.vertices)
    if not src:
        empty = np.zeros(0, dtype=np.int64)
        return ObservedGraph.from_edges(empty, empty, empty, empty)
    return ObservedGraph.from_edges(
        np.concatenate(src), np.concatenate(dst), np.concatenate(pos), np.concatenate(probed)
    )


@dataclass(frozen=True)
class QueryBudgetReport:
    charged_queries: int
    budget: int

    @property
    def within_budget(self) -> bool:
        return self.charged_queries <= self.budget


def budget_report(plan: Plan, budget: int) -> QueryBudgetReport:
    return QueryBudgetReport(plan.charged_queries, int(budget))


def write_answers_csv(path: str | Path, answers: QueryAnswerSet) -> None:
    """Rows ``vertex,index,answer``; an out-of-range probe is written as ``NULL``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex", "index", "answer"])
        for block in answers.iter_blocks():
            for v, i, a in zip(block.vertices.tolist(), block.indices.tolist(), block.answers.tolist()):
                w.writerow([v, i, "NULL" if a == NULL else a])


def read_answers_csv(path: str | Path) -> tuple[QueryPlan, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    plan = QueryPlan([int(r["vertex"]) for r in rows], [int(r["index"]) for r in rows])
    ans = np.array([NULL if r["answer"] == "NULL" else int(r["answer"]) for r in rows], dtype=np.int64)
    return plan, ans
