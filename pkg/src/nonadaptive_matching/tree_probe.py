"""Non-adaptive tree probes.

A plan fixes a root and a list of instructions ``(a_i, b_i)``. Step ``i``
reads position ``b_i`` in the list of slot ``a_i`` and stores the answer in
slot ``i + 1``. A slot that is empty (bottom) stays empty for every step that
expands it. Slots are numbered from 1 and the root sits in slot 1. Degrees of
all vertices are handed over only after the run.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import BipartiteMultigraph
from .query import NULL, ObservedGraph

#: Marker for the bottom value in files.
BOTTOM = "NULL"


class TreePlanError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TreeProbePlan:
    """``root`` is a vertex id, or None for a root drawn uniformly at run time."""

    root: int | None
    instructions: np.ndarray
    delta_bound: int

    def __post_init__(self):
        ins = np.asarray(self.instructions, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "instructions", ins)
        if self.delta_bound < 1:
            raise TreePlanError("degree bound must be at least 1")
        if ins.size:
            steps = np.arange(1, ins.shape[0] + 1)
            bad = np.flatnonzero((ins[:, 0] < 1) | (ins[:, 0] > steps))
            if bad.size:
                i = int(bad[0]) + 1
                raise TreePlanError(f"instruction {i}: slot {ins[i - 1, 0]} is not in 1..{i}")
            bad = np.flatnonzero((ins[:, 1] < 1) | (ins[:, 1] > self.delta_bound))
            if bad.size:
                i = int(bad[0]) + 1
                raise TreePlanError(f"instruction {i}: position {ins[i - 1, 1]} is not in 1..{self.delta_bound}")

    @property
    def charged_queries(self) -> int:
        return int(self.instructions.shape[0])

    @classmethod
    def from_pairs(cls, root, pairs, delta_bound: int) -> "TreeProbePlan":
        return cls(root, np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2), delta_bound)

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            root = "random" if self.root is None else str(self.root)
            fh.write(f"root {root} delta_bound {self.delta_bound}\n")
            for a, b in self.instructions.tolist():
                fh.write(f"{a} {b}\n")

    @classmethod
    def read(cls, path: str | Path) -> "TreeProbePlan":
        with open(path) as fh:
            lines = [ln.split() for ln in fh if ln.strip()]
        if not lines or len(lines[0]) != 4 or lines[0][0] != "root" or lines[0][2] != "delta_bound":
            raise TreePlanError("plan header must read 'root <id|random> delta_bound <D>'")
        root = None if lines[0][1] == "random" else int(lines[0][1])
        pairs = [(int(a), int(b)) for a, b in lines[1:]]
        return cls.from_pairs(root, pairs, int(lines[0][3]))


@dataclass(frozen=True, eq=False)
class ProbeTranscript:
    """``discovered[s-1]`` holds slot ``s``; bottom is stored as NULL."""

    discovered: np.ndarray
    parent_slot: np.ndarray
    position: np.ndarray
    revealed_degrees: np.ndarray

    @property
    def root(self) -> int:
        return int(self.discovered[0])

    @property
    def charged_queries(self) -> int:
        return int(self.parent_slot.size)

    def parents(self) -> np.ndarray:
        """Vertex in the expanded slot at every step (NULL for bottom)."""
        return self.discovered[self.parent_slot - 1]

    def edges(self) -> np.ndarray:
        """Rows ``(step, source, target, position)`` for steps that found a vertex."""
        steps = np.arange(1, self.charged_queries + 1)
        found = self.discovered[1:] != NULL
        return np.column_stack(
            [steps[found], self.parents()[found], self.discovered[1:][found], self.position[found]]
        )

    def check_absorption(self) -> bool:
        """Every step that expands a bottom slot returned bottom."""
        bottom_parent = self.parents() == NULL
        return bool(np.all(self.discovered[1:][bottom_parent] == NULL))

    def write_csv(self, path: str | Path) -> None:
        """``step,parent_slot,position,result``; step 0 is the root."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "parent_slot", "position", "result"])
            w.writerow([0, "", "", self.root])
            for i, (a, b, u) in enumerate(
                zip(self.parent_slot.tolist(), self.position.tolist(), self.discovered[1:].tolist()), start=1
            ):
                w.writerow([i, a, b, BOTTOM if u == NULL else u])


def execute_tree_plan(
    g: BipartiteMultigraph, plan: TreeProbePlan, rng: np.random.Generator | None = None
) -> ProbeTranscript:
    if plan.root is None:
        if rng is None:
            raise TreePlanError("a random root needs an rng")
        root = int(rng.integers(g.num_vertices))
    else:
        root = int(plan.root)
    if not 0 <= root < g.num_vertices:
        raise TreePlanError(f"root {root} is not a vertex")
    q = plan.charged_queries
    slots = np.full(q + 1, NULL, dtype=np.int64)
    slots[0] = root
    offsets, targets = g.offsets, g.targets
    a_col = plan.instructions[:, 0]
    b_col = plan.instructions[:, 1]
    for i in range(q):
        u = slots[a_col[i] - 1]
        if u == NULL:
            continue
        lo = offsets[u]
        if b_col[i] <= offsets[u + 1] - lo:
            slots[i + 1] = targets[lo + b_col[i] - 1]
    return ProbeTranscript(slots, a_col.copy(), b_col.copy(), g.degrees.copy())


def execute_forest_plan(
    g: BipartiteMultigraph, plans: list[TreeProbePlan], rng: np.random.Generator | None = None
) -> list[ProbeTranscript]:
    """Independent runs; the charged total is the sum over trees."""
    return [execute_tree_plan(g, p, rng) for p in plans]


def transcript_to_observed_graph(*transcripts: ProbeTranscript) -> ObservedGraph:
    """Observed edges of one or more transcripts, in the flat-model container."""
    src, dst, pos, probed = [], [], [], []
    for t in transcripts:
        e = t.edges()
        src.append(e[:, 1])
        dst.append(e[:, 2])
        pos.append(e[:, 3])
        parents = t.parents()
        probed.append(parents[parents != NULL])
    if not src:
        empty = np.zeros(0, dtype=np.int64)
        return ObservedGraph.from_edges(empty, empty, empty, empty)
    return ObservedGraph.from_edges(*(np.concatenate(x) for x in (src, dst, pos, probed)))


def random_tree_plan(
    q: int, delta_bound: int, rng: np.random.Generator, max_position: int | None = None, root: int | None = None
) -> TreeProbePlan:
    """Random recursive tree: step ``i`` expands a uniform slot in ``1..i``.

    Positions are uniform on ``1..max_position`` (default: the declared bound).
    """
    top = delta_bound if max_position is None else min(max_position, delta_bound)
    steps = np.arange(1, q + 1)
    a = 1 + np.floor(rng.random(q) * steps).astype(np.int64)
    b = rng.integers(1, top + 1, size=q)
    return TreeProbePlan(root, np.column_stack([a, b]), delta_bound)


def random_forest_plan(
    q: int, delta_bound: int, rng: np.random.Generator, trees: int | None = None, max_position: int | None = None
) -> list[TreeProbePlan]:
    """About ``sqrt(q)`` random recursive trees with random roots, ``q`` instructions in total."""
    if q == 0:
        return []
    trees = trees if trees is not None else max(1, math.isqrt(q))
    sizes = np.full(trees, q // trees)
    sizes[: q % trees] += 1
    return [random_tree_plan(int(s), delta_bound, rng, max_position) for s in sizes if s > 0]
