"""Non-adaptive n^delta-approximation of the maximum matching size.

Every vertex draws about ``80 n^(1-2 delta) ln n`` random neighbors through a
single degree-guessing plan. The estimate is the size of a greedy maximal
matching over the returned edges, taken in plan order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import BipartiteMultigraph, greedy_matching_size
from .query import answer_plan, build_random_neighbor_plan, extract_random_neighbor_answers

DEFAULT_CONSTANT = 80.0


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class EstimateResult:
    estimate: int
    charged_queries: int
    sampled_edge_count: int
    per_vertex_rate: float


def per_vertex_rate(n: int, delta: float, constant: float = DEFAULT_CONSTANT) -> float:
    """Random neighbors requested per vertex; below 1 it acts as a sampling probability."""
    if not 0 < delta < 1:
        raise EstimatorError("delta must lie in (0, 1)")
    if n < 1:
        raise EstimatorError("n must be positive")
    return constant * n ** (1 - 2 * delta) * math.log(n)


def query_scale(n: int, delta: float) -> float:
    """``n^(2-2 delta) ln^2 n``, the growth rate the charged queries should follow."""
    return n ** (2 - 2 * delta) * math.log(n) ** 2


def estimate_matching_size(
    graph: BipartiteMultigraph,
    n: int,
    delta: float,
    rng: np.random.Generator,
    constant: float = DEFAULT_CONSTANT,
    max_degree_bound: int | None = None,
) -> EstimateResult:
    """Estimate mu(graph) from oracle answers only.

    ``n`` is the scale the sampling rate is computed at; for a hard instance
    it is the instance parameter, not the vertex count. The degree bound
    defaults to the larger side.
    """
    q = per_vertex_rate(n, delta, constant)
    n_ids = graph.num_vertices
    if n_ids == 0:
        return EstimateResult(0, 0, 0, q)
    bound = max_degree_bound if max_degree_bound is not None else max(graph.left_count, graph.right_count, 1)
    plan = build_random_neighbor_plan(np.arange(n_ids), q, bound, rng)
    answers = answer_plan(graph, plan)
    src, dst = extract_random_neighbor_answers(answers)
    size = greedy_matching_size(src, dst, n_ids)
    return EstimateResult(size, plan.charged_queries, int(src.size), q)


def estimate_vertex_cover_size(
    graph: BipartiteMultigraph,
    n: int,
    delta: float,
    rng: np.random.Generator,
    constant: float = DEFAULT_CONSTANT,
    max_degree_bound: int | None = None,
) -> EstimateResult:
    """Vertex-cover size estimate.

    On bipartite inputs the cover and matching sizes coincide, so this is the
    matching estimate itself. For a general graph the same number is within a
    further factor 2 of the minimum cover.
    """
    return estimate_matching_size(graph, n, delta, rng, constant, max_degree_bound)
