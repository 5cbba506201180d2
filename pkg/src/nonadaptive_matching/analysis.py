"""Structural statistics of observed core edges and the multi-trial experiment runner."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .distinguishers import (
    Verdict,
    birthday_distinguisher,
    third_root_distinguisher,
    two_round_distinguisher,
)
from .graph import VertexClass, exact_maximum_matching
from .instance import InstanceParams, LabeledInstance, World, generate, public_view
from .query import ObservedGraph, QueryPlan, answer_plan, observed_graph_from
from .rng import child_rng
from .tree_probe import (
    ProbeTranscript,
    TreeProbePlan,
    execute_forest_plan,
    random_forest_plan,
    random_tree_plan,
    transcript_to_observed_graph,
)

CSV_COLUMNS = (
    "trial", "world", "n", "delta", "epsilon", "q", "obs_core_edges", "happy", "star_ok",
    "multi_edge_viol", "shared_petal_viol", "happy_endpoint_viol", "max_d_indeg", "mu_exact",
    "verdict", "verdict_correct",
)
MODELS = ("flat", "tree", "forest")
VERDICT_RULES = ("certificate", "birthday", "third-root", "two-round", "none")


@dataclass(frozen=True)
class HeavyLevel:
    tau: int
    count: int
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.count <= self.bound


@dataclass(frozen=True)
class CoreStructureReport:
    observed_core_edge_count: int
    happy_vertex_count: int
    happy_endpoint_violations: int
    shared_petal_violations: int
    multi_edge_violations: int
    heavy_census: tuple[HeavyLevel, ...]
    max_d_indegree: int
    star_sizes: tuple[int, ...] = ()

    @property
    def star_union_ok(self) -> bool:
        return (
            self.happy_endpoint_violations == 0
            and self.shared_petal_violations == 0
            and self.multi_edge_violations == 0
        )


def heavy_levels(n: int, delta: float, epsilon: float) -> list[tuple[int, float]]:
    """``(2^i, 2^-i 8 n^(2eps+delta) ln^2 n)`` for every integer i in the census range."""
    ln = math.log(n)
    lo = math.ceil(math.log2(n**epsilon * ln))
    hi = math.floor(math.log2(16 * n ** (2 * epsilon + delta) * ln**2))
    scale = 8 * n ** (2 * epsilon + delta) * ln**2
    return [(2**i, scale / 2**i) for i in range(max(lo, 0), hi + 1)]


def observed_core_bound(n: int, delta: float, epsilon: float) -> float:
    """``4 n^(eps+delta) ln n``."""
    return 4 * n ** (epsilon + delta) * math.log(n)


def d_indegree_bound(n: int, epsilon: float) -> float:
    return 4 * n**epsilon


def _core_edges(obs: ObservedGraph, core: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = core[obs.sources] & core[obs.targets]
    return obs.sources[keep], obs.targets[keep]


def _probe_counts(obs: ObservedGraph, n_ids: int) -> np.ndarray:
    counts = np.zeros(n_ids, dtype=np.int64)
    counts[obs.queried] = obs.queries_per_vertex
    return counts


def d_indegree_check(obs: ObservedGraph, ground_truth: LabeledInstance) -> tuple[int, dict[int, int]]:
    """Observed edges from D into each core vertex: the maximum and a histogram ``{indegree: #core vertices}``."""
    cls = ground_truth.class_of
    hit = (cls[obs.sources] == VertexClass.D) & (cls[obs.targets] != VertexClass.D)
    indeg = np.bincount(obs.targets[hit], minlength=cls.size)[cls != VertexClass.D]
    values, counts = np.unique(indeg, return_counts=True)
    return int(indeg.max(initial=0)), dict(zip(values.tolist(), counts.tolist()))


def analyze_observed_core(obs: ObservedGraph, ground_truth: LabeledInstance) -> CoreStructureReport:
    """Happy vertices, star decomposition, tau-heavy census and D in-degree of one observation.

    Observed core edges form a disjoint union of stars exactly when no petal
    is itself happy, no two centers share a petal and no center sees the same
    petal twice. Each failure mode is counted separately.
    """
    p = ground_truth.params
    core = ground_truth.class_of != VertexClass.D
    n_ids = core.size
    src, dst = _core_edges(obs, core)

    happy = np.unique(src)
    happy_mask = np.zeros(n_ids, dtype=bool)
    happy_mask[happy] = True
    happy_endpoint = int(np.sum(happy_mask[dst]))

    pairs, mult = np.unique(np.column_stack([src, dst]), axis=0, return_counts=True)
    multi = int(np.sum(mult - 1))
    distinct_sources = np.bincount(pairs[:, 1], minlength=n_ids) if pairs.size else np.zeros(n_ids, np.int64)
    shared = int(np.sum(distinct_sources * (distinct_sources - 1) // 2))

    probes = _probe_counts(obs, n_ids)
    petal_load = probes[dst]
    census = tuple(
        HeavyLevel(tau, int(np.sum(petal_load >= tau)), bound) for tau, bound in heavy_levels(p.n, p.delta, p.epsilon)
    )
    max_d, _ = d_indegree_check(obs, ground_truth)
    stars = tuple(np.bincount(np.searchsorted(happy, src)).tolist()) if src.size else ()
    return CoreStructureReport(
        observed_core_edge_count=int(src.size),
        happy_vertex_count=int(happy.size),
        happy_endpoint_violations=happy_endpoint,
        shared_petal_violations=shared,
        multi_edge_violations=multi,
        heavy_census=census,
        max_d_indegree=max_d,
        star_sizes=stars,
    )


def core_two_paths(t: ProbeTranscript, core: np.ndarray) -> int:
    """Steps whose edge and whose parent's discovering edge are both core edges."""
    e = t.edges()
    if e.size == 0:
        return 0
    slot_core_edge = np.zeros(t.charged_queries + 2, dtype=bool)
    is_core = core[e[:, 1]] & core[e[:, 2]]
    # slot s+1 was discovered by step s
    slot_core_edge[e[:, 0] + 1] = is_core
    parent_slots = t.parent_slot[e[:, 0] - 1]
    return int(np.sum(is_core & slot_core_edge[parent_slots]))


def flat_uniform_plan(params: InstanceParams, q: int, rng: np.random.Generator) -> QueryPlan:
    """``q`` probes with the vertex uniform over all labels and the index uniform on ``1..d*``."""
    n_ids = 2 * params.n_prime
    v = rng.integers(0, n_ids, size=q)
    i = rng.integers(1, params.d_star + 1, size=q)
    return QueryPlan(v, i, degree_probes=np.arange(n_ids))


def certificate_verdict(obs: ObservedGraph, degrees: np.ndarray, d_star: int) -> Verdict:
    """YES on an observed edge between two vertices that each saw two distinct core neighbors, else NO.

    Uses only the observation and the free degrees. Without a certificate it
    guesses NO.
    """
    core = degrees == d_star
    src, dst = _core_edges(obs, core)
    if src.size == 0:
        return Verdict.NO
    pairs = np.unique(np.column_stack([src, dst]), axis=0)
    sources, distinct = np.unique(pairs[:, 0], return_counts=True)
    cert = np.zeros(core.size, dtype=bool)
    cert[sources[distinct >= 2]] = True
    return Verdict.YES if np.any(cert[src] & cert[dst]) else Verdict.NO


def wilson_interval(successes: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    lo, hi = proportion_confint(successes, trials, alpha=alpha, method="wilson")
    return float(lo), float(hi)


@dataclass
class ExperimentConfig:
    """One experiment. ``plan_factory`` overrides the default plan of the chosen model.

    For ``flat`` it must return a QueryPlan; for ``tree`` and ``forest`` a list
    of TreeProbePlan. It is called as ``plan_factory(params, q, rng)``.
    """

    params: InstanceParams
    model: str = "flat"
    trials: int = 1
    q: int | None = None
    csv_path: str | Path | None = None
    verdict_rule: str = "certificate"
    compute_mu: bool = True
    world: World = World.MIXED
    plan_factory: Callable | None = None
    tree_plans: Sequence[TreeProbePlan] | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.verdict_rule not in VERDICT_RULES:
            raise ValueError(f"verdict rule must be one of {VERDICT_RULES}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.q is None:
            self.q = self.params.query_budget
        if self.q < 0:
            raise ValueError("budget must be non-negative")
        if self.tree_plans is not None and self.model == "flat":
            raise ValueError("tree plans need the tree or forest model")


@dataclass
class ExperimentResult:
    rows: list[dict]
    reports: list[CoreStructureReport]
    charged: list[int]
    core_two_paths: list[int] = field(default_factory=list)

    @property
    def star_union_rate(self) -> float:
        return float(np.mean([r.star_union_ok for r in self.reports]))

    @property
    def mean_observed_core_edges(self) -> float:
        return float(np.mean([r.observed_core_edge_count for r in self.reports]))

    def accuracy(self) -> tuple[int, int]:
        decided = [r["verdict_correct"] for r in self.rows if r["verdict_correct"] != ""]
        return sum(int(x) for x in decided), len(decided)

    def summary(self) -> dict:
        ok = sum(r.star_union_ok for r in self.reports)
        t = len(self.reports)
        right, decided = self.accuracy()
        out = {
            "trials": t,
            "star_union_rate": ok / t,
            "star_union_wilson": wilson_interval(ok, t),
            "mean_obs_core_edges": self.mean_observed_core_edges,
            "verdict_accuracy": right / decided if decided else float("nan"),
            "verdict_wilson": wilson_interval(right, decided),
        }
        if self.core_two_paths:
            out["mean_core_two_paths"] = float(np.mean(self.core_two_paths))
        return out


def _verdict(rule: str, inst: LabeledInstance, obs: ObservedGraph, rng: np.random.Generator) -> Verdict | None:
    g = public_view(inst)
    p = inst.params
    if rule == "none":
        return None
    if rule == "certificate":
        return certificate_verdict(obs, g.degrees, p.d_star)
    fn = {"birthday": birthday_distinguisher, "third-root": third_root_distinguisher, "two-round": two_round_distinguisher}
    return fn[rule](g, p, rng).verdict


def _format(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(round(x, 12))
    return str(x)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every trial on a fresh instance with its own streams; write the CSV if a path is set."""
    p = cfg.params
    rows, reports, charged, paths = [], [], [], []
    for trial in range(cfg.trials):
        try:
            inst = generate(p, cfg.world, child_rng(p.seed, trial, "instance"))
            g = public_view(inst)
            plan_rng = child_rng(p.seed, trial, "plan")
            if cfg.model == "flat":
                factory = cfg.plan_factory or (lambda pp, q, r: flat_uniform_plan(pp, q, r))
                plan = factory(p, cfg.q, plan_rng)
                obs = observed_graph_from(plan, answer_plan(g, plan))
                charged.append(plan.charged_queries)
            else:
                if cfg.tree_plans is not None:
                    trees = list(cfg.tree_plans)
                elif cfg.plan_factory is not None:
                    trees = cfg.plan_factory(p, cfg.q, plan_rng)
                elif cfg.model == "tree":
                    trees = [random_tree_plan(cfg.q, p.n_prime, plan_rng, max_position=p.d_star)]
                else:
                    trees = random_forest_plan(cfg.q, p.n_prime, plan_rng, max_position=p.d_star)
                transcripts = execute_forest_plan(g, trees, child_rng(p.seed, trial, "execute"))
                obs = transcript_to_observed_graph(*transcripts)
                charged.append(sum(t.charged_queries for t in transcripts))
                core = inst.class_of != VertexClass.D
                paths.append(sum(core_two_paths(t, core) for t in transcripts))
            rep = analyze_observed_core(obs, inst)
            verdict = _verdict(cfg.verdict_rule, inst, obs, child_rng(p.seed, trial, "verdict"))
            mu = exact_maximum_matching(g).size if cfg.compute_mu else ""
        except (OSError, MemoryError) as exc:
            raise RuntimeError(f"trial {trial}: {exc}") from exc
        decided = verdict is not None and verdict is not Verdict.UNDECIDED
        rows.append(
            {
                "trial": trial,
                "world": inst.world.value,
                "n": p.n,
                "delta": p.delta,
                "epsilon": p.epsilon,
                "q": cfg.q,
                "obs_core_edges": rep.observed_core_edge_count,
                "happy": rep.happy_vertex_count,
                "star_ok": rep.star_union_ok,
                "multi_edge_viol": rep.multi_edge_violations,
                "shared_petal_viol": rep.shared_petal_violations,
                "happy_endpoint_viol": rep.happy_endpoint_violations,
                "max_d_indeg": rep.max_d_indegree,
                "mu_exact": mu,
                "verdict": verdict.value if verdict is not None else "",
                "verdict_correct": (verdict.value == inst.world.value) if decided else "",
            }
        )
        reports.append(rep)
    result = ExperimentResult(rows, reports, charged, paths)
    if cfg.csv_path is not None:
        try:
            Path(cfg.csv_path).write_text(rows_to_csv(rows))
        except OSError as exc:
            raise RuntimeError(f"writing {cfg.csv_path} after trial {cfg.trials - 1}: {exc}") from exc
    return result


def rows_to_csv(rows: list[dict], columns: Sequence[str] = CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_format(r[c]) for c in columns])
    return buf.getvalue()
