"""Acceptance criteria A1-A10, each reported as one PASS/FAIL line.

Instances are built at the nearest constructible exponent when the requested
(n, delta) pair cannot be built; thresholds that depend on instance sizes use
the realized sizes, and the literal values are printed next to them.
"""

import math
import time

import numpy as np
import pytest

from _acceptance_log import record
from _oracles import brute_force_matching_size, random_bipartite
from nonadaptive_matching.analysis import (
    ExperimentConfig,
    d_indegree_bound,
    observed_core_bound,
    run_experiment,
    wilson_interval,
)
from nonadaptive_matching.distinguishers import (
    Verdict,
    birthday_distinguisher,
    third_root_distinguisher,
    two_round_distinguisher,
)
from nonadaptive_matching.estimator import estimate_matching_size, query_scale
from nonadaptive_matching.graph import (
    BipartiteMultigraph,
    VertexClass,
    exact_maximum_matching,
    greedy_maximal_matching,
)
from nonadaptive_matching.instance import InstanceParams, dummy_degree_profile, generate, public_view
from nonadaptive_matching.query import answer_plan, build_random_neighbor_plan, extract_random_neighbor_answers
from nonadaptive_matching.rng import child_rng
from nonadaptive_matching.tree_probe import (
    TreeProbePlan,
    execute_forest_plan,
    execute_tree_plan,
    transcript_to_observed_graph,
)

NULL = -1


def _snap(n, delta, epsilon=0.0):
    return InstanceParams.constructible(n, delta, epsilon)


# A1 ---------------------------------------------------------------------------


def test_a1_matching_gap():
    start = time.perf_counter()
    failures, checked, notes = [], 0, []
    for n in (64, 1024):
        p = _snap(n, 0.5)
        notes.append(f"n={n}: g={p.groups} k={p.k}, NO bound 4k={4 * p.k} (literal 4n^0.5={4 * math.isqrt(n)})")
        for world in ("YES", "NO"):
            for s in range(20):
                inst = generate(p, world, child_rng(s, 0, f"a1-{n}-{world}"))
                mu = exact_maximum_matching(inst.graph).size
                ok = mu >= n if world == "YES" else mu <= 4 * p.k
                checked += 1
                if not ok:
                    failures.append((n, world, s, mu))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60
    record("A1", ok, f"{checked} instances, {len(failures)} violations, {elapsed:.1f}s; " + "; ".join(notes))
    assert ok, failures


# A2 ---------------------------------------------------------------------------


def test_a2_core_degrees():
    settings = [(64, 0.5, 5), (1024, 0.5, 5), (4096, 0.5, 5), (46656, 1 / 3, 1), (2**14, 0.1, 1)]
    bad, total = [], 0
    for n, delta, seeds in settings:
        p = _snap(n, delta)
        for world in ("YES", "NO"):
            for s in range(seeds):
                inst = generate(p, world, child_rng(s, 0, f"a2-{n}-{world}"))
                core = inst.class_of != VertexClass.D
                deg = inst.graph.degrees[core]
                total += int(core.sum())
                if not np.all(deg == p.d_star):
                    bad.append((n, world, s, int(np.sum(deg != p.d_star))))
    record("A2", not bad, f"{total} core vertices over {sum(2 * s for *_, s in settings)} instances, {len(bad)} bad instances")
    assert not bad


# A3 ---------------------------------------------------------------------------


def _d_profile_rates(p, trials, tag, half_k=None):
    half_n = p.n / 2
    half_k = p.k / 2 if half_k is None else half_k
    deg_ok = a_ok = count = 0
    for t in range(trials):
        inst = generate(p, "mixed", child_rng(t, 0, tag))
        deg, to_a = dummy_degree_profile(inst)
        deg_ok += int(np.sum((deg > 0.8 * half_n) & (deg < 1.2 * half_n)))
        a_ok += int(np.sum((to_a > 0.8 * half_k) & (to_a < 1.2 * half_k)))
        count += deg.size
    return deg_ok / count, a_ok / count


def test_a3_dummy_degree_concentration():
    p = _snap(4096, 0.5)
    deg_rate, a_rate = _d_profile_rates(p, 100, "a3")
    ok = deg_rate >= 0.99 and a_rate >= 0.99
    record(
        "A3",
        ok,
        f"n=4096 g={p.groups} k={p.k}: deg in (1+-0.2)n/2 for {deg_rate:.4f}; "
        f"A-edges in (1+-0.2)k/2=({0.8 * p.k / 2:.1f},{1.2 * p.k / 2:.1f}) for {a_rate:.4f} "
        f"(mean A-edges is d*-g={p.d_star - p.groups})",
    )
    literal = p.n ** 0.5 / 2
    _, lit_rate = _d_profile_rates(p, 10, "a3", half_k=literal)
    print(f"A3 info: window around n^0.5/2={literal:.0f} holds for {lit_rate:.4f}, only because d*-g happens to equal it")
    # same statistic where g is small against d*, for comparison only
    q = InstanceParams.from_sizes(8, 512)
    d2, a2 = _d_profile_rates(q, 20, "a3-info")
    print(f"A3 info: n=4096 g=8 k=512 gives deg rate {d2:.4f}, A-edge rate {a2:.4f}")
    assert ok


# A4 ---------------------------------------------------------------------------


def _shuffled(left, right, edges, rng):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return BipartiteMultigraph.from_edges(left, right, edges[rng.permutation(len(edges))])


def _path(n_vertices, rng):
    h = n_vertices // 2
    edges = [(i, h + i) for i in range(h)] + [(i + 1, h + i) for i in range(h - 1)]
    return _shuffled(h, h, edges, rng)


def _stars(sizes, rng):
    right = int(sum(sizes))
    edges, r = [], len(sizes)
    for c, s in enumerate(sizes):
        edges += [(c, r + j) for j in range(s)]
        r += s
    return _shuffled(len(sizes), right, edges, rng)


def _near_perfect(m, rng):
    keep = rng.random(m) > 0.05
    edges = [(i, m + i) for i in range(m) if keep[i]]
    noise = np.column_stack([rng.integers(0, m, m // 10), m + rng.integers(0, m, m // 10)])
    return _shuffled(m, m, edges + noise.tolist(), rng)


def _sparse(h, rng):
    e = np.column_stack([rng.integers(0, h, 3 * h), h + rng.integers(0, h, 3 * h)])
    return _shuffled(h, h, e, rng)


def _short_paths(n_vertices, rng):
    h = n_vertices // 2
    edges = []
    for i in range(0, h - 1, 2):
        edges += [(i, h + i), (i + 1, h + i), (i + 1, h + i + 1)]
    return _shuffled(h, h, edges, rng)


def _matching_plus_block(m, rng):
    edges = [(i, m + i) for i in range(m)]
    edges += [(u, m + v) for u in range(32) for v in range(32)]
    return _shuffled(m, m, edges, rng)


def structured_graphs():
    rng = np.random.default_rng(2024)
    return [
        ("path-1024", _path(1024, rng)),
        ("path-4096", _path(4096, rng)),
        ("stars-64x15", _stars([15] * 64, rng)),
        ("stars-256x15", _stars([15] * 256, rng)),
        ("stars-random", _stars(rng.integers(1, 40, size=100).tolist(), rng)),
        ("near-perfect-512", _near_perfect(512, rng)),
        ("near-perfect-2048", _near_perfect(2048, rng)),
        ("sparse-random-512", _sparse(512, rng)),
        ("short-paths-4096", _short_paths(4096, rng)),
        ("matching-plus-K32-2048", _matching_plus_block(2048, rng)),
    ]


def _within(est, mu, n):
    return n ** (-0.5) * mu / 2 <= est <= mu


def test_a4_estimator_guarantee():
    start = time.perf_counter()
    results = {}
    for n in (1024, 4096):
        p = _snap(n, 0.5)
        good = 0
        for t in range(100):
            g = public_view(generate(p, "YES", child_rng(t, 0, f"a4-{n}")))
            est = estimate_matching_size(g, p.n, 0.5, child_rng(t, 0, f"a4-est-{n}")).estimate
            good += _within(est, exact_maximum_matching(g).size, p.n)
        results[f"YES n={n}"] = good
    good = 0
    for name, g in structured_graphs():
        mu = exact_maximum_matching(g).size
        for t in range(10):
            est = estimate_matching_size(g, g.num_vertices, 0.5, child_rng(t, 0, f"a4-{name}")).estimate
            good += _within(est, mu, g.num_vertices)
    results["structured (10 graphs x 10)"] = good
    elapsed = time.perf_counter() - start
    ok = all(v >= 95 for v in results.values()) and elapsed < 300
    record("A4", ok, ", ".join(f"{k}: {v}/100" for k, v in results.items()) + f"; {elapsed:.0f}s")
    assert ok


# A5 ---------------------------------------------------------------------------


def test_a5_query_scaling():
    ns = [2**10, 2**12, 2**14]
    charged = []
    for n in ns:
        p = _snap(n, 0.5)
        g = public_view(generate(p, "YES", child_rng(0, 0, f"a5-{n}")))
        charged.append(estimate_matching_size(g, p.n, 0.5, child_rng(0, 0, f"a5-est-{n}")).charged_queries)
    x = np.log(ns)
    slope = np.polyfit(x, np.log(charged), 1)[0]
    norm = np.polyfit(x, np.log(np.array(charged) / np.log(ns) ** 2), 1)[0]
    consts = [c / query_scale(n, 0.5) for c, n in zip(charged, ns)]
    ok = abs(slope - 1.0) <= 0.15
    record(
        "A5",
        ok,
        f"charged={charged}, log-log slope {slope:.3f} (target 1.0+-0.15); "
        f"slope after dividing by ln^2 n {norm:.3f}; charged/(n ln^2 n)={[round(c, 2) for c in consts]}",
    )
    assert ok


# A6 ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def a6_run():
    p = _snap(2**14, 0.1, 0.05)
    cfg = ExperimentConfig(p, model="flat", trials=200, compute_mu=False, verdict_rule="certificate")
    return p, run_experiment(cfg)


def test_a6_star_structure(a6_run):
    p, res = a6_run
    t = len(res.reports)
    star = sum(r.star_union_ok for r in res.reports)
    bound = observed_core_bound(p.n, p.delta, p.epsilon)
    literal = observed_core_bound(p.n, 0.1, p.epsilon)
    counts = np.array([r.observed_core_edge_count for r in res.reports])
    within = int(np.sum(counts <= bound))
    ok = star / t >= 0.9 and within / t >= 0.9
    lo, hi = wilson_interval(star, t)
    record(
        "A6",
        ok,
        f"q={res.charged[0]}, star_union_ok {star}/{t} (Wilson {lo:.3f}-{hi:.3f}); "
        f"obs core edges mean {counts.mean():.1f} max {counts.max()}, <= {bound:.1f} in {within}/{t} "
        f"(literal delta=0.1 bound {literal:.1f})",
    )
    assert ok


def test_a6_heavy_census(a6_run):
    p, res = a6_run
    t = len(res.reports)
    good = sum(all(h.within_bound for h in r.heavy_census) for r in res.reports)
    ok = good / t >= 0.8
    record("A6-heavy", ok, f"every tau level within bound in {good}/{t} trials")
    assert ok


def test_a6_d_indegree(a6_run):
    p, res = a6_run
    t = len(res.reports)
    bound = d_indegree_bound(p.n, p.epsilon)
    vals = np.array([r.max_d_indegree for r in res.reports])
    good = int(np.sum(vals <= bound))
    ok = good / t >= 0.95
    record("A6-dindeg", ok, f"max D in-degree <= 4n^eps={bound:.2f} in {good}/{t} trials (max seen {vals.max()})")
    assert ok


# A7 ---------------------------------------------------------------------------


def test_a7_distinguishers():
    p = _snap(1024, 0.5)
    birthday_good = 0
    two_good = two_wrong = 0
    for t in range(100):
        inst = generate(p, "mixed", child_rng(t, 0, "a7-inst"))
        g = public_view(inst)
        v = birthday_distinguisher(g, p, child_rng(t, 0, "a7-birthday"))
        birthday_good += v.verdict.value == inst.world.value
        w = two_round_distinguisher(g, p, child_rng(t, 0, "a7-two"))
        if w.verdict is not Verdict.UNDECIDED:
            two_good += w.verdict.value == inst.world.value
            two_wrong += w.verdict.value != inst.world.value

    q = InstanceParams(46656, 1 / 3)
    yes_hits = 0
    for t in range(100):
        g = public_view(generate(q, "YES", child_rng(t, 0, "a7-third-yes")))
        yes_hits += third_root_distinguisher(g, q, child_rng(t, 0, "a7-third"), c1=0.25, c2=0.25).verdict is Verdict.YES
    false_yes = 0
    for t in range(30):
        g = public_view(generate(q, "NO", child_rng(t, 0, "a7-third-no")))
        false_yes += third_root_distinguisher(g, q, child_rng(t, 0, "a7-third"), c1=0.25, c2=0.25).verdict is Verdict.YES

    ok = birthday_good >= 99 and yes_hits >= 95 and false_yes == 0 and two_good >= 95 and two_wrong == 0
    record(
        "A7",
        ok,
        f"birthday correct {birthday_good}/100; third-root YES {yes_hits}/100, false YES {false_yes}/30 "
        f"(c1=c2=0.25); two-round correct {two_good}/100, wrong {two_wrong}",
    )
    assert ok


# A8 ---------------------------------------------------------------------------

A8_LISTS = [[3, 4, 3], [4, 5], [], [0, 0], [1, 0], [1], []]
N = NULL
# (root, instructions, expected slots), worked out by hand on A8_LISTS
A8_CASES = [
    (0, [(1, 1)], [0, 3]),
    (0, [(1, 2)], [0, 4]),
    (0, [(1, 3)], [0, 3]),
    (0, [(1, 4)], [0, N]),
    (2, [(1, 1)], [2, N]),
    (2, [(1, 1), (2, 1), (3, 1)], [2, N, N, N]),
    (0, [(1, 4), (2, 1), (3, 1)], [0, N, N, N]),
    (0, [(1, 2), (2, 1), (3, 2), (4, 1)], [0, 4, 1, 5, 1]),
    (1, [(1, 1), (2, 2), (3, 1), (4, 2)], [1, 4, 0, 3, 0]),
    (0, [(1, 1), (1, 2), (1, 3)], [0, 3, 4, 3]),
    (0, [(1, 1), (1, 2), (1, 3), (1, 4), (1, 5)], [0, 3, 4, 3, N, N]),
    (1, [(1, 1), (1, 2), (1, 3)], [1, 4, 5, N]),
    (6, [(1, 1), (1, 2)], [6, N, N]),
    (0, [(1, 3), (2, 2), (1, 1), (3, 1)], [0, 3, 0, 3, 3]),
    (1, [(1, 3), (2, 1), (1, 2), (4, 1)], [1, N, N, 5, 1]),
    (5, [(1, 1), (2, 3), (2, 1), (4, 2)], [5, 1, N, 4, 0]),
    (3, [(1, 1), (1, 2), (2, 2), (3, 3)], [3, 0, 0, 4, 3]),
    (4, [(1, 2), (2, 2), (3, 2)], [4, 0, 4, 0]),
    (2, [], [2]),
    (0, [(1, 2), (2, 3)], [0, 4, N]),
    (0, [(1, 2), (2, 3), (3, 1), (3, 2)], [0, 4, N, N, N]),
    (5, [(1, 2)], [5, N]),
    (6, [], [6]),
    (3, [(1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 1)], [3, 0, 3, 0, 3, 0, 3]),
    (1, [(1, 2), (1, 1), (3, 2), (2, 1), (5, 1)], [1, 5, 4, 0, 1, 4]),
]


def test_a8_tree_probe_conformance():
    g = BipartiteMultigraph.from_adjacency(3, 4, A8_LISTS)
    mismatches = []
    for k, (root, ins, expected) in enumerate(A8_CASES):
        t = execute_tree_plan(g, TreeProbePlan.from_pairs(root, ins, 5))
        if t.discovered.tolist() != expected or not t.check_absorption():
            mismatches.append((k, t.discovered.tolist(), expected))
    # forest made of one-step trees reproduces the flat probes
    forest = [TreeProbePlan.from_pairs(r, ins[:1], 5) for r, ins, _ in A8_CASES if ins]
    ts = execute_forest_plan(g, forest)
    flat = [e[1] for r, ins, e in A8_CASES if ins]
    forest_ok = [t.discovered[1] for t in ts] == flat
    whole = execute_forest_plan(g, [TreeProbePlan.from_pairs(r, ins, 5) for r, ins, _ in A8_CASES])
    forest_ok &= [t.discovered.tolist() for t in whole] == [e for *_, e in A8_CASES]
    forest_ok &= transcript_to_observed_graph(*whole).num_edges <= sum(t.charged_queries for t in whole)
    ok = not mismatches and forest_ok
    record("A8", ok, f"{len(A8_CASES) - len(mismatches)}/{len(A8_CASES)} plans bit-exact, forest degenerations {'ok' if forest_ok else 'differ'}")
    assert ok, mismatches


# A9 ---------------------------------------------------------------------------


def test_a9_random_neighbor_simulator():
    rng = np.random.default_rng(99)
    side = 64
    edges = [(0, side + j) for j in range(1, 6)]
    other = np.column_stack([rng.integers(1, side, 300), side + rng.integers(0, side, 300)])
    g = BipartiteMultigraph.from_edges(side, side, edges + other.tolist())
    draws = 10**5
    plan = build_random_neighbor_plan([0], draws, side, child_rng(0, 0, "a9"))
    src, dst = extract_random_neighbor_answers(answer_plan(g, plan))
    nbrs, counts = np.unique(dst, return_counts=True)
    freq = counts / counts.sum()
    levels = math.ceil(math.log2(side)) + 1
    ratio = plan.charged_queries / src.size
    ok = (
        sorted(nbrs.tolist()) == sorted(g.neighbors(0).tolist())
        and np.all(np.abs(freq - 0.2) <= 0.01)
        and ratio <= 2 * levels
    )
    record(
        "A9",
        ok,
        f"{src.size} retained of {draws} samples, frequencies {np.round(freq, 4).tolist()}, "
        f"charged per retained {ratio:.2f} <= {2 * levels}",
    )
    assert ok


# A10 --------------------------------------------------------------------------


def test_a10_oracle_equivalence():
    rng = np.random.default_rng(10)
    oracle_bad = 0
    for _ in range(1000):
        nl, nr = rng.integers(1, 7, size=2)
        g = random_bipartite(rng, int(nl), int(nr), int(rng.integers(0, 3 * (nl + nr))))
        edges = [tuple(e) for e in g.edge_array().tolist()]
        oracle_bad += exact_maximum_matching(g).size != brute_force_matching_size(g.left_count, g.right_count, edges)
    greedy_bad = 0
    for _ in range(1000):
        nl, nr = rng.integers(1, 21, size=2)
        g = random_bipartite(rng, int(nl), int(nr), int(rng.integers(0, 80)))
        stream = g.edge_array()[rng.permutation(g.num_edges)]
        flip = rng.random(len(stream)) < 0.5
        stream[flip] = stream[flip][:, ::-1]
        greedy = greedy_maximal_matching(stream).size
        exact = exact_maximum_matching(g).size
        greedy_bad += not (exact / 2 <= greedy <= exact)
    ok = oracle_bad == 0 and greedy_bad == 0
    record("A10", ok, f"oracle vs brute force: {oracle_bad}/1000 mismatches; greedy < exact/2: {greedy_bad}/1000")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
