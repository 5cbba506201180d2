"""Compiled inner loops.

Every kernel that draws randomness takes an explicit ``seed`` and runs its own
splitmix64 stream from it, so a call is a pure function of its arguments.
"""

import numpy as np
from numba import njit

NULL = -1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_LOW32 = np.uint64(0xFFFFFFFF)
_TWO32 = np.uint64(1 << 32)


@njit(inline="always")
def _next(state):
    s = state[0] + _GOLDEN
    state[0] = s
    z = (s ^ (s >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _below(state, bound):
    """Uniform on ``[0, bound)`` for ``1 <= bound < 2**32`` (Lemire, with rejection)."""
    b = np.uint64(bound)
    m = (_next(state) >> np.uint64(32)) * b
    low = m & _LOW32
    if low < b:
        t = (_TWO32 - b) % b
        while low < t:
            m = (_next(state) >> np.uint64(32)) * b
            low = m & _LOW32
    return np.int64(m >> np.uint64(32))


@njit(inline="always")
def _new_state(seed):
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    _next(state)
    return state


@njit(cache=True)
def greedy_mask(us, vs, n_ids):
    """Accept each edge whose endpoints are both still free, in stream order."""
    matched = np.zeros(n_ids, dtype=np.bool_)
    keep = np.zeros(us.size, dtype=np.bool_)
    for e in range(us.size):
        u = us[e]
        v = vs[e]
        if u == v or matched[u] or matched[v]:
            continue
        matched[u] = True
        matched[v] = True
        keep[e] = True
    return keep


@njit(cache=True)
def _dummy_pass(core_ids, sizes, pool, seed, rename, deg, cursor, targets, write):
    """Join each ``core_ids[c]`` to ``sizes[c]`` distinct members of ``pool``.

    Partial Fisher-Yates on a scratch permutation that is never reset; from
    any starting arrangement the first ``m`` entries after ``m`` swap steps are
    a uniform ordered ``m``-subset. With ``write`` false only the pool-side
    degrees are counted; a second call with the same seed replays the draws
    and stores both directions.
    """
    state = _new_state(seed)
    k = pool.size
    scratch = pool.copy()
    for c in range(core_ids.size):
        u = rename[core_ids[c]]
        for i in range(sizes[c]):
            j = i + _below(state, k - i)
            t = scratch[i]
            scratch[i] = scratch[j]
            scratch[j] = t
            d = rename[scratch[i]]
            if write:
                targets[cursor[u]] = d
                cursor[u] += 1
                targets[cursor[d]] = u
                cursor[d] += 1
            else:
                deg[d] += 1
                deg[u] += 1


@njit(cache=True)
def build_with_dummies(n_vertices, core_u, core_v, sides, rename):
    """Symmetric CSR of the core edges plus sampled dummy edges, under ``rename``.

    ``sides`` holds one ``(core_ids, sizes, pool, seed)`` tuple per side.
    """
    deg = np.zeros(n_vertices, dtype=np.int64)
    for e in range(core_u.size):
        deg[rename[core_u[e]]] += 1
        deg[rename[core_v[e]]] += 1
    empty_i64 = np.zeros(0, dtype=np.int64)
    empty_i32 = np.zeros(0, dtype=np.int32)
    for core_ids, sizes, pool, seed in sides:
        _dummy_pass(core_ids, sizes, pool, seed, rename, deg, empty_i64, empty_i32, False)
    offsets = np.zeros(n_vertices + 1, dtype=np.int64)
    for v in range(n_vertices):
        offsets[v + 1] = offsets[v] + deg[v]
    cursor = offsets[:-1].copy()
    targets = np.empty(offsets[n_vertices], dtype=np.int32)
    for e in range(core_u.size):
        u = rename[core_u[e]]
        v = rename[core_v[e]]
        targets[cursor[u]] = v
        cursor[u] += 1
        targets[cursor[v]] = u
        cursor[v] += 1
    for core_ids, sizes, pool, seed in sides:
        _dummy_pass(core_ids, sizes, pool, seed, rename, deg, cursor, targets, True)
    return offsets, targets


@njit(cache=True)
def fill_csr(n_vertices, us, vs, rename):
    """Symmetric CSR from an undirected edge list, in edge order per row.

    Endpoint ``x`` is stored as ``rename[x]``.
    """
    deg = np.zeros(n_vertices, dtype=np.int64)
    for e in range(us.size):
        deg[rename[us[e]]] += 1
        deg[rename[vs[e]]] += 1
    offsets = np.zeros(n_vertices + 1, dtype=np.int64)
    for v in range(n_vertices):
        offsets[v + 1] = offsets[v] + deg[v]
    cursor = offsets[:-1].copy()
    targets = np.empty(offsets[n_vertices], dtype=np.int32)
    for e in range(us.size):
        u = rename[us[e]]
        v = rename[vs[e]]
        targets[cursor[u]] = v
        cursor[u] += 1
        targets[cursor[v]] = u
        cursor[v] += 1
    return offsets, targets


@njit(cache=True)
def shuffle_rows(offsets, targets, seed):
    """Independent uniform permutation of every adjacency row, in place."""
    state = _new_state(seed)
    for v in range(offsets.size - 1):
        lo = offsets[v]
        n = offsets[v + 1] - lo
        for i in range(n - 1, 0, -1):
            j = _below(state, i + 1)
            t = targets[lo + i]
            targets[lo + i] = targets[lo + j]
            targets[lo + j] = t


@njit(cache=True)
def relabel_csr(offsets, targets, new_id):
    """Rebuild CSR after renaming vertex ``v`` to ``new_id[v]``; row order kept."""
    n = offsets.size - 1
    old_of = np.empty(n, dtype=np.int64)
    for v in range(n):
        old_of[new_id[v]] = v
    new_offsets = np.zeros(n + 1, dtype=np.int64)
    for w in range(n):
        v = old_of[w]
        new_offsets[w + 1] = new_offsets[w] + (offsets[v + 1] - offsets[v])
    new_targets = np.empty(targets.size, dtype=np.int32)
    for w in range(n):
        v = old_of[w]
        lo = offsets[v]
        hi = offsets[v + 1]
        dst = new_offsets[w]
        for p in range(lo, hi):
            new_targets[dst] = new_id[targets[p]]
            dst += 1
    return new_offsets, new_targets


@njit(cache=True)
def gather_answers(offsets, targets, vertices, indices):
    """Adjacency-list oracle on a batch: 1-based index, NULL past the degree."""
    out = np.empty(vertices.size, dtype=np.int64)
    for p in range(vertices.size):
        v = vertices[p]
        i = indices[p]
        lo = offsets[v]
        if i >= 1 and i <= offsets[v + 1] - lo:
            out[p] = targets[lo + i - 1]
        else:
            out[p] = NULL
    return out


@njit(cache=True)
def random_neighbor_block(vertices, samples, num_levels, seed):
    """Probes of a degree-guessing plan for one block of vertices.

    Sample ``t`` of vertex ``v`` contributes one probe per level ``j``, with
    index uniform on ``[1, 2**j]``.
    """
    state = _new_state(seed)
    total = 0
    for a in range(vertices.size):
        total += samples[a]
    n_probes = total * num_levels
    pv = np.empty(n_probes, dtype=np.int64)
    pi = np.empty(n_probes, dtype=np.int64)
    pl = np.empty(n_probes, dtype=np.int8)
    p = 0
    for a in range(vertices.size):
        v = vertices[a]
        for _ in range(samples[a]):
            for j in range(num_levels):
                pv[p] = v
                # top j bits of a 64-bit draw are uniform on [0, 2**j)
                r = _next(state)
                pi[p] = 1 + (np.int64(r >> np.uint64(64 - j)) if j > 0 else 0)
                pl[p] = j
                p += 1
    return pv, pi, pl


@njit(cache=True)
def random_neighbor_retained(vertices, samples, num_levels, seed, offsets, targets, degrees):
    """Answer one block of a degree-guessing plan and keep only the retained probes.

    Replays exactly the draws of :func:`random_neighbor_block` for the same
    arguments, without storing the discarded probes. Returns ``(sources,
    neighbors)`` in plan order.
    """
    state = _new_state(seed)
    total = 0
    for a in range(vertices.size):
        total += samples[a]
    src = np.empty(total, dtype=np.int64)
    dst = np.empty(total, dtype=np.int64)
    p = 0
    for a in range(vertices.size):
        v = vertices[a]
        d = degrees[v]
        sel = 0
        while (1 << sel) < d:
            sel += 1
        lo = offsets[v]
        for _ in range(samples[a]):
            for j in range(num_levels):
                r = _next(state)
                if j != sel or d <= 0:
                    continue
                i = 1 + (np.int64(r >> np.uint64(64 - j)) if j > 0 else 0)
                if i <= offsets[v + 1] - lo:
                    src[p] = v
                    dst[p] = targets[lo + i - 1]
                    p += 1
    return src[:p], dst[:p]


@njit(cache=True)
def retained_mask(vertices, indices, levels, answers, degrees):
    """Keep probes from the level ``j`` with ``2**(j-1) < deg <= 2**j`` that hit the list."""
    keep = np.zeros(vertices.size, dtype=np.bool_)
    for p in range(vertices.size):
        d = degrees[vertices[p]]
        if d <= 0 or answers[p] == NULL:
            continue
        sel = 0
        while (1 << sel) < d:
            sel += 1
        if levels[p] == sel:
            keep[p] = True
    return keep
