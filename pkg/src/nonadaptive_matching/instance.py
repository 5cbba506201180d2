"""Yes/no hard instances for non-adaptive matching-size estimation.

Each side has three blocks, A (size k), B (size n, split into g groups of k)
and D (size k), so a side has ``n' = n + 2k`` vertices. Here ``k = n^(1-delta)``
and ``g = n^delta``, hence ``g * k = n``. Every core vertex (A or B) has degree
``d* = k/2``; the slack left after its core edges is filled with distinct
random dummy neighbors from the opposite D block.

YES adds the identity matching B^L-B^R and g random perfect matchings A^L-A^R.
NO joins each group B^L_i to A^R by a random perfect matching and each group
B^R_i to A^L by the identity. Vertices are then renamed by a random
permutation on each side, and every adjacency list is uniformly shuffled.

Hidden ids put A, B, D in that order on each side, left side first.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .graph import BipartiteMultigraph, VertexClass
from .rng import child_rng, kernel_seed


class ParamsError(ValueError):
    pass


class World(str, enum.Enum):
    YES = "YES"
    NO = "NO"
    MIXED = "MIXED"


def _split(n: int, delta: float) -> tuple[int, int]:
    g = round(n**delta)
    k = round(n ** (1 - delta))
    return g, k


def _is_valid_split(n: int, g: int, k: int) -> bool:
    return g >= 1 and g * k == n and k % 2 == 0 and k // 2 >= g + 1


def valid_group_counts(n: int) -> list[int]:
    """Every g for which (n, g, n/g) gives a well-formed instance."""
    return [g for g in range(1, math.isqrt(n) + 1) if n % g == 0 and _is_valid_split(n, g, n // g)]


def nearest_valid_n(delta: float, around: int) -> int | None:
    """Closest n (to ``around``) with exact integral sizes at this delta, if any nearby."""
    best = None
    g_hi = max(2, int(2 * around**delta) + 2)
    for g in range(1, g_hi + 1):
        n = round(g ** (1 / delta))
        g2, k = _split(n, delta)
        if g2 == g and _is_valid_split(n, g, k) and abs(n**delta - g) < 1e-6 * g:
            if best is None or abs(n - around) < abs(best - around):
                best = n
    return best


@dataclass(frozen=True)
class InstanceParams:
    """Scale ``n``, approximation exponent ``delta``, budget exponent ``epsilon``.

    Construction rejects an (n, delta) pair unless ``n^delta`` and
    ``n^(1-delta)`` are integers multiplying to n with ``k`` even and
    ``k/2 >= g + 1``. :meth:`constructible` snaps delta to a buildable value
    instead, keeping the request in ``requested_delta``.
    """

    n: int
    delta: float
    epsilon: float = 0.0
    seed: int = 0
    requested_delta: float | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ParamsError("delta must lie in (0, 1)")
        if self.epsilon < 0:
            raise ParamsError("epsilon must be non-negative")
        g, k = _split(self.n, self.delta)
        exact = abs(self.n**self.delta - g) < 1e-6 * max(g, 1)
        if not (exact and _is_valid_split(self.n, g, k)):
            raise ParamsError(self._diagnostic())

    def _diagnostic(self) -> str:
        msg = f"(n={self.n}, delta={self.delta}) does not give integral sizes with d* = k/2 >= g+1"
        alt = nearest_valid_n(self.delta, self.n)
        msg += f"; nearest valid n at this delta: {alt}" if alt else "; no valid n exists near this delta"
        gs = valid_group_counts(self.n)
        if gs:
            deltas = ", ".join(f"{math.log(g) / math.log(self.n):.4f}" for g in gs if g > 1)
            msg += f"; constructible delta at n={self.n}: {deltas}"
        return msg

    @classmethod
    def constructible(cls, n: int, delta: float, epsilon: float = 0.0, seed: int = 0) -> "InstanceParams":
        """Snap delta to the nearest buildable value at this n.

        Prefers the smallest valid g with ``g >= n^delta``; when none exists,
        the largest valid g below it.
        """
        target = n**delta
        gs = [g for g in valid_group_counts(n) if g > 1]
        if not gs:
            raise ParamsError(f"no valid instance exists at n={n}")
        above = [g for g in gs if g >= target * (1 - 1e-9)]
        g = min(above) if above else max(gs)
        realized = math.log(g) / math.log(n)
        return cls(n, realized, epsilon, seed, requested_delta=None if g == round(target) and above else delta)

    @classmethod
    def from_sizes(cls, groups: int, k: int, epsilon: float = 0.0, seed: int = 0) -> "InstanceParams":
        """Instance with ``g`` groups of size ``k`` (so ``n = g k``)."""
        n = groups * k
        if groups == 1:
            raise ParamsError("need at least two groups")
        return cls(n, math.log(groups) / math.log(n), epsilon, seed)

    @property
    def groups(self) -> int:
        return _split(self.n, self.delta)[0]

    @property
    def k(self) -> int:
        return _split(self.n, self.delta)[1]

    @property
    def d_star(self) -> int:
        return self.k // 2

    @property
    def n_prime(self) -> int:
        return self.n + 2 * self.k

    @property
    def query_budget(self) -> int:
        return round(self.n ** (1 + self.epsilon))

    @property
    def in_asymptotic_regime(self) -> bool:
        """Informational: whether ``n^(2eps+3delta) log^3 n < n`` holds at this n."""
        return self.n ** (2 * self.epsilon + 3 * self.delta) * math.log(self.n) ** 3 < self.n

    def with_seed(self, seed: int) -> "InstanceParams":
        return InstanceParams(self.n, self.delta, self.epsilon, seed, self.requested_delta)


@dataclass(frozen=True, eq=False)
class LabeledInstance:
    """A generated instance.

    ``graph`` is stored under public labels and carries the secret class of
    every label in ``graph.class_of``. ``labeling[h]`` is the public label of
    hidden vertex ``h``.
    """

    params: InstanceParams
    world: World
    graph: BipartiteMultigraph
    labeling: np.ndarray

    @property
    def class_of(self) -> np.ndarray:
        return self.graph.class_of

    def core_mask(self) -> np.ndarray:
        return self.graph.class_of != VertexClass.D

    def hidden_class_of(self) -> np.ndarray:
        return hidden_classes(self.params)

    def hidden_graph(self) -> BipartiteMultigraph:
        """The same instance under hidden ids (A, B, D blocks in order)."""
        inverse = np.empty_like(self.labeling)
        inverse[self.labeling] = np.arange(self.labeling.size)
        offsets, targets = _kernels.relabel_csr(self.graph.offsets, self.graph.targets, inverse)
        g = self.graph
        return BipartiteMultigraph(g.left_count, g.right_count, offsets, targets, self.hidden_class_of())


def hidden_classes(p: InstanceParams) -> np.ndarray:
    side = np.concatenate(
        [
            np.full(p.k, VertexClass.A, dtype=np.int8),
            np.full(p.n, VertexClass.B, dtype=np.int8),
            np.full(p.k, VertexClass.D, dtype=np.int8),
        ]
    )
    return np.concatenate([side, side])


def _core_pairs(p: InstanceParams, world: World, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    k, n, g, npr = p.k, p.n, p.groups, p.n_prime
    a_left = np.arange(k)
    b_left = k + np.arange(n)
    a_right = npr + np.arange(k)
    b_right = npr + k + np.arange(n)
    us, vs = [], []
    if world is World.YES:
        us.append(b_left)
        vs.append(b_right)
        for _ in range(g):
            us.append(a_left)
            vs.append(a_right[rng.permutation(k)])
    else:
        for i in range(g):
            group = slice(i * k, (i + 1) * k)
            us.append(b_left[group])
            vs.append(a_right[rng.permutation(k)])
            us.append(a_left)
            vs.append(b_right[group])
    return np.concatenate(us), np.concatenate(vs)


def generate(
    params: InstanceParams,
    world: World | str = World.MIXED,
    rng: np.random.Generator | None = None,
) -> LabeledInstance:
    """Draw one instance; MIXED picks YES or NO with a fair coin."""
    rng = rng if rng is not None else child_rng(params.seed, 0, "instance")
    world = World(world.upper() if isinstance(world, str) else world)
    if world is World.MIXED:
        world = World.YES if rng.random() < 0.5 else World.NO
    k, n, g, npr, dstar = params.k, params.n, params.groups, params.n_prime, params.d_star

    core_u, core_v = _core_pairs(params, world, rng)

    sizes = np.concatenate(
        [np.full(k, dstar - g, dtype=np.int64), np.full(n, dstar - 1, dtype=np.int64)]
    )
    left_core = np.arange(k + n, dtype=np.int64)
    d_left = np.arange(k + n, npr, dtype=np.int64)
    # left core draws from D^R, right core from D^L, independently per core vertex
    sides = (
        (left_core, sizes, npr + d_left, kernel_seed(rng)),
        (npr + left_core, sizes, d_left, kernel_seed(rng)),
    )
    labeling = np.concatenate([rng.permutation(npr), npr + rng.permutation(npr)]).astype(np.int64)
    offsets, targets = _kernels.build_with_dummies(2 * npr, core_u, core_v, sides, labeling)
    _kernels.shuffle_rows(offsets, targets, kernel_seed(rng))

    classes = np.empty(2 * npr, dtype=np.int8)
    classes[labeling] = hidden_classes(params)
    graph = BipartiteMultigraph(npr, npr, offsets, targets, classes)
    return LabeledInstance(params, world, graph, labeling)


def public_view(inst: LabeledInstance) -> BipartiteMultigraph:
    """The graph under public labels, without class information; sides are kept."""
    g = inst.graph
    return BipartiteMultigraph(g.left_count, g.right_count, g.offsets, g.targets)


def core_edge_census(inst: LabeledInstance) -> dict[str, int]:
    """Core edges by type; ground-truth side only."""
    edges = inst.graph.edge_array()
    cls = inst.class_of
    cu, cv = cls[edges[:, 0]], cls[edges[:, 1]]
    core = (cu != VertexClass.D) & (cv != VertexClass.D)
    cu, cv = cu[core], cv[core]
    return {
        "A-A": int(np.sum((cu == VertexClass.A) & (cv == VertexClass.A))),
        "B-B": int(np.sum((cu == VertexClass.B) & (cv == VertexClass.B))),
        "A-B": int(np.sum(cu != cv)),
    }


def dummy_degree_profile(inst: LabeledInstance) -> tuple[np.ndarray, np.ndarray]:
    """For every D vertex: its degree and its number of edges into A."""
    g = inst.graph
    cls = inst.class_of
    d_ids = np.flatnonzero(cls == VertexClass.D)
    deg = g.degrees[d_ids]
    to_a = np.array(
        [int(np.sum(cls[g.neighbors(v)] == VertexClass.A)) for v in d_ids], dtype=np.int64
    )
    return deg, to_a


def write_instance(inst: LabeledInstance, graph_path: str | Path, sidecar_path: str | Path) -> None:
    """Public graph as text, ground truth as a separate JSON sidecar."""
    public_view(inst).write_text(graph_path)
    truth = {
        "world": inst.world.value,
        "params": asdict(inst.params),
        "labeling": inst.labeling.tolist(),
        "class_of": [VertexClass(c).name for c in inst.class_of.tolist()],
    }
    Path(sidecar_path).write_text(json.dumps(truth))


def read_sidecar(path: str | Path) -> dict:
    truth = json.loads(Path(path).read_text())
    truth["class_of"] = np.array([VertexClass[c] for c in truth["class_of"]], dtype=np.int8)
    truth["labeling"] = np.asarray(truth["labeling"], dtype=np.int64)
    return truth
