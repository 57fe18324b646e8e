"""Instance distributions and adaptive adversaries.

Randomness: every generator is a pure function of (params, seed), driven by
numpy's PCG64 generator. The red/blue constructions draw exactly one coin per
phase; vertex labels and phase structure are deterministic given the params.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from hypermatch.core import (
    HyperEdge,
    Instance,
    VertexArrivalInstance,
    pad_to_uniform,
)
from hypermatch.algorithms import OnlineRunner, Transcript, run_online


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ColoredInstance:
    """An instance plus red/blue phase metadata.

    Invariants (verified by verify_redblue): one red and one blue edge per
    phase, red edges pairwise disjoint, every blue edge intersects every
    later-arriving edge, every red edge is disjoint from every later edge.
    """

    instance: Instance
    phases: tuple[tuple[int, int], ...]
    colors: dict[int, str]  # edge id -> "red" | "blue"
    a_sets: tuple[frozenset[int], ...] | None = None

    def red_edges(self) -> list[HyperEdge]:
        return [e for e in self.instance.arrivals if self.colors[e.id] == "red"]

    def to_json_obj(self) -> dict:
        obj = {
            "colors": {str(e): c for e, c in sorted(self.colors.items())},
            "phases": [list(p) for p in self.phases],
        }
        if self.a_sets is not None:
            obj["a_sets"] = [sorted(s) for s in self.a_sets]
        return obj


class _VertexPool:
    def __init__(self) -> None:
        self.next_id = 0

    def take(self, n: int) -> list[int]:
        out = list(range(self.next_id, self.next_id + n))
        self.next_id += n
        return out


def _gk_phases(
    k: int, pool: _VertexPool, rng: np.random.Generator, edges: list[list[int]],
    colors: dict[int, str], phases: list[tuple[int, int]],
) -> list[list[int]]:
    """Run the k/2 phases of the G_k construction, appending to the shared
    arrival list. Returns the unconsumed private-vertex pools of the blue
    edges, in blue-edge creation order."""
    blue_pools: list[list[int]] = []
    for _ in range(k // 2):
        # one unconsumed private vertex per existing blue edge, shared by both
        # edges of this phase
        a = [bp.pop(0) for bp in blue_pools]
        fresh1 = pool.take(k - len(a))
        fresh2 = pool.take(k - len(a))
        id1, id2 = len(edges), len(edges) + 1
        edges.append(a + fresh1)
        edges.append(a + fresh2)
        phases.append((id1, id2))
        if rng.integers(0, 2) == 0:
            colors[id1], colors[id2] = "red", "blue"
            blue_pools.append(list(fresh2))
        else:
            colors[id1], colors[id2] = "blue", "red"
            blue_pools.append(list(fresh1))
    return blue_pools


def _finish_colored(
    k: int, pool: _VertexPool, edges: list[list[int]], colors: dict[int, str],
    phases: list[tuple[int, int]], a_sets=None,
) -> ColoredInstance:
    arrivals = tuple(
        HyperEdge(eid, frozenset(vs)) for eid, vs in enumerate(edges)
    )
    inst = Instance(k, pool.next_id, arrivals, weighted=False)
    return ColoredInstance(inst, tuple(phases), colors, a_sets)


def gen_gk(k: int, seed: int) -> ColoredInstance:
    """The k/2-phase red/blue gadget; OPT equals k/2 via the red edges."""
    if k < 2 or k % 2 != 0:
        raise ValueError("G_k requires an even k >= 2")
    rng = _rng(seed)
    pool = _VertexPool()
    edges: list[list[int]] = []
    colors: dict[int, str] = {}
    phases: list[tuple[int, int]] = []
    _gk_phases(k, pool, rng, edges, colors, phases)
    return _finish_colored(k, pool, edges, colors, phases)


def _hk_build(
    k: int, pool: _VertexPool, rng: np.random.Generator
) -> tuple[list[tuple[list[int], list[int], str]], list[frozenset[int]]]:
    """Phases of the recursive construction as (e1, e2, color_of_e1) triples;
    also returns the disjoint booster sets used at this level."""
    if k == 1:
        v = pool.take(1)
        color1 = "red" if rng.integers(0, 2) == 0 else "blue"
        return [(list(v), list(v), color1)], []
    edges: list[list[int]] = []
    colors: dict[int, str] = {}
    phase_ids: list[tuple[int, int]] = []
    blue_pools = _gk_phases(k, pool, rng, edges, colors, phase_ids)
    out = [
        (edges[i1], edges[i2], colors[i1]) for i1, i2 in phase_ids
    ]
    # each blue edge has k/2 + 1 unconsumed private vertices left; the i-th of
    # each forms A_i, which meets every blue edge and no red edge
    a_sets = [
        frozenset(bp[i] for bp in blue_pools) for i in range(k // 2)
    ]
    sub, _ = _hk_build(k // 2, pool, rng)
    for i, (e1, e2, color1) in enumerate(sub):
        boost = sorted(a_sets[i])
        out.append((e1 + boost, e2 + boost, color1))
    return out, a_sets


def gen_hk(k: int, seed: int) -> ColoredInstance:
    """The recursive k-phase distribution; OPT equals k via the red edges."""
    if k < 2 or k & (k - 1) != 0:
        raise ValueError("H_k requires k to be a power of 2, k >= 2")
    rng = _rng(seed)
    pool = _VertexPool()
    triples, a_sets = _hk_build(k, pool, rng)
    edges: list[list[int]] = []
    colors: dict[int, str] = {}
    phases: list[tuple[int, int]] = []
    for e1, e2, color1 in triples:
        id1, id2 = len(edges), len(edges) + 1
        edges.append(e1)
        edges.append(e2)
        phases.append((id1, id2))
        colors[id1] = color1
        colors[id2] = "blue" if color1 == "red" else "red"
    return _finish_colored(k, pool, edges, colors, phases, tuple(a_sets))


def verify_redblue(ci: ColoredInstance) -> list[str]:
    """Check the four structural properties literally against arrival order."""
    violations: list[str] = []
    arrivals = ci.instance.arrivals
    seen = set()
    for id1, id2 in ci.phases:
        pair = {ci.colors.get(id1), ci.colors.get(id2)}
        if pair != {"red", "blue"}:
            violations.append(f"phase ({id1},{id2}) is not one red and one blue")
        seen |= {id1, id2}
    if seen != {e.id for e in arrivals}:
        violations.append("phases do not partition the arrivals into pairs")
    reds = [e for e in arrivals if ci.colors.get(e.id) == "red"]
    for a in range(len(reds)):
        for b in range(a + 1, len(reds)):
            if reds[a].vertices & reds[b].vertices:
                violations.append(
                    f"red edges {reds[a].id} and {reds[b].id} intersect"
                )
    # "future" means edges of strictly later phases; the two edges of one
    # phase arrive together and are not constrained against each other
    for p, (id1, id2) in enumerate(ci.phases):
        for eid in (id1, id2):
            color = ci.colors.get(eid)
            e = arrivals[eid]
            for q in range(p + 1, len(ci.phases)):
                for lid in ci.phases[q]:
                    hits = bool(e.vertices & arrivals[lid].vertices)
                    if color == "blue" and not hits:
                        violations.append(f"blue edge {eid} misses later edge {lid}")
                    if color == "red" and hits:
                        violations.append(f"red edge {eid} intersects later edge {lid}")
    return violations


def gen_random(
    k: int,
    num_edges: int,
    num_resources: int,
    seed: int,
    weighted: bool = False,
    weight_range: tuple[float, float] = (0.1, 10.0),
) -> Instance:
    """Random k-uniform instance; weights log-uniform over weight_range."""
    if num_resources < k:
        raise ValueError("need at least k resources")
    rng = _rng(seed)
    arrivals = []
    lo, hi = weight_range
    for eid in range(num_edges):
        verts = rng.choice(num_resources, size=k, replace=False)
        w = 1.0
        if weighted:
            w = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        arrivals.append(HyperEdge(eid, frozenset(int(v) for v in verts), w))
    return Instance(k, num_resources, tuple(arrivals), weighted)


def gen_random_vertex_arrival(
    k: int,
    num_groups: int,
    num_resources: int,
    seed: int,
    max_group_size: int = 3,
) -> VertexArrivalInstance:
    rng = _rng(seed)
    groups = []
    eid = 0
    for _ in range(num_groups):
        size = int(rng.integers(1, max_group_size + 1))
        edges = []
        seen: set[frozenset[int]] = set()
        while len(edges) < size:
            span = int(rng.integers(1, k + 1))
            verts = frozenset(
                int(v) for v in rng.choice(num_resources, size=span, replace=False)
            )
            if verts in seen:
                continue
            seen.add(verts)
            edges.append(HyperEdge(eid, verts))
            eid += 1
        groups.append(tuple(edges))
    return VertexArrivalInstance(k, num_resources, tuple(groups))


def expected_value_estimate(
    sampler: Callable[[int], ColoredInstance | Instance],
    algorithm: str,
    trials: int,
    seed: int,
) -> tuple[float, float]:
    """Sample mean and standard error of ALG over i.i.d. instances.

    Trial t uses seed + t; stderr is NaN for a single trial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    values = []
    for t in range(trials):
        sample = sampler(seed + t)
        inst = sample.instance if isinstance(sample, ColoredInstance) else sample
        values.append(run_online(inst, algorithm).objective)
    arr = np.asarray(values)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return mean, stderr


# -- staircase adversary ------------------------------------------------------


@dataclass(frozen=True)
class StaircaseIteration:
    m: int
    created: tuple[int, ...]
    selected: tuple[int, ...]
    survivors: tuple[int, ...]  # vertex set U after selection


@dataclass(frozen=True)
class StaircaseRun:
    k: int
    l: int
    delta: float
    iterations: tuple[StaircaseIteration, ...]
    initial_edges: tuple[int, ...]
    instance: Instance

    @property
    def num_iterations(self) -> int:
        return len(self.iterations)

    def estar(self) -> list[int]:
        out: list[int] = []
        for it in self.iterations:
            out.extend(it.selected)
        return out

    def non_selected(self) -> list[int]:
        out: list[int] = []
        for it in self.iterations:
            chosen = set(it.selected)
            out.extend(e for e in it.created if e not in chosen)
        return out


def run_staircase(
    k: int, l: int, delta: float, algorithm: str
) -> tuple[StaircaseRun, Transcript]:
    """Adaptive staircase against a deterministic fractional algorithm.

    Feeds l disjoint k-edges, then repeatedly shrinks the edge size by a
    (1+delta) factor, re-partitions the survivors in ascending vertex order,
    and keeps the l edges the algorithm allocated the most (ties by lowest
    id). Edges below size k are padded with fresh dummy resources before being
    fed, so the algorithm always sees k-uniform arrivals.
    """
    if k < 2 or l < 2 or delta <= 0:
        raise ValueError("staircase requires k >= 2, l >= 2, delta > 0")
    runner = OnlineRunner(algorithm, k)
    edges: list[HyperEdge] = []
    next_dummy = [l * k]  # real vertices occupy [0, l*k)

    def feed(real_verts: Sequence[int]) -> int:
        need = k - len(real_verts)
        dummies = range(next_dummy[0], next_dummy[0] + need)
        next_dummy[0] += need
        e = HyperEdge(len(edges), frozenset(real_verts) | frozenset(dummies))
        edges.append(e)
        runner.feed(e)
        return e.id

    initial = []
    for j in range(l):
        initial.append(feed(range(j * k, (j + 1) * k)))
    u = list(range(l * k))

    iterations: list[StaircaseIteration] = []
    m = k
    while True:
        m = math.floor(m / (1.0 + delta) + 1e-9)
        if m == 0:
            break
        count = len(u) // m
        created = []
        for c in range(count):
            created.append(feed(u[c * m : (c + 1) * m]))
        y = runner.machine.y
        selected = sorted(sorted(created), key=lambda e: (-y[e], e))[:l]
        selected = sorted(selected)
        new_u: list[int] = []
        for e in selected:
            new_u.extend(v for v in edges[e].vertices if v < l * k)
        u = sorted(set(new_u))
        if len(u) != l * m:
            raise AssertionError(f"survivor set has {len(u)} vertices, expected {l * m}")
        iterations.append(
            StaircaseIteration(m, tuple(created), tuple(selected), tuple(u))
        )

    inst = Instance(k, next_dummy[0], tuple(edges), weighted=False)
    run = StaircaseRun(k, l, delta, tuple(iterations), tuple(initial), inst)
    return run, runner.finish(weighted=False)
