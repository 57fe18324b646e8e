"""Hypergraph domain types, validation, padding, the vertex-to-edge-arrival
reduction, and the canonical JSON instance format.

All types are immutable value data; every operation here is a pure function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

#: Absolute feasibility tolerance on x_i <= 1 and y_e >= 0, shared by all
#: algorithms and certificate checks.
EPS_FEAS = 1e-9


class InstanceFormatError(ValueError):
    """Raised when instance text cannot be parsed into a valid instance."""


@dataclass(frozen=True)
class HyperEdge:
    """A hyperedge; ``id`` equals its 0-based arrival position."""

    id: int
    vertices: frozenset[int]
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.vertices:
            raise ValueError(f"edge {self.id}: vertex set must be non-empty")
        if self.weight < 0:
            raise ValueError(f"edge {self.id}: weight must be non-negative")


@dataclass(frozen=True)
class Instance:
    """An ordered arrival sequence of hyperedges over [0, num_resources)."""

    rank_k: int
    num_resources: int
    arrivals: tuple[HyperEdge, ...]
    weighted: bool = False

    def edge(self, edge_id: int) -> HyperEdge:
        return self.arrivals[edge_id]


@dataclass(frozen=True)
class VertexArrivalInstance:
    """Arrival groups; each group shares one online vertex and at most one of
    its edges may be chosen."""

    rank_k: int
    num_resources: int
    groups: tuple[tuple[HyperEdge, ...], ...]


@dataclass(frozen=True)
class FractionalAllocation:
    """Per-edge matched fractions; fill levels are derived, never stored."""

    y: Mapping[int, float]


@dataclass(frozen=True)
class IntegralMatching:
    chosen: frozenset[int]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    edge_id: int | None = None
    resource: int | None = None


def validate_instance(inst: Instance) -> list[Violation]:
    """Check all Instance invariants; violations are data, not faults."""
    out: list[Violation] = []
    if inst.rank_k < 2:
        out.append(Violation("rank", f"rank k must be >= 2, got {inst.rank_k}"))
    if inst.num_resources < 1 and (inst.arrivals or inst.num_resources < 0):
        out.append(Violation("resources", "num_resources must be >= 1"))
    for pos, e in enumerate(inst.arrivals):
        if e.id != pos:
            out.append(
                Violation("edge-id", f"edge at position {pos} has id {e.id}", edge_id=e.id)
            )
        if len(e.vertices) > inst.rank_k:
            out.append(
                Violation("rank", f"edge {e.id} exceeds rank {inst.rank_k}", edge_id=e.id)
            )
        for v in e.vertices:
            if not (0 <= v < inst.num_resources):
                out.append(
                    Violation(
                        "vertex-range",
                        f"edge {e.id} uses out-of-range vertex {v}",
                        edge_id=e.id,
                        resource=v,
                    )
                )
        if not inst.weighted and e.weight != 1.0:
            out.append(
                Violation(
                    "weight",
                    f"edge {e.id} has weight {e.weight} in unweighted instance",
                    edge_id=e.id,
                )
            )
    return out


def pad_to_uniform(inst: Instance) -> Instance:
    """Pad every edge to exactly rank_k vertices with fresh dummy resources.

    Dummy resources are appended after all real resources, assigned in edge
    order; each dummy appears in exactly one edge. Identity on instances that
    are already k-uniform.
    """
    if all(len(e.vertices) == inst.rank_k for e in inst.arrivals):
        return inst
    next_dummy = inst.num_resources
    padded = []
    for e in inst.arrivals:
        need = inst.rank_k - len(e.vertices)
        if need < 0:
            raise ValueError(f"edge {e.id} exceeds rank {inst.rank_k}")
        dummies = range(next_dummy, next_dummy + need)
        next_dummy += need
        padded.append(HyperEdge(e.id, e.vertices | frozenset(dummies), e.weight))
    return Instance(inst.rank_k, next_dummy, tuple(padded), inst.weighted)


def fill_levels(inst: Instance, alloc: FractionalAllocation) -> dict[int, float]:
    """x_i = sum of y_e over edges containing i, by direct summation."""
    x = {i: 0.0 for i in range(inst.num_resources)}
    for eid, ye in alloc.y.items():
        if not (0 <= eid < len(inst.arrivals)):
            raise KeyError(f"unknown edge id {eid}")
        for v in inst.arrivals[eid].vertices:
            x[v] += ye
    return x


@dataclass(frozen=True)
class ReductionMapping:
    """Associates edges of the reduced edge-arrival instance back to
    (group, index-within-group) of the vertex-arrival instance."""

    edge_to_group: Mapping[int, tuple[int, int]]
    group_resources: Mapping[int, int]

    def to_json(self) -> str:
        obj = {
            "edges": {str(eid): list(gl) for eid, gl in sorted(self.edge_to_group.items())},
            "group_resources": {str(t): r for t, r in sorted(self.group_resources.items())},
        }
        return json.dumps(obj, indent=2)

    @staticmethod
    def from_json(text: str) -> "ReductionMapping":
        obj = json.loads(text)
        return ReductionMapping(
            {int(k): (v[0], v[1]) for k, v in obj["edges"].items()},
            {int(k): v for k, v in obj["group_resources"].items()},
        )


def reduce_vertex_to_edge_arrival(
    vinst: VertexArrivalInstance,
) -> tuple[Instance, ReductionMapping]:
    """Reduce a rank-k vertex-arrival instance to a rank-(k+1) edge-arrival one.

    For group t, a fresh shared resource i_t is added to each of its edges and
    the edges arrive consecutively in group order; the shared resource
    guarantees at most one edge per group is chosen. The result may still need
    pad_to_uniform (private dummies do not affect the group constraint).
    """
    next_res = vinst.num_resources
    arrivals: list[HyperEdge] = []
    edge_to_group: dict[int, tuple[int, int]] = {}
    group_resources: dict[int, int] = {}
    for t, group in enumerate(vinst.groups):
        shared = next_res
        next_res += 1
        group_resources[t] = shared
        for ell, e in enumerate(group):
            eid = len(arrivals)
            arrivals.append(HyperEdge(eid, e.vertices | {shared}, e.weight))
            edge_to_group[eid] = (t, ell)
    inst = Instance(vinst.rank_k + 1, next_res, tuple(arrivals), weighted=False)
    return inst, ReductionMapping(edge_to_group, group_resources)


def lift_edge_decisions(
    mapping: ReductionMapping, decisions: IntegralMatching
) -> dict[int, int]:
    """Lift a matching on the reduced instance to a per-group choice.

    Returns {group: index-within-group}. Selecting two edges of one group
    violates reduction soundness and is a fault.
    """
    choice: dict[int, int] = {}
    for eid in sorted(decisions.chosen):
        t, ell = mapping.edge_to_group[eid]
        if t in choice:
            raise ValueError(f"group {t} has two selected edges (reduction soundness)")
        choice[t] = ell
    return choice


# -- canonical instance file format ------------------------------------------


def serialize_instance(inst: Instance) -> str:
    arrivals = []
    for e in inst.arrivals:
        rec: dict = {"vertices": sorted(e.vertices)}
        if e.weight != 1.0:
            rec["weight"] = e.weight
        arrivals.append(rec)
    obj = {
        "k": inst.rank_k,
        "weighted": inst.weighted,
        "num_resources": inst.num_resources,
        "arrivals": arrivals,
    }
    return json.dumps(obj, indent=2)


def _parse_edge(rec: object, eid: int, where: str) -> HyperEdge:
    if not isinstance(rec, dict):
        raise InstanceFormatError(f"{where}: arrival record must be an object")
    if "vertices" not in rec:
        raise InstanceFormatError(f"{where}: missing field 'vertices'")
    verts = rec["vertices"]
    if not isinstance(verts, list) or not all(isinstance(v, int) for v in verts):
        raise InstanceFormatError(f"{where}: 'vertices' must be a list of integers")
    if len(set(verts)) != len(verts):
        raise InstanceFormatError(f"{where}: duplicate vertex in edge")
    weight = rec.get("weight", 1.0)
    if not isinstance(weight, (int, float)):
        raise InstanceFormatError(f"{where}: 'weight' must be a number")
    return HyperEdge(eid, frozenset(verts), float(weight))


def parse_instance(text: str) -> Instance:
    """Parse the canonical instance format; rank violations are errors here."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise InstanceFormatError("top level must be a JSON object")
    for name in ("k", "weighted", "num_resources", "arrivals"):
        if name not in obj:
            raise InstanceFormatError(f"missing field '{name}'")
    k = obj["k"]
    if not isinstance(k, int) or k < 2:
        raise InstanceFormatError("field 'k' must be an integer >= 2")
    arrivals = tuple(
        _parse_edge(rec, eid, f"arrivals[{eid}]") for eid, rec in enumerate(obj["arrivals"])
    )
    inst = Instance(k, int(obj["num_resources"]), arrivals, bool(obj["weighted"]))
    bad = validate_instance(inst)
    if bad:
        raise InstanceFormatError("; ".join(v.message for v in bad))
    return inst


def serialize_vertex_instance(vinst: VertexArrivalInstance) -> str:
    groups = []
    for group in vinst.groups:
        recs = []
        for e in group:
            rec: dict = {"vertices": sorted(e.vertices)}
            if e.weight != 1.0:
                rec["weight"] = e.weight
            recs.append(rec)
        groups.append(recs)
    obj = {"k": vinst.rank_k, "num_resources": vinst.num_resources, "groups": groups}
    return json.dumps(obj, indent=2)


def parse_vertex_instance(text: str) -> VertexArrivalInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(obj, dict) or "k" not in obj or "groups" not in obj:
        raise InstanceFormatError("vertex-arrival file needs fields 'k' and 'groups'")
    k = obj["k"]
    if not isinstance(k, int) or k < 1:
        raise InstanceFormatError("field 'k' must be a positive integer")
    groups = []
    eid = 0
    max_vertex = -1
    for t, group in enumerate(obj["groups"]):
        edges = []
        seen: set[frozenset[int]] = set()
        for ell, rec in enumerate(group):
            e = _parse_edge(rec, eid, f"groups[{t}][{ell}]")
            eid += 1
            if len(e.vertices) > k:
                raise InstanceFormatError(f"groups[{t}][{ell}]: edge exceeds rank {k}")
            if e.vertices in seen:
                raise InstanceFormatError(f"groups[{t}][{ell}]: duplicate edge in group")
            seen.add(e.vertices)
            max_vertex = max(max_vertex, max(e.vertices))
            edges.append(e)
        if not edges:
            raise InstanceFormatError(f"groups[{t}]: group must be non-empty")
        groups.append(tuple(edges))
    num_resources = obj.get("num_resources", max_vertex + 1)
    return VertexArrivalInstance(k, int(num_resources), tuple(groups))
