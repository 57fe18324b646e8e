"""Online algorithm state machines.

Three algorithms share the step interface: greedy integral matching,
fractional water-filling with closed-form growth, and weighted water-filling
with free disposal simulated exactly by events.

The water-filling price of an arriving edge is sum over its vertices of
B^(x_i - 1) with B = k*ln(k). Growth raises all k fills at a common rate, so
the price along the growth path is P0 * B^y and every stopping point is a
closed-form logarithm. The weighted variant integrates B^(f_i(t) - 1) over
weight thresholds t in [0, w_e) and stops when that integral reaches w_e;
saturated vertices displace their minimum-weight supported edge.

Dual variables (per-resource revenue r, per-edge utility u) are accumulated
alongside growth with matching closed forms, so the balance
sum(r) + sum(u) = ALG holds to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from hypermatch.core import (
    EPS_FEAS,
    FractionalAllocation,
    HyperEdge,
    Instance,
    IntegralMatching,
    validate_instance,
)

ALGORITHMS = ("greedy", "waterfill", "weighted-waterfill")

#: Safety cap on displacement events while growing a single edge.
MAX_EVENTS = 100_000


@dataclass(frozen=True)
class Decision:
    """Outcome of one arrival: fraction granted, fractions displaced, and the
    price at which growth stopped."""

    edge_id: int
    delta_y: float
    displacements: dict[int, float]
    price_at_stop: float


@dataclass(frozen=True)
class DualIncrement:
    dr: dict[int, float]
    du: float


@dataclass(frozen=True)
class TranscriptEntry:
    edge: HyperEdge
    decision: Decision
    duals: DualIncrement


@dataclass(frozen=True)
class Transcript:
    """Full record of one online run; replaying the arrivals from an empty
    state reproduces the final allocation bit-for-bit."""

    algorithm: str
    rank_k: int
    weighted: bool
    entries: tuple[TranscriptEntry, ...]
    final_y: dict[int, float]
    objective: float

    def allocation(self) -> FractionalAllocation:
        return FractionalAllocation(dict(self.final_y))

    def to_json_obj(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "k": self.rank_k,
            "weighted": self.weighted,
            "alg": self.objective,
            "arrivals": [
                {
                    "edge": t.edge.id,
                    "dy": t.decision.delta_y,
                    "displaced": {str(e): v for e, v in sorted(t.decision.displacements.items())},
                    "price": t.decision.price_at_stop,
                    "du": t.duals.du,
                    "dr": {str(i): v for i, v in sorted(t.duals.dr.items())},
                }
                for t in self.entries
            ],
            "y": {str(e): v for e, v in sorted(self.final_y.items())},
        }


class GreedyMatcher:
    """Accept an arriving edge iff it is disjoint from all accepted edges."""

    weighted = False

    def __init__(self, rank_k: int):
        self.rank_k = rank_k
        self.covered: set[int] = set()
        self.chosen: set[int] = set()
        self.y: dict[int, float] = {}

    def step(self, edge: HyperEdge) -> tuple[Decision, DualIncrement]:
        accept = self.covered.isdisjoint(edge.vertices)
        if accept:
            self.covered |= edge.vertices
            self.chosen.add(edge.id)
        self.y[edge.id] = 1.0 if accept else 0.0
        return Decision(edge.id, 1.0 if accept else 0.0, {}, 0.0), DualIncrement({}, 0.0)

    def matching(self) -> IntegralMatching:
        return IntegralMatching(frozenset(self.chosen))

    def objective(self) -> float:
        return float(len(self.chosen))


class WaterFiller:
    """Fractional water-filling for unweighted k-uniform arrivals."""

    weighted = False

    def __init__(self, rank_k: int):
        if rank_k < 2:
            raise ValueError("water-filling requires rank k >= 2")
        self.rank_k = rank_k
        self.base = rank_k * math.log(rank_k)
        self.log_base = math.log(self.base)
        self.x: dict[int, float] = {}
        self.y: dict[int, float] = {}

    def price(self, edge: HyperEdge) -> float:
        """P = sum of B^(x_i - 1) over the edge's vertices, in id order."""
        return sum(
            math.exp((self.x.get(i, 0.0) - 1.0) * self.log_base)
            for i in sorted(edge.vertices)
        )

    def step(self, edge: HyperEdge) -> tuple[Decision, DualIncrement]:
        if len(edge.vertices) != self.rank_k:
            raise ValueError(f"edge {edge.id} is not {self.rank_k}-uniform")
        p0 = self.price(edge)
        if p0 >= 1.0:
            self.y[edge.id] = 0.0
            return Decision(edge.id, 0.0, {}, p0), DualIncrement({}, 0.0)
        dy = math.log(1.0 / p0) / self.log_base
        dr: dict[int, float] = {}
        for i in sorted(edge.vertices):
            x0 = self.x.get(i, 0.0)
            x1 = x0 + dy
            gain = (
                math.exp((x1 - 1.0) * self.log_base) - math.exp((x0 - 1.0) * self.log_base)
            ) / self.log_base
            dr[i] = gain
            self.x[i] = x1
        self.y[edge.id] = dy
        du = max(0.0, dy - sum(dr.values()))
        return Decision(edge.id, dy, {}, p0 * math.exp(dy * self.log_base)), DualIncrement(dr, du)

    def objective(self) -> float:
        return sum(self.y.values())


class WeightedWaterFiller:
    """Weighted water-filling with free disposal, simulated exactly by events.

    Growth of an arriving edge stops when its price (the threshold integral of
    B^(f_i(t)-1) over t in [0, w_e)) reaches w_e. While a vertex is saturated,
    its current victim (minimum-weight supported edge, ties by lowest id)
    decreases at rate 1; a victim shared by several saturated vertices still
    decreases at rate 1 in total.
    """

    weighted = True

    def __init__(self, rank_k: int, debug_check: bool = False):
        if rank_k < 2:
            raise ValueError("water-filling requires rank k >= 2")
        self.rank_k = rank_k
        self.base = rank_k * math.log(rank_k)
        self.log_base = math.log(self.base)
        self.x: dict[int, float] = {}
        self.y: dict[int, float] = {}
        # support[i]: edge ids with i in edge and y > 0
        self.support: dict[int, set[int]] = {}
        self.edges: dict[int, HyperEdge] = {}
        self.debug_check = debug_check

    # -- step-fill bookkeeping ------------------------------------------------

    def fill_segments(self, i: int, cap: float) -> list[tuple[float, float, float]]:
        """Segments (t_lo, t_hi, level) of f_i on [0, cap), highest thresholds
        first removed; f_i(t) = sum of y_e over supported e with w_e >= t."""
        entries = sorted(
            ((self.edges[e].weight, e) for e in self.support.get(i, ())),
        )
        segs: list[tuple[float, float, float]] = []
        total = sum(self.y[e] for _, e in entries)
        lo = 0.0
        for w, e in entries:
            if w >= cap:
                break
            if w > lo:
                segs.append((lo, w, total))
                lo = w
            total -= self.y[e]
        if lo < cap:
            segs.append((lo, cap, total))
        return segs

    def fill_level(self, i: int, t: float) -> float:
        return sum(self.y[e] for e in self.support.get(i, ()) if self.edges[e].weight >= t)

    def price(self, edge: HyperEdge) -> float:
        """Sum over vertices of the exact integral of B^(f_i(t)-1) dt on
        [0, w_e], from step-fill breakpoints."""
        total = 0.0
        for i in sorted(edge.vertices):
            for lo, hi, level in self.fill_segments(i, edge.weight):
                total += (hi - lo) * math.exp((level - 1.0) * self.log_base)
        return total

    # -- victim selection -----------------------------------------------------

    def _victim(self, i: int) -> int | None:
        cands = [e for e in self.support.get(i, ()) if self.y[e] > EPS_FEAS]
        if not cands:
            return None
        return min(cands, key=lambda e: (self.edges[e].weight, e))

    def _add_support(self, edge: HyperEdge) -> None:
        for i in edge.vertices:
            self.support.setdefault(i, set()).add(edge.id)

    def _drop_support(self, eid: int) -> None:
        for i in self.edges[eid].vertices:
            s = self.support.get(i)
            if s is not None:
                s.discard(eid)

    # -- growth ---------------------------------------------------------------

    def step(self, edge: HyperEdge) -> tuple[Decision, DualIncrement]:
        if len(edge.vertices) != self.rank_k:
            raise ValueError(f"edge {edge.id} is not {self.rank_k}-uniform")
        self.edges[edge.id] = edge
        self.y[edge.id] = 0.0
        w = edge.weight
        verts = sorted(edge.vertices)
        price0 = self.price(edge)
        dy = 0.0
        displaced: dict[int, float] = {}
        dr: dict[int, float] = {i: 0.0 for i in verts}
        du = 0.0
        stop_price = price0
        if w > 0.0:
            for _ in range(MAX_EVENTS):
                grew, stop_price = self._grow_event(edge, verts, displaced, dr_out=dr)
                if grew is None:
                    break
                dy += grew[0]
                du += grew[1]
            else:
                raise RuntimeError(f"edge {edge.id}: event budget exhausted")
        du = max(0.0, du)
        dr = {i: v for i, v in dr.items() if v != 0.0}
        displaced = {e: v for e, v in displaced.items() if v > 0.0}
        if self.debug_check:
            self._check_consistency()
        dec = Decision(edge.id, dy, displaced, stop_price)
        return dec, DualIncrement(dr, du)

    def _grow_event(
        self,
        edge: HyperEdge,
        verts: list[int],
        displaced: dict[int, float],
        dr_out: dict[int, float],
    ):
        """Run one event segment; returns ((ds, du), price) or (None, price)."""
        w = edge.weight
        lb = self.log_base

        # saturated vertices and their victims; the arriving edge is a victim
        # candidate once it has positive allocation
        sat = [i for i in verts if self.x.get(i, 0.0) >= 1.0 - EPS_FEAS]
        victims: dict[int, int] = {}
        for i in sat:
            v = self._victim(i)
            if v is not None:
                victims[i] = v
        victim_ids = sorted(set(victims.values()))
        # canonical owner of each victim: lowest vertex id choosing it; other
        # sharers keep full revenue over the frozen unit-level range so the
        # balance with the (deduplicated) payoff stays exact
        owner: dict[int, int] = {}
        for i in sorted(victims):
            owner.setdefault(victims[i], i)

        # per-vertex fill rate: +1 from the arriving edge, -1 per victim
        # containing the vertex
        rate: dict[int, float] = {}
        for i in verts:
            r = 1.0
            for v in victim_ids:
                if i in self.edges[v].vertices:
                    r -= 1.0
            rate[i] = r

        # price as a function of growth s: sum of len * B^(level + rho*s - 1)
        # where rho is the net rate of f_i on that threshold segment
        terms: list[tuple[int, float, float, float, float]] = []  # (i, lo, hi, level, rho)
        for i in verts:
            for lo, hi, level in self.fill_segments(i, w):
                rho = 1.0
                for v in victim_ids:
                    if i in self.edges[v].vertices and self.edges[v].weight >= hi:
                        rho -= 1.0
                terms.append((i, lo, hi, level, rho))

        def price_at(s: float) -> float:
            return sum(
                (hi - lo) * math.exp((level + rho * s - 1.0) * lb)
                for _, lo, hi, level, rho in terms
            )

        p0 = price_at(0.0)
        if p0 >= w - 1e-12 * max(1.0, w):
            return None, p0
        if all(rho == 0.0 for _, _, _, _, rho in terms):
            # no strict gain possible: every vertex frozen by an equal-or-
            # heavier victim swap
            return None, p0

        # candidate event horizons
        s_limit = math.inf
        for v in victim_ids:
            s_limit = min(s_limit, self.y[v])
        for i in verts:
            if rate[i] > 0.0 and self.x.get(i, 0.0) < 1.0 - EPS_FEAS:
                s_limit = min(s_limit, (1.0 - self.x.get(i, 0.0)) / rate[i])

        s_price = self._price_crossing(terms, w, s_limit)
        s = min(s_price, s_limit)
        if not math.isfinite(s) or s <= 0.0:
            return None, p0

        # dual increments for this segment, exact closed forms
        price_integral = 0.0
        for i, lo, hi, level, rho in terms:
            seg_len = hi - lo
            if rho == 0.0:
                inc = seg_len * math.exp((level - 1.0) * lb) * s
            else:
                inc = (
                    seg_len
                    * (math.exp((level + rho * s - 1.0) * lb) - math.exp((level - 1.0) * lb))
                    / (rho * lb)
                )
            price_integral += inc
            # revenue excludes [0, w_victim] only at the victim's owner vertex
            excl = 0.0
            if i in victims and owner.get(victims[i]) == i:
                excl = self.edges[victims[i]].weight
            if hi > excl:
                if lo >= excl:
                    dr_out[i] += inc
                else:
                    # split the segment at the exclusion threshold
                    part = (hi - excl) / seg_len
                    dr_out[i] += inc * part
        du_inc = w * s - price_integral

        # apply the segment: arriving edge grows, victims shrink
        self.y[edge.id] += s
        for i in verts:
            self.x[i] = self.x.get(i, 0.0) + s
        for v in victim_ids:
            self.y[v] -= s
            displaced[v] = displaced.get(v, 0.0) + s
            for m in self.edges[v].vertices:
                self.x[m] = self.x.get(m, 0.0) - s
            if self.y[v] <= EPS_FEAS:
                self.y[v] = 0.0
                self._drop_support(v)
        if self.y[edge.id] > EPS_FEAS and edge.id not in self.support.get(verts[0], set()):
            self._add_support(edge)
        return (s, du_inc), price_at(s)

    def _price_crossing(self, terms, w: float, s_limit: float) -> float:
        """Smallest s > 0 with price(s) = w, or inf if none before s_limit."""
        lb = self.log_base
        frozen = sum(
            (hi - lo) * math.exp((level - 1.0) * lb)
            for _, lo, hi, level, rho in terms
            if rho == 0.0
        )
        growing = [t for t in terms if t[4] != 0.0]
        if all(t[4] == 1.0 for t in growing):
            # pure exponential growth: price(s) = frozen + C * B^s
            c = sum(
                (hi - lo) * math.exp((level - 1.0) * lb) for _, lo, hi, level, _ in growing
            )
            if c <= 0.0 or frozen >= w:
                return 0.0 if frozen >= w else math.inf
            return math.log((w - frozen) / c) / lb

        def price_at(s: float) -> float:
            return frozen + sum(
                (hi - lo) * math.exp((level + rho * s - 1.0) * lb)
                for _, lo, hi, level, rho in growing
            )

        # mixed rates (victim overlaps): bracket and bisect
        hi_s = s_limit if math.isfinite(s_limit) else 1.0
        if price_at(hi_s) < w:
            return math.inf
        lo_s = 0.0
        for _ in range(200):
            mid = 0.5 * (lo_s + hi_s)
            if price_at(mid) < w:
                lo_s = mid
            else:
                hi_s = mid
            if hi_s - lo_s < 1e-15:
                break
        return hi_s

    def _check_consistency(self) -> None:
        x_ref: dict[int, float] = {}
        for eid, ye in self.y.items():
            for i in self.edges[eid].vertices:
                x_ref[i] = x_ref.get(i, 0.0) + ye
        for i, xi in self.x.items():
            if abs(xi - x_ref.get(i, 0.0)) > 1e-7:
                raise AssertionError(f"fill drift at resource {i}: {xi} vs {x_ref.get(i)}")

    def objective(self) -> float:
        return sum(self.edges[e].weight * ye for e, ye in self.y.items())


def make_algorithm(name: str, rank_k: int):
    if name == "greedy":
        return GreedyMatcher(rank_k)
    if name == "waterfill":
        return WaterFiller(rank_k)
    if name == "weighted-waterfill":
        return WeightedWaterFiller(rank_k)
    raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")


class OnlineRunner:
    """Feeds arrivals to an algorithm and records the transcript."""

    def __init__(self, algorithm: str, rank_k: int):
        self.algorithm = algorithm
        self.machine = make_algorithm(algorithm, rank_k)
        self.entries: list[TranscriptEntry] = []

    def feed(self, edge: HyperEdge) -> Decision:
        dec, duals = self.machine.step(edge)
        self.entries.append(TranscriptEntry(edge, dec, duals))
        return dec

    def finish(self, weighted: bool) -> Transcript:
        return Transcript(
            self.algorithm,
            self.machine.rank_k,
            weighted,
            tuple(self.entries),
            dict(self.machine.y),
            self.machine.objective(),
        )


def run_online(inst: Instance, algorithm: str) -> Transcript:
    """Run one algorithm over a valid k-uniform instance.

    Mode rules: greedy and waterfill require an unweighted instance;
    weighted-waterfill accepts either (unweighted runs as unit weights).
    """
    bad = validate_instance(inst)
    if bad:
        raise ValueError("invalid instance: " + "; ".join(v.message for v in bad))
    if any(len(e.vertices) != inst.rank_k for e in inst.arrivals):
        raise ValueError("instance must be k-uniform; pad_to_uniform first")
    if inst.weighted and algorithm != "weighted-waterfill":
        raise ValueError(f"algorithm {algorithm!r} requires an unweighted instance")
    runner = OnlineRunner(algorithm, inst.rank_k)
    for edge in inst.arrivals:
        runner.feed(edge)
    return runner.finish(inst.weighted)
