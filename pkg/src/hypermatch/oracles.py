"""Exact offline baselines.

- opt_integral: branch-and-bound maximum (weight) disjoint edge set.
- opt_fractional: packing LP with a feasible dual as optimality certificate;
  exact rational simplex for tiny instances, HiGHS (scipy) otherwise.
- disjoint_lower_bound: certified lower bound from a literal disjointness check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from hypermatch.core import HyperEdge, Instance, IntegralMatching

MAX_INTEGRAL_EDGES = 30
MAX_LP_EDGES = 5000
MAX_LP_INCIDENCES = 200_000
EXACT_LP_EDGES = 12


class OracleCapError(ValueError):
    """Instance exceeds the configured exact-oracle cap; use bounds instead."""


class LpSolveError(RuntimeError):
    """LP did not reach the requested gap; never a silent approximation."""


@dataclass(frozen=True)
class LpSolution:
    primal: dict[int, float]
    dual: dict[int, float]
    primal_value: float
    dual_value: float
    gap: float

    def to_json_obj(self) -> dict:
        return {
            "primal": {str(e): v for e, v in sorted(self.primal.items())},
            "dual": {str(i): v for i, v in sorted(self.dual.items())},
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
        }


def opt_integral(
    inst: Instance, max_edges: int = MAX_INTEGRAL_EDGES
) -> tuple[float, IntegralMatching]:
    """Maximum-cardinality (or -weight) disjoint edge set by branch and bound.

    Certified optimal by exhausted search; the remaining-weight bound prunes.
    """
    m = len(inst.arrivals)
    if m > max_edges:
        raise OracleCapError(
            f"{m} edges exceeds the exact cap {max_edges}; use disjoint_lower_bound"
        )
    if m == 0:
        return 0.0, IntegralMatching(frozenset())
    weights = [e.weight if inst.weighted else 1.0 for e in inst.arrivals]
    conflict = [0] * m
    for a in range(m):
        for b in range(a + 1, m):
            if inst.arrivals[a].vertices & inst.arrivals[b].vertices:
                conflict[a] |= 1 << b
                conflict[b] |= 1 << a
    # suffix sums of weights for the pruning bound, in id order
    suffix = [0.0] * (m + 1)
    for a in range(m - 1, -1, -1):
        suffix[a] = suffix[a + 1] + weights[a]

    best_value = -1.0
    best_set = 0

    def search(idx: int, avail: int, value: float, chosen: int) -> None:
        nonlocal best_value, best_set
        if value > best_value:
            best_value, best_set = value, chosen
        if idx >= m or value + suffix[idx] <= best_value:
            return
        bit = 1 << idx
        if avail & bit:
            search(idx + 1, avail & ~conflict[idx], value + weights[idx], chosen | bit)
        search(idx + 1, avail, value, chosen)

    search(0, (1 << m) - 1, 0.0, 0)
    chosen = frozenset(a for a in range(m) if best_set & (1 << a))
    return best_value, IntegralMatching(chosen)


def _active_resources(inst: Instance) -> list[int]:
    seen: set[int] = set()
    for e in inst.arrivals:
        seen |= e.vertices
    return sorted(seen)


def _exact_simplex(inst: Instance) -> LpSolution:
    """Dense rational simplex with Bland's rule; exact duals from the tableau."""
    edges = inst.arrivals
    m = len(edges)
    rows = _active_resources(inst)
    row_of = {r: idx for idx, r in enumerate(rows)}
    n = len(rows)
    # tableau over columns [y_0..y_{m-1}, s_0..s_{n-1} | b]; maximize c y
    a = [[Fraction(0)] * (m + n + 1) for _ in range(n)]
    for j, e in enumerate(edges):
        for v in e.vertices:
            a[row_of[v]][j] = Fraction(1)
    for i in range(n):
        a[i][m + i] = Fraction(1)
        a[i][m + n] = Fraction(1)
    cost = [Fraction(e.weight if inst.weighted else 1) for e in edges] + [Fraction(0)] * n
    basis = [m + i for i in range(n)]
    # reduced-cost row (negated objective row): z_j - c_j stored as c_j - z_j
    red = cost[:] + [Fraction(0)]

    for _ in range(100_000):
        enter = next((j for j in range(m + n) if red[j] > 0), None)  # Bland
        if enter is None:
            break
        pivot_row = None
        for i in range(n):
            if a[i][enter] > 0:
                ratio = a[i][m + n] / a[i][enter]
                if pivot_row is None or ratio < best_ratio or (
                    ratio == best_ratio and basis[i] < basis[pivot_row]
                ):
                    pivot_row, best_ratio = i, ratio
        if pivot_row is None:
            raise LpSolveError("unbounded packing LP (invalid instance)")
        piv = a[pivot_row][enter]
        a[pivot_row] = [v / piv for v in a[pivot_row]]
        for i in range(n):
            if i != pivot_row and a[i][enter] != 0:
                f = a[i][enter]
                a[i] = [v - f * w for v, w in zip(a[i], a[pivot_row])]
        f = red[enter]
        red = [v - f * w for v, w in zip(red, a[pivot_row] + [])]
        basis[pivot_row] = enter
    else:
        raise LpSolveError("simplex iteration budget exhausted")

    primal = {e.id: 0.0 for e in edges}
    primal_exact = {e.id: Fraction(0) for e in edges}
    for i, b in enumerate(basis):
        if b < m:
            primal_exact[edges[b].id] = a[i][m + n]
    value = sum(
        Fraction(e.weight if inst.weighted else 1) * primal_exact[e.id] for e in edges
    )
    dual = {rows[i]: float(-red[m + i]) for i in range(n)}
    for e in edges:
        primal[e.id] = float(primal_exact[e.id])
    v = float(value)
    return LpSolution(primal, dual, v, v, 0.0)


def _highs_lp(inst: Instance, tol: float) -> LpSolution:
    edges = inst.arrivals
    m = len(edges)
    rows = _active_resources(inst)
    row_of = {r: idx for idx, r in enumerate(rows)}
    n = len(rows)
    a = np.zeros((n, m))
    for j, e in enumerate(edges):
        for v in e.vertices:
            a[row_of[v], j] = 1.0
    c = np.array([-(e.weight if inst.weighted else 1.0) for e in edges])
    res = linprog(c, A_ub=a, b_ub=np.ones(n), bounds=(0, None), method="highs")
    if not res.success:
        raise LpSolveError(f"LP solver failed: {res.message}")
    primal = {e.id: float(res.x[j]) for j, e in enumerate(edges)}
    z = np.maximum(0.0, -res.ineqlin.marginals)
    dual = {rows[i]: float(z[i]) for i in range(n)}
    primal_value = float(-res.fun)
    dual_value = float(z.sum())
    gap = dual_value - primal_value
    if not (-1e-7 <= gap <= max(tol, 1e-6) * max(1.0, primal_value)):
        raise LpSolveError(f"duality gap {gap} exceeds tolerance {tol}")
    return LpSolution(primal, dual, primal_value, dual_value, gap)


def opt_fractional(inst: Instance, tol: float = 1e-7) -> LpSolution:
    """Solve the fractional packing relaxation with a dual certificate.

    Exact rational simplex up to EXACT_LP_EDGES edges (gap identically zero);
    HiGHS above that, with the gap checked against tol.
    """
    m = len(inst.arrivals)
    if m == 0:
        return LpSolution({}, {}, 0.0, 0.0, 0.0)
    incidences = sum(len(e.vertices) for e in inst.arrivals)
    if m > MAX_LP_EDGES or incidences > MAX_LP_INCIDENCES:
        raise OracleCapError(
            f"LP cap exceeded ({m} edges, {incidences} incidences); use bounds instead"
        )
    if m <= EXACT_LP_EDGES:
        return _exact_simplex(inst)
    return _highs_lp(inst, tol)


def disjoint_lower_bound(edges: Sequence[HyperEdge], weighted: bool = False) -> float:
    """Verify pairwise disjointness literally; the count (or total weight) is a
    certified lower bound on the offline optimum."""
    es = list(edges)
    for i in range(len(es)):
        for j in range(i + 1, len(es)):
            if es[i].vertices & es[j].vertices:
                raise ValueError(f"edges {es[i].id} and {es[j].id} are not disjoint")
    if weighted:
        return sum(e.weight for e in es)
    return float(len(es))
