import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermatch.core import HyperEdge, Instance
from hypermatch.algorithms import run_online
from hypermatch.adversaries import gen_random
from hypermatch.oracles import (
    EXACT_LP_EDGES,
    OracleCapError,
    disjoint_lower_bound,
    opt_fractional,
    opt_integral,
)


def edge(eid, verts, w=1.0):
    return HyperEdge(eid, frozenset(verts), w)


class TestIntegralOracle:
    def test_empty(self):
        v, m = opt_integral(Instance(2, 0, ()))
        assert v == 0.0 and m.chosen == frozenset()

    def test_picks_pair_over_hub(self):
        inst = Instance(
            2, 4, (edge(0, [0, 2]), edge(1, [0, 1]), edge(2, [2, 3]))
        )
        v, m = opt_integral(inst)
        assert v == 2.0 and m.chosen == {1, 2}

    def test_weighted_prefers_heavy_hub(self):
        inst = Instance(
            2, 4,
            (edge(0, [0, 2], 5.0), edge(1, [0, 1], 1.0), edge(2, [2, 3], 1.0)),
            weighted=True,
        )
        v, m = opt_integral(inst)
        assert v == 5.0 and m.chosen == {0}

    def test_cap_enforced(self):
        inst = gen_random(3, 31, 40, seed=0)
        with pytest.raises(OracleCapError):
            opt_integral(inst)

    def test_matches_brute_force_on_small_instances(self):
        from itertools import combinations

        for seed in range(10):
            inst = gen_random(3, 9, 8, seed=seed)
            best = 0
            for r in range(1, 10):
                for combo in combinations(inst.arrivals, r):
                    if all(
                        a.vertices.isdisjoint(b.vertices)
                        for a, b in combinations(combo, 2)
                    ):
                        best = max(best, r)
            v, _ = opt_integral(inst)
            assert v == best


class TestFractionalOracle:
    def test_exact_path_has_zero_gap(self):
        inst = gen_random(3, EXACT_LP_EDGES, 8, seed=2)
        sol = opt_fractional(inst)
        assert sol.gap == 0.0
        assert sol.primal_value == sol.dual_value

    def test_triangle_half_integral(self):
        # three pairwise-intersecting 2-edges: LP optimum 3/2 at y = 1/2 each
        inst = Instance(2, 3, (edge(0, [0, 1]), edge(1, [1, 2]), edge(2, [0, 2])))
        sol = opt_fractional(inst)
        assert sol.primal_value == pytest.approx(1.5, abs=1e-12)
        for y in sol.primal.values():
            assert y == pytest.approx(0.5, abs=1e-12)

    def test_lp_at_least_integral(self):
        for seed in range(8):
            inst = gen_random(3, 12, 9, seed=seed, weighted=seed % 2 == 0)
            v_int, _ = opt_integral(inst)
            assert opt_fractional(inst).primal_value >= v_int - 1e-9

    def test_solver_paths_agree(self):
        # the rational-simplex and HiGHS paths must return the same optimum
        from hypermatch import oracles

        inst = gen_random(3, 12, 9, seed=6)
        exact = opt_fractional(inst)
        hs = oracles._highs_lp(inst, tol=1e-7)
        assert hs.primal_value == pytest.approx(exact.primal_value, abs=1e-7)

    def test_dual_is_feasible(self):
        inst = gen_random(4, 40, 14, seed=3, weighted=True)
        sol = opt_fractional(inst)
        for e in inst.arrivals:
            cover = sum(sol.dual.get(i, 0.0) for i in e.vertices)
            assert cover >= e.weight - 1e-6

    def test_cap_enforced(self):
        arrivals = tuple(edge(i, [i % 7, 7 + i % 5]) for i in range(5001))
        with pytest.raises(OracleCapError):
            opt_fractional(Instance(2, 12, arrivals))


class TestDisjointLowerBound:
    def test_counts_disjoint_edges(self):
        assert disjoint_lower_bound([edge(0, [0, 1]), edge(1, [2, 3])]) == 2.0

    def test_weighted_sum(self):
        es = [edge(0, [0], 2.5), edge(1, [1], 1.5)]
        assert disjoint_lower_bound(es, weighted=True) == 4.0

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            disjoint_lower_bound([edge(0, [0, 1]), edge(1, [1, 2])])


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_greedy_within_factor_k_of_optimum(seed):
    inst = gen_random(3, 10, 8, seed=seed)
    alg = run_online(inst, "greedy").objective
    opt, _ = opt_integral(inst)
    assert alg >= opt / inst.rank_k - 1e-9
