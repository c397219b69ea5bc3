"""Tests for evidence probabilities, optimal sizes, and plan assembly."""

import math

import numpy as np
import pytest

from causal_ssd.design import EdgeHypothesisPrior, InterventionSequence
from causal_ssd.graph import Dag, PartiallyDirectedGraph, UndirectedGraph
from causal_ssd.harness import DatasetMatrix, LinearSemSpec, generate_sem_data
from causal_ssd.numerics import RandomStream
from causal_ssd.predictive import InterventionDensity, build_design_posterior
from causal_ssd.ssd import (
    DceThresholds,
    EdgeSsdResult,
    dce_probabilities,
    h0_band_probabilities,
    mark_best_sequence,
    optimal_n_edge,
    optimal_n_node,
    plan_cpdag,
    plan_sequence,
)

from helpers import CHAIN5

F_U = InterventionDensity()
HALF = EdgeHypothesisPrior(u="u", v="v", p_h0=0.5, p_h1=0.5)


def two_node_posterior(seed=3, n_rows=50, beta=0.5):
    rng = np.random.default_rng(seed)
    zu = rng.standard_normal(n_rows)
    zv = beta * zu + rng.standard_normal(n_rows)
    return build_design_posterior(np.column_stack([zu, zv]), 1.0, labels=("u", "v"))


def fig1_dataset(seed=0, n_rows=80):
    dag = Dag(
        "12345",
        [("1", "2"), ("1", "3"), ("2", "3"), ("2", "4"), ("2", "5"), ("4", "5")],
    )
    sem = LinearSemSpec(
        dag=dag,
        coefficients={e: 0.6 for e in dag.edges()},
        noise_sd={n: 1.0 for n in dag.nodes},
    )
    return generate_sem_data(sem, n_rows, RandomStream(seed))


class TestDceThresholds:
    def test_defaults(self):
        th = DceThresholds()
        assert (th.k0, th.k1, th.zeta) == (6.0, 6.0, 0.8)

    @pytest.mark.parametrize("bad", [{"k0": 1.0}, {"k1": 0.5}, {"zeta": 0.0}, {"zeta": 1.0}])
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            DceThresholds(**bad)


class TestDceProbabilities:
    def test_h0_triple_partitions_exactly(self):
        th = DceThresholds(k0=6.0, k1=6.0, zeta=0.8)
        for n in (2, 30, 57, 400):
            p_dc, p_inc, p_mis = h0_band_probabilities(th, n)
            # exact up to one ulp of re-association
            assert p_dc + p_inc + p_mis == pytest.approx(1.0, abs=1e-15)
            assert min(p_dc, p_inc, p_mis) >= 0.0

    def test_degenerate_prior_reduces_to_h0(self):
        prior = EdgeHypothesisPrior(u="u", v="v", p_h0=1.0, p_h1=0.0)
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.8)
        dce = dce_probabilities(
            "u", "v", th, 50, prior, two_node_posterior(), F_U, draws=500, stream=RandomStream(1)
        )
        assert dce.overall_dc == dce.p0_dc

    def test_band_above_ceiling_is_zero(self):
        th = DceThresholds(k0=10.0, k1=10.0, zeta=0.8)
        dce = dce_probabilities(
            "u", "v", th, 100, HALF, two_node_posterior(), F_U, draws=500, stream=RandomStream(2)
        )
        assert dce.p0_dc == 0.0

    def test_mixture_bounds_and_h1_sums(self):
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.8)
        dce = dce_probabilities(
            "u", "v", th, 40, HALF, two_node_posterior(), F_U, draws=4000, stream=RandomStream(3)
        )
        assert dce.p1_dc + dce.p1_inc + dce.p1_mis == pytest.approx(1.0, abs=1e-12)
        lo, hi = sorted((dce.p0_dc, dce.p1_dc))
        assert lo <= dce.overall_dc <= hi
        assert dce.mc_se["overall_dc"] == pytest.approx(
            0.5 * math.sqrt(dce.p1_dc * (1 - dce.p1_dc) / 4000)
        )

    def test_two_node_crossing_overall(self):
        # representative regenerated data: the k=3 overall probability is
        # high around n = 50 and comfortably above 0.8 by n = 100
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.8)
        post = two_node_posterior()
        at50 = dce_probabilities("u", "v", th, 50, HALF, post, F_U, 4000, RandomStream(4))
        at100 = dce_probabilities("u", "v", th, 100, HALF, post, F_U, 4000, RandomStream(5))
        assert at50.overall_dc >= 0.70
        assert at100.overall_dc >= 0.80


class TestOptimalNEdge:
    def test_low_target_crosses_immediately(self):
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.05)
        res = optimal_n_edge(
            "u", "v", th, HALF, two_node_posterior(), F_U,
            n_max=50, draws=1000, stream=RandomStream(6),
        )
        assert res.n_star == 2
        assert res.dce_at_n_star.overall_dc >= 0.05

    def test_two_node_study_k3(self):
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.8)
        res = optimal_n_edge(
            "u", "v", th, HALF, two_node_posterior(), F_U,
            n_max=200, draws=2000, stream=RandomStream(7),
        )
        assert res.achieved
        assert 25 <= res.n_star <= 95

    def test_matches_first_crossing_of_reproducible_curve(self):
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.6)
        post = two_node_posterior()
        stream = RandomStream(8)
        res = optimal_n_edge("u", "v", th, HALF, post, F_U, n_max=60, draws=800, stream=stream)
        crossing = None
        for n in range(2, 61):
            dce = dce_probabilities("u", "v", th, n, HALF, post, F_U, 800, stream.child(n))
            if dce.overall_dc >= th.zeta:
                crossing = n
                break
        assert res.n_star == crossing

    def test_not_achievable_marker(self):
        th = DceThresholds(k0=10.0, k1=10.0, zeta=0.99)
        res = optimal_n_edge(
            "u", "v", th, HALF, two_node_posterior(), F_U,
            n_max=30, draws=500, stream=RandomStream(9),
        )
        assert res.n_star is None
        assert res.dce_at_n_star is None
        assert not res.achieved

    def test_monotone_in_zeta(self):
        post = two_node_posterior()
        stream = RandomStream(10)
        sizes = {}
        for zeta in (0.5, 0.7, 0.8):
            th = DceThresholds(k0=3.0, k1=3.0, zeta=zeta)
            sizes[zeta] = optimal_n_edge(
                "u", "v", th, HALF, post, F_U, n_max=300, draws=2000, stream=stream
            ).n_star
        assert sizes[0.5] <= sizes[0.7] <= sizes[0.8]


class TestOptimalNNode:
    def _result(self, n_star):
        return EdgeSsdResult(edge=("u", "v"), p_h0=0.5, n_star=n_star, dce_at_n_star=None, n_max=100)

    def test_single_neighbor(self):
        assert optimal_n_node("u", [self._result(17)]) == 17

    def test_max_over_neighbors(self):
        assert optimal_n_node("u", [self._result(28), self._result(88)]) == 88

    def test_not_achievable_propagates(self):
        assert optimal_n_node("u", [self._result(28), self._result(None)]) is None

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            optimal_n_node("u", [])


class TestPlanSequence:
    def test_two_node_single_target(self):
        g = UndirectedGraph("uv", [("u", "v")])
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.6)
        plan = plan_sequence(
            g, InterventionSequence(("u",)), th, two_node_posterior(), F_U,
            n_max=150, draws=1500, stream=RandomStream(11),
        )
        assert plan.sequence.targets == ("u",)
        (edge_result,) = plan.edge_results["u"]
        assert edge_result.edge == ("u", "v")
        assert plan.node_sizes["u"] == edge_result.n_star
        assert plan.total_n == edge_result.n_star
        assert plan.achieved

    def test_empty_sequence_on_edgeless_component(self):
        g = UndirectedGraph("ab", [])
        th = DceThresholds()
        post = two_node_posterior()
        plan = plan_sequence(g, InterventionSequence(()), th, post, F_U, stream=RandomStream(12))
        assert plan.total_n == 0
        assert plan.node_sizes == {}
        assert plan.achieved

    def test_node_size_is_max_and_total_is_sum(self):
        data = fig1_dataset()
        tri = UndirectedGraph("123", [("1", "2"), ("2", "3"), ("1", "3")])
        post = build_design_posterior(data.restrict(("1", "2", "3")).values, 2.0, ("1", "2", "3"))
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.6)
        plan = plan_sequence(
            g := tri,
            InterventionSequence(("1", "2")),
            th,
            post,
            F_U,
            n_max=250,
            draws=1200,
            stream=RandomStream(13),
        )
        for u in ("1", "2"):
            results = plan.edge_results[u]
            assert [r.edge[1] for r in results] == list(g.neighbors(u))
            if all(r.achieved for r in results):
                assert plan.node_sizes[u] == max(r.n_star for r in results)
        if plan.achieved:
            assert plan.total_n == sum(plan.node_sizes.values())

    def test_determinism(self):
        g = UndirectedGraph("uv", [("u", "v")])
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.6)
        kwargs = dict(n_max=100, draws=800, stream=RandomStream(14))
        a = plan_sequence(g, InterventionSequence(("u",)), th, two_node_posterior(), F_U, **kwargs)
        b = plan_sequence(g, InterventionSequence(("u",)), th, two_node_posterior(), F_U, **kwargs)
        assert a.total_n == b.total_n
        assert a.node_sizes == b.node_sizes


class TestMarkBestSequence:
    def _plan(self, targets, total):
        return type(
            "P",
            (),
            {
                "achieved": total is not None,
                "total_n": total,
                "sequence": InterventionSequence(targets),
                "bos": False,
            },
        )()

    def test_min_total_flagged(self):
        import causal_ssd.ssd as ssd_mod

        plans = [
            ssd_mod.InterventionPlan(("1",), InterventionSequence(("1",)), {}, {}, 116),
            ssd_mod.InterventionPlan(("1",), InterventionSequence(("2",)), {}, {}, 90),
        ]
        best = mark_best_sequence(plans)
        assert best is plans[1]
        assert plans[1].bos and not plans[0].bos

    def test_all_unachieved_returns_none(self):
        import causal_ssd.ssd as ssd_mod

        plans = [ssd_mod.InterventionPlan(("1",), InterventionSequence(("1",)), {}, {}, None)]
        assert mark_best_sequence(plans) is None


class TestPlanCpdag:
    def test_fig1_two_components_planned(self):
        data = fig1_dataset()
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.6)
        results = plan_cpdag(
            CHAIN5, data, th, f_u=F_U, stream=RandomStream(15), n_max=300, draws=1200
        )
        assert [r.component for r in results] == [("1", "2", "3"), ("4", "5")]
        triangle = results[0]
        assert triangle.error is None
        # a triangle needs two targets; both optimal sequences are planned
        assert [p.sequence.targets for p in triangle.plans] == [
            ("1", "2"), ("1", "3"), ("2", "3"),
        ]
        pair = results[1]
        assert [p.sequence.targets for p in pair.plans] == [("4",), ("5",)]
        for r in results:
            flagged = [p for p in r.plans if p.bos]
            if r.feasible:
                assert len(flagged) == 1
                best = flagged[0]
                assert all(
                    best.total_n <= p.total_n for p in r.plans if p.achieved
                )

    def test_all_singletons_empty(self):
        cp = PartiallyDirectedGraph("abc", directed=[("a", "b"), ("b", "c")])
        data = DatasetMatrix(
            labels=("a", "b", "c"), values=np.random.default_rng(16).standard_normal((10, 3))
        )
        assert plan_cpdag(cp, data, DceThresholds(), stream=RandomStream(17)) == []

    def test_component_errors_isolated(self):
        # data lacks the columns of one component; the other is still planned
        cp = PartiallyDirectedGraph(
            "abcd", undirected=[("a", "b"), ("c", "d")]
        )
        rng = np.random.default_rng(18)
        data = DatasetMatrix(labels=("a", "b"), values=rng.standard_normal((40, 2)))
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.5)
        results = plan_cpdag(cp, data, th, stream=RandomStream(19), n_max=150, draws=800)
        by_comp = {r.component: r for r in results}
        assert by_comp[("c", "d")].error is not None
        assert "missing" in by_comp[("c", "d")].error or "columns" in by_comp[("c", "d")].error
        assert by_comp[("a", "b")].error is None
        assert by_comp[("a", "b")].plans

    def test_capacity_error_reported_per_component(self):
        import itertools

        big = [f"n{i}" for i in range(13)]
        cp = PartiallyDirectedGraph(
            big + ["x", "y"],
            undirected=list(itertools.combinations(big, 2)) + [("x", "y")],
        )
        rng = np.random.default_rng(20)
        data = DatasetMatrix(labels=tuple(big + ["x", "y"]), values=rng.standard_normal((40, 15)))
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.5)
        results = plan_cpdag(cp, data, th, stream=RandomStream(21), n_max=100, draws=500)
        by_size = {len(r.component): r for r in results}
        assert by_size[13].error is not None
        assert by_size[2].error is None

    def test_workers_do_not_change_results(self):
        data = fig1_dataset()
        th = DceThresholds(k0=3.0, k1=3.0, zeta=0.6)
        kwargs = dict(f_u=F_U, n_max=200, draws=600)
        serial = plan_cpdag(CHAIN5, data, th, stream=RandomStream(22), workers=1, **kwargs)
        parallel = plan_cpdag(CHAIN5, data, th, stream=RandomStream(22), workers=2, **kwargs)
        assert [r.to_dict() for r in serial] == [r.to_dict() for r in parallel]
