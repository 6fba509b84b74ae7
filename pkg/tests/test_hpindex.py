import math

import numpy as np
import pytest

from conftest import random_graph
from sling import Graph
from sling.hpindex import (apply_space_reduction, build_all_hp_sets, build_two_hop,
                           hp_set_size_bound, mark_top_hps, marking_budget,
                           materialize_query_hp_set, max_hp_step)
from sling.oracle import exact_hitting_probabilities

SQ = math.sqrt(0.6)


def test_two_hop_frozen(small5):
    steps, targets, values = build_two_hop(small5, 0.6, 2)
    # I(2) = {0, 1}; I(0) = {2, 3}; I(1) = {0, 3}
    assert list(zip(steps.tolist(), targets.tolist())) == [(0, 2), (1, 0), (1, 1), (2, 0), (2, 2), (2, 3)]
    np.testing.assert_allclose(values, [1.0, SQ / 2, SQ / 2, 0.15, 0.15, 0.3], rtol=1e-15)


def test_two_hop_matches_exact(small5):
    h = exact_hitting_probabilities(small5, 0.6, 2)
    for v in range(5):
        for s, t, val in zip(*build_two_hop(small5, 0.6, v)):
            assert val == pytest.approx(h.get(int(s), v, int(t)), rel=1e-14)


def test_single_entry_sets_without_edges():
    g = Graph(3, [], [])
    sets = build_all_hp_sets(g, 0.6, 0.01)
    for v, hs in enumerate(sets):
        assert hs.entries() == [(0, v, 1.0)]


def test_cycle_sets_are_single_paths(cycle4):
    sets = build_all_hp_sets(cycle4, 0.6, 0.01)
    # walk from v is at v - l (mod 4) at step l with probability sqrt(c)^l
    hs = sets[0]
    for s, t, val in hs.entries():
        assert t == (-s) % 4
        assert val == pytest.approx(SQ ** s)
    assert len(hs) == max_hp_step(0.6, 0.01)


@pytest.mark.parametrize("seed", range(5))
def test_stored_entries_bounded_by_exact(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 40, 160)
    theta = 0.005
    sets = build_all_hp_sets(g, 0.6, theta)
    h = exact_hitting_probabilities(g, 0.6, max_hp_step(0.6, theta) + 1)
    for hs in sets:
        for s, t, val in hs.entries():
            exact = h.get(s, hs.owner, t)
            assert theta < val <= exact + 1e-15
            assert exact - val <= (1 - SQ ** s) / (1 - SQ) * theta + 1e-12
        assert len(hs) <= hp_set_size_bound(0.6, theta)


def test_workers_do_not_change_sets():
    rng = np.random.default_rng(3)
    g = random_graph(rng, 300, 1500)
    a = build_all_hp_sets(g, 0.6, 0.01, workers=1)
    b = build_all_hp_sets(g, 0.6, 0.01, workers=2)
    assert a == b


def test_space_reduction(small5):
    sets = build_all_hp_sets(small5, 0.6, 0.01)
    red = apply_space_reduction(sets, small5, gamma=10, theta=0.01)
    for hs in red:
        assert hs.reduced
        assert not np.isin(hs.steps, (1, 2)).any()
    # a large theta makes gamma/theta smaller than every two-hop size
    kept = apply_space_reduction(sets, small5, gamma=1e-3, theta=0.5)
    assert not any(hs.reduced for hs in kept)


def test_reduced_sets_restore_exact_two_hop(small5):
    sets = build_all_hp_sets(small5, 0.6, 0.01)
    red = apply_space_reduction(sets, small5, gamma=10, theta=0.01)
    for full, r in zip(sets, red):
        steps, targets, values = materialize_query_hp_set(r, small5, 0.6, expand=False)
        assert np.array_equal(steps[steps > 2], full.steps[full.steps > 2])
        s2, t2, v2 = build_two_hop(small5, 0.6, r.owner)
        sel = (steps >= 1) & (steps <= 2)
        assert np.array_equal(targets[sel], t2[s2 > 0])
        np.testing.assert_allclose(values[sel], v2[s2 > 0])


def test_marking_budget():
    assert marking_budget(0.025) == (7, 6)
    assert marking_budget(0.25) == (2, 2)
    assert marking_budget(0.01) == (10, 10)


def test_marks_pick_largest_eligible(small5):
    sets = build_all_hp_sets(small5, 0.6, 0.001)
    marked = mark_top_hps(sets, small5, 0.25)
    budget, max_deg = marking_budget(0.25)
    for hs in marked:
        assert hs.marked.size <= budget
        assert (small5.in_degree[hs.targets[hs.marked]] <= max_deg).all()
        rest = np.setdiff1d(np.arange(len(hs)), hs.marked)
        if rest.size:
            assert hs.values[rest].max() <= hs.values[hs.marked].min()


def test_expansion_fills_pruned_entries():
    # 0 <- 1 <- {2, 3}; theta prunes the step-2 values c/2 = 0.3
    g = Graph.from_edges(4, [(1, 0), (2, 1), (3, 1)])
    sets = mark_top_hps(build_all_hp_sets(g, 0.6, 0.35), g, 0.25)
    hs = sets[0]
    assert hs.entries() == [(0, 0, 1.0), (1, 1, pytest.approx(SQ))]
    assert hs.marked.tolist() == [0, 1]
    steps, targets, values = materialize_query_hp_set(hs, g, 0.6, expand=True)
    assert steps.tolist() == [0, 1, 2, 2]
    assert targets.tolist() == [0, 1, 2, 3]
    np.testing.assert_allclose(values[2:], [0.3, 0.3])


def test_expansion_keeps_existing_keys(cycle4):
    sets = mark_top_hps(build_all_hp_sets(cycle4, 0.6, 0.2), cycle4, 0.25)
    hs = sets[0]
    # marks are the two largest entries and their expansions already exist
    steps, targets, values = materialize_query_hp_set(hs, cycle4, 0.6, expand=True)
    assert list(zip(steps.tolist(), targets.tolist(), values.tolist())) == hs.entries()


def test_single_edge_sets():
    g = Graph.from_edges(2, [(1, 0)])
    hs = build_all_hp_sets(g, 0.6, 0.01)[0]
    assert hs.entries() == [(0, 0, 1.0), (1, 1, pytest.approx(0.774597, abs=1e-6))]
    steps, targets, values = build_two_hop(g, 0.6, 0)
    assert 2 not in steps.tolist()
    red = apply_space_reduction([hs], g, 10, 0.01)[0]
    assert red.reduced and red.entries() == [(0, 0, 1.0)]
    s, t, v = materialize_query_hp_set(red, g, 0.6)
    assert list(zip(s.tolist(), t.tolist())) == [(0, 0), (1, 1)]
    assert v[1] == SQ


def test_cycle_cutoff(cycle4):
    hs = build_all_hp_sets(cycle4, 0.6, 0.001)[0]
    assert hs.steps.max() == 27
    assert max_hp_step(0.6, 0.001) == 28


def test_diamond_two_hop():
    g = Graph.from_edges(4, [(3, 1), (3, 2), (1, 0), (2, 0)])
    steps, targets, values = build_two_hop(g, 0.6, 0)
    sel = (steps == 2) & (targets == 3)
    assert values[sel][0] == pytest.approx(0.6, abs=1e-15)


def test_reduction_thresholds():
    # hub: 200 in-neighbours, each with 100 private in-neighbours -> eta = 20200
    edges, nxt = [], 201
    for x in range(1, 201):
        edges.append((x, 0))
        for _ in range(100):
            edges.append((nxt, x))
            nxt += 1
    g = Graph.from_edges(nxt + 1, edges)
    assert g.two_hop_sizes[0] == 20200 > 10 / 0.000725
    sets = build_all_hp_sets(g, 0.6, 0.000725)
    red = apply_space_reduction(sets, g, 10, 0.000725)
    assert not red[0].reduced and red[0] == sets[0]
    # the isolated last node keeps only its step-0 entry
    assert red[nxt].reduced and red[nxt].entries() == [(0, nxt, 1.0)]


def test_cycle_all_reduced(cycle4):
    red = apply_space_reduction(build_all_hp_sets(cycle4, 0.6, 0.001), cycle4, 10, 0.001)
    assert all(h.reduced for h in red)


def test_size_bound_value():
    assert hp_set_size_bound(0.6, 0.000725) <= 6121


def test_few_eligible_all_marked(small5):
    sets = mark_top_hps(build_all_hp_sets(small5, 0.6, 0.3), small5, 0.025)
    for hs in sets:
        eligible = np.flatnonzero(small5.in_degree[hs.targets] <= 6)
        if eligible.size <= 7:
            assert hs.marked.tolist() == eligible.tolist()


def test_tie_rule_is_deterministic():
    # ten sources feed node 0: all step-1 values tie at sqrt(c)/10
    g = Graph.from_edges(11, [(k, 0) for k in range(1, 11)])
    hs = mark_top_hps(build_all_hp_sets(g, 0.6, 0.01), g, 0.25)[0]
    # node 0 has 10 in-neighbours and is ineligible; budget 2 goes to the smallest tied targets
    assert hs.targets[hs.marked].tolist() == [1, 2]


def test_unmarked_unreduced_unchanged(small5):
    hs = build_all_hp_sets(small5, 0.6, 0.01)[3]
    s, t, v = materialize_query_hp_set(hs, small5, 0.6)
    assert list(zip(s.tolist(), t.tolist(), v.tolist())) == hs.entries()


@pytest.mark.parametrize("seed", range(6))
def test_materialized_values_never_exceed_exact(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(3, 21))
    g = random_graph(rng, n, int(rng.integers(n, 4 * n)))
    theta = 0.02
    sets = build_all_hp_sets(g, 0.6, theta)
    sets = mark_top_hps(apply_space_reduction(sets, g, 10, theta), g, 0.05)
    h = exact_hitting_probabilities(g, 0.6, max_hp_step(0.6, theta) + 2)
    for hs in sets:
        s, t, v = materialize_query_hp_set(hs, g, 0.6, expand=True)
        keys = s * n + t
        assert np.unique(keys).size == keys.size
        for ss, tt, vv in zip(s.tolist(), t.tolist(), v.tolist()):
            assert vv <= h.get(ss, hs.owner, tt) + 1e-12
        if hs.reduced:
            for ss, tt, vv in zip(s.tolist(), t.tolist(), v.tolist()):
                if ss in (1, 2):
                    assert vv == pytest.approx(h.get(ss, hs.owner, tt), rel=1e-12)
