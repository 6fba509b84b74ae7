import math

import numpy as np
import pytest

from conftest import SMALL5_SIMRANK
from sling import Graph
from sling.oracle import (ResourceGuardError, decomposition_matrix, decomposition_remainder,
                          eval_decomposition, exact_correction, exact_hitting_probabilities,
                          power_iterations_needed, power_method)


@pytest.mark.parametrize("c,eps,t", [(0.6, 0.01, 10), (0.6, 0.4, 3), (0.8, 0.001, 38)])
def test_iterations_needed(c, eps, t):
    assert power_iterations_needed(c, eps) == t
    # the returned count is the smallest one meeting c^(t+1)/(1-c) <= eps
    assert c ** (t + 1) / (1 - c) <= eps * (1 + 1e-9)
    if t > 0:
        assert c ** t / (1 - c) > eps


def test_power_method_matches_reference(small5):
    s = power_method(small5, 0.6, 60)
    np.testing.assert_allclose(s.scores, SMALL5_SIMRANK, atol=1e-14)


def test_power_method_fixtures(cycle4, two_cycle, shared_parent):
    np.testing.assert_array_equal(power_method(cycle4, 0.6, 50).scores, np.eye(4))
    np.testing.assert_array_equal(power_method(two_cycle, 0.6, 50).scores, np.eye(2))
    s = power_method(shared_parent, 0.6, 50).scores
    assert s[1, 2] == pytest.approx(0.6, abs=1e-15)
    assert s[0, 1] == 0.0


def test_power_method_history(small5):
    s, iterates = power_method(small5, 0.6, 5, history=True)
    assert len(iterates) == 6
    gaps = [np.abs(it - SMALL5_SIMRANK).max() for it in iterates]
    # error after k rounds is at most c^(k+1)
    for k, gap in enumerate(gaps):
        assert gap <= 0.6 ** (k + 1) + 1e-15


def test_node_cap():
    g = Graph(30, [0], [1])
    with pytest.raises(ResourceGuardError):
        power_method(g, 0.6, 5, cap=10)


def test_exact_hp_first_steps(small5):
    h = exact_hitting_probabilities(small5, 0.6, 3)
    sq = math.sqrt(0.6)
    assert h.get(0, 2, 2) == 1.0
    # I(2) = {0, 1}
    assert h.get(1, 2, 0) == pytest.approx(sq / 2)
    assert h.get(1, 2, 3) == 0.0
    # two steps: via 0 (I = {2, 3}) or 1 (I = {0, 3})
    assert h.get(2, 2, 3) == pytest.approx(sq / 2 * sq / 2 * 2)


def test_exact_correction_frozen(small5, cycle4, shared_parent):
    d = exact_correction(small5, 0.6, power_method(small5, 0.6, 60))
    # node 0 has in-neighbours {2, 3}
    assert d[0] == pytest.approx(1 - 0.3 - 0.15 * 2 * SMALL5_SIMRANK[2, 3], abs=1e-14)
    np.testing.assert_allclose(exact_correction(cycle4, 0.6, power_method(cycle4, 0.6, 50)), 0.4)
    d3 = exact_correction(shared_parent, 0.6, power_method(shared_parent, 0.6, 50))
    np.testing.assert_allclose(d3, [1.0, 0.4, 0.4])


def test_decomposition_identity(small5):
    c, L = 0.6, 40
    s = power_method(small5, c, 80)
    d = exact_correction(small5, c, s)
    h = exact_hitting_probabilities(small5, c, L)
    assert decomposition_remainder(c, L) < 1e-8
    full = decomposition_matrix(h, d)
    np.testing.assert_allclose(full, SMALL5_SIMRANK, atol=1e-8)
    val, rem = eval_decomposition(h, d, 1, 4)
    assert abs(val - SMALL5_SIMRANK[1, 4]) <= rem + 1e-12


def test_monotone_convergence_and_stopping_rule(small5):
    t = power_iterations_needed(0.6, 0.01)
    _, iterates = power_method(small5, 0.6, t, history=True)
    for a, b in zip(iterates, iterates[1:]):
        assert (a <= b + 1e-15).all() and (b <= 1 + 1e-15).all()
    assert np.abs(iterates[-1] - iterates[-2]).max() < 0.01


def test_hp_examples(cycle4):
    g = Graph.from_edges(2, [(1, 0)])
    h = exact_hitting_probabilities(g, 0.6, 2)
    assert h.get(1, 0, 1) == pytest.approx(0.774597, abs=1e-6)
    assert h.get(0, 0, 0) == 1.0 and h.get(0, 0, 1) == 0.0
    hc = exact_hitting_probabilities(cycle4, 0.6, 4)
    assert hc.get(4, 2, 2) == pytest.approx(0.36, abs=1e-15)


def test_hp_mass(small5):
    # every node of small5 has in-neighbours, so mass per step is exactly sqrt(c)^l
    h = exact_hitting_probabilities(small5, 0.6, 6)
    for ell in range(7):
        np.testing.assert_allclose(h.steps[ell].sum(axis=1), math.sqrt(0.6) ** ell)
    g = Graph.from_edges(3, [(0, 1)])
    h = exact_hitting_probabilities(g, 0.6, 3)
    for ell in range(4):
        assert (h.steps[ell].sum(axis=1) <= math.sqrt(0.6) ** ell + 1e-15).all()


def test_decomposition_examples(shared_parent):
    iso = Graph(2, [], [])
    s = power_method(iso, 0.6, 10)
    h = exact_hitting_probabilities(iso, 0.6, 5)
    assert eval_decomposition(h, exact_correction(iso, 0.6, s), 0, 0)[0] == 1.0
    s = power_method(shared_parent, 0.6, 10)
    h = exact_hitting_probabilities(shared_parent, 0.6, 10)
    d = exact_correction(shared_parent, 0.6, s)
    assert eval_decomposition(h, d, 1, 2)[0] == pytest.approx(0.6, abs=1e-15)


def test_decomposition_random_eight_nodes():
    rng = np.random.default_rng(12)
    g = Graph(8, rng.integers(0, 8, 20), rng.integers(0, 8, 20))
    s = power_method(g, 0.6, 60)
    d = exact_correction(g, 0.6, s)
    h = exact_hitting_probabilities(g, 0.6, 15)
    for i in range(8):
        for j in range(8):
            val, rem = eval_decomposition(h, d, i, j)
            assert abs(val - s.scores[i, j]) <= rem + 1e-12
