import numpy as np
import pytest

from mfgnet import (Graph, NotASimplex, default_weights, make_graph,
                    make_rate_matrix, make_simplex, read_graph,
                    strongly_connected, walpole_graph)
from mfgnet.core import RateMatrix


def test_uniform_simplex():
    s = make_simplex(1 / 3, 1 / 3, 1 / 3)
    assert s.x1 == s.x2 == s.x3
    assert abs(s.x1 + s.x2 + s.x3 - 1.0) < 1e-12


def test_point_mass_infected_node_init():
    s = make_simplex(0.0, 1.0, 0.0)
    assert (s.x1, s.x2, s.x3) == (0.0, 1.0, 0.0)


def test_bad_sum_rejected():
    with pytest.raises(NotASimplex):
        make_simplex(0.5, 0.6, 0.2)


def test_negative_component_rejected():
    with pytest.raises(NotASimplex):
        make_simplex(-0.1, 0.6, 0.5)


def test_tiny_negative_clamped():
    s = make_simplex(-1e-13, 0.5, 0.5 + 1e-13)
    assert s.x1 == 0.0
    assert abs(s.x1 + s.x2 + s.x3 - 1.0) < 1e-12


def test_make_simplex_idempotent():
    rng = np.random.default_rng(42)
    for _ in range(200):
        raw = rng.dirichlet([1.0, 1.0, 1.0])
        once = make_simplex(*raw)
        twice = make_simplex(once.x1, once.x2, once.x3)
        assert (once.x1, once.x2, once.x3) == (twice.x1, twice.x2, twice.x3)


def test_rate_matrix_forces_cross_arcs_to_zero():
    b = np.full((3, 3), 0.7)
    rm = RateMatrix(b)
    assert rm.rate(1, 2) == 0.0
    assert rm.rate(2, 1) == 0.0
    assert rm.rate(1, 3) == 0.7
    assert rm.rate(3, 1) == 0.7


def test_rate_matrix_rejects_negative_rates():
    b = np.zeros((3, 3))
    b[2, 0] = -0.5
    with pytest.raises(ValueError):
        RateMatrix(b)


def test_make_rate_matrix_layout():
    rm = make_rate_matrix(beta31=2.0, beta32=1.0, beta13=0.3, beta23=0.4)
    assert rm.rate(3, 1) == 2.0
    assert rm.rate(3, 2) == 1.0
    assert rm.rate(1, 3) == 0.3
    assert rm.rate(2, 3) == 0.4


def test_default_weights_validated():
    w = default_weights()
    assert np.all(w.r > 0)
    assert np.all(w.gamma > 0)
    assert w.r[0, 1] >= 1e6 and w.r[1, 0] >= 1e6
    assert w.gamma[0, 1] >= 1e6 and w.gamma[1, 0] >= 1e6
    assert w.congestion(3, 0.5) == pytest.approx(1.0)  # default q3 = 2


def test_weights_reject_nonpositive_entries():
    w = default_weights()
    bad = np.array(w.r)
    bad[2, 0] = 0.0
    from mfgnet.core import CostWeights
    with pytest.raises(ValueError):
        CostWeights(r=bad, gamma=np.array(w.gamma), f=w.f)


def test_two_node_graphs():
    both = make_graph(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert strongly_connected(both)
    one_way = Graph(n=2, adjacency=np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert not strongly_connected(one_way)
    assert not one_way.is_strongly_connected


def test_graph_rejects_self_loops_and_negative_weights():
    with pytest.raises(ValueError):
        make_graph(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        make_graph(np.array([[0.0, -1.0], [0.0, 0.0]]))


def _reach_oracle(a: np.ndarray) -> bool:
    """Breadth-first reachability from every node, queue-based."""
    n = a.shape[0]
    for start in range(n):
        seen = {start}
        queue = [start]
        while queue:
            u = queue.pop(0)
            for v in range(n):
                if a[u, v] > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        if len(seen) != n:
            return False
    return True


def test_walpole_graph_strongly_connected_vs_bfs_oracle():
    g = walpole_graph()
    assert g.n == 11
    assert strongly_connected(g)
    assert _reach_oracle(g.adjacency)


def test_walpole_graph_structure():
    g = walpole_graph()
    assert np.array_equal(g.adjacency, g.adjacency.T)   # undirected
    deg = (g.adjacency > 0).sum(axis=1)
    assert deg[6] == deg.max()                          # node 7 best connected
    assert (deg == deg.max()).sum() == 1
    assert deg[0] == 1                                  # node 1 single link
    neighbours_11 = set(np.nonzero(g.adjacency[10] > 0)[0] + 1)
    assert neighbours_11 == {4, 5, 7}


def test_read_graph_parses_comments_and_mirrors(tmp_path):
    p = tmp_path / "g.edges"
    p.write_text("# a comment\n1 2 0.5\n\n2 3 1.5\n", encoding="utf-8")
    g = read_graph(p)
    assert g.n == 3
    assert g.adjacency[0, 1] == 0.5 and g.adjacency[1, 0] == 0.5
    assert g.adjacency[1, 2] == 1.5 and g.adjacency[2, 1] == 1.5


def test_read_graph_rejects_malformed_lines(tmp_path):
    p = tmp_path / "bad.edges"
    p.write_text("1 2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_graph(p)
