import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contextuality.csw import (EXACT_GUARD, Event, WeightedExclusivityGraph, csw_report, csw_value,
                               cycle_graph, exclusivity_graph, graph_from_dict, independence_number,
                               load_graph, lovasz_number, two_point_value)
from contextuality.quantum import model_from_quantum, preset_model
from contextuality.scenario import ModelFormatError

from conftest import FIXTURES


def brute_alpha(graph):
    best = 0.0
    for r in range(graph.n + 1):
        for S in itertools.combinations(range(graph.n), r):
            if all((i, j) not in graph.edges for i, j in itertools.combinations(S, 2)):
                best = max(best, graph.weights[list(S)].sum() if S else 0.0)
    return best


@st.composite
def graphs(draw, max_n=10):
    n = draw(st.integers(0, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    w = draw(st.lists(st.floats(0.1, 5.0), min_size=n, max_size=n))
    return WeightedExclusivityGraph(tuple(range(n)), np.array(w), frozenset(edges))


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_alpha_matches_brute_force(graph):
    value, ind = independence_number(graph)
    assert value == pytest.approx(brute_alpha(graph), abs=1e-9)
    assert all((i, j) not in graph.edges for i, j in itertools.combinations(ind, 2))
    assert graph.weights[ind].sum() == pytest.approx(value) if ind else value == 0


def test_alpha_guard_and_large_instance():
    rng = np.random.default_rng(3)
    G = np.triu(rng.uniform(size=(EXACT_GUARD, EXACT_GUARD)) < 0.3, 1)
    graph = WeightedExclusivityGraph.from_adjacency(G + G.T)
    value, ind = independence_number(graph)
    assert value == len(ind) > 0
    with pytest.raises(ValueError):
        independence_number(cycle_graph(EXACT_GUARD + 1))


def test_weighted_c5():
    w = np.array([3.0, 1, 1, 1, 1])
    assert independence_number(cycle_graph(5, w))[0] == 4


def test_closed_forms_match_sdp():
    for graph in (cycle_graph(5), cycle_graph(7), cycle_graph(8),
                  WeightedExclusivityGraph.from_adjacency(np.zeros((3, 3)), [1, 2, 3]),
                  WeightedExclusivityGraph.from_adjacency(np.ones((3, 3)) - np.eye(3), [1, 2, 3])):
        assert lovasz_number(graph) == pytest.approx(lovasz_number(graph, closed_form=False), abs=1e-5)


def test_graph_validation():
    with pytest.raises(ValueError):
        WeightedExclusivityGraph((0, 1), np.ones(2), frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        WeightedExclusivityGraph((0, 1), np.ones(2), frozenset({(0, 2)}))
    with pytest.raises(ValueError):
        WeightedExclusivityGraph((0, 1), np.array([1.0, 0.0]), frozenset())


def kcbs():
    m = model_from_quantum(preset_model("kcbs"))
    return m, load_graph(FIXTURES / "kcbs_pentagon_graph.json", m)


def test_kcbs_report():
    m, g = kcbs()
    rep = csw_report(m, g)
    assert rep.alpha == 2
    assert rep.theta == pytest.approx(np.sqrt(5), abs=1e-4)
    assert rep.value == pytest.approx(np.sqrt(5), abs=1e-9)
    assert rep.exceeds_classical and not rep.exceeds_quantum


def test_exclusivity_graph_from_events():
    m, g = kcbs()
    events = [(i, ("1", "0")) for i in range(5)] + [(0, ("0", "1"))]
    built = exclusivity_graph(m, events)
    # (A1=1,A2=0) and (A1=0,A2=1) disagree on A1 and A2
    assert (0, 5) in built.edges
    # consecutive (Ai=1, Ai+1=0) events disagree on Ai+1
    assert all((i, i + 1) in built.edges for i in range(4))


def test_two_point_equals_csw_for_exclusive_events():
    m, g = kcbs()
    assert two_point_value(m, g) == pytest.approx(csw_value(m, g), abs=1e-12)


def test_two_point_subtracts_joint_terms(fixture_model):
    m = fixture_model("chsh.json")
    ev = Event(0, ("0", "0"))
    # a duplicated event is compatible with itself: S = 2P - P
    graph = WeightedExclusivityGraph((ev, ev), np.ones(2), frozenset({(0, 1)}))
    assert two_point_value(m, graph) == pytest.approx(float(m.prob(0, ("0", "0"))), abs=1e-12)


def test_two_point_needs_a_joint_context(fixture_model):
    m = fixture_model("chsh.json")
    graph = WeightedExclusivityGraph((Event(0, ("0", "0")), Event(1, ("0", "0"))), np.ones(2),
                                     frozenset({(0, 1)}))
    with pytest.raises(KeyError):
        two_point_value(m, graph)


def test_graph_file_errors(tmp_path):
    with pytest.raises(ModelFormatError):
        graph_from_dict({"vertices": [], "edges": [], "extra": 1})
    with pytest.raises(ModelFormatError):
        graph_from_dict({"vertices": [{"tuple": "0"}], "edges": []})
    with pytest.raises(ModelFormatError):
        graph_from_dict({"vertices": [{"context": 0, "tuple": "0,0"}], "edges": [[0]]})
    bad = tmp_path / "g.json"
    bad.write_text("{\n  \"vertices\": [,]\n}")
    with pytest.raises(ModelFormatError, match=r"g.json:2"):
        load_graph(bad)
    m, _ = kcbs()
    with pytest.raises(ModelFormatError):
        graph_from_dict({"vertices": [{"context": 9, "tuple": "1,0"}], "edges": []}, m)


def test_graph_roundtrip_json():
    data = json.loads((FIXTURES / "kcbs_pentagon_graph.json").read_text())
    g = graph_from_dict(data)
    assert g.n == 5 and len(g.edges) == 5
