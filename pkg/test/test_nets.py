from collections import Counter

import pytest
from hypothesis import given, strategies as st

from models.nets import Marking, PetriNet
from utils.errors import BoundExceeded, NegativeMarking, NotEnabled, UnknownTransition, ValidationError
from utils.nets import (
    fire, fire_sequence, incidence_matrix, is_concurrency_preserving, is_final, is_one_bounded, reachability_graph,
    reachable_markings, validate_net,
)


@pytest.fixture
def cycle_net():
    """Two tokens chasing each other around a three-place cycle"""
    return PetriNet.build(
        ["P", "Q", "R"],
        ["pq", "qr", "rp"],
        [("P", "pq"), ("pq", "Q"), ("Q", "qr"), ("qr", "R"), ("R", "rp"), ("rp", "P")],
        initial=["P", "Q"],
        name="cycle",
    )


@pytest.fixture
def counter_net():
    """A transition that keeps adding tokens to its own place"""
    return PetriNet.build(["P"], ["grow"], [("P", "grow"), ("grow", "P", 2)], initial=["P"], name="counter")


### TESTS ###


def test_marking_string_form():
    """Markings print as sorted braces with multiplicities"""
    assert str(Marking.of(["C", "A", "C"])) == "{A,2*C}"
    assert str(Marking.of()) == "{}"


def test_marking_arithmetic():
    """Adding and removing tokens follows multiset arithmetic"""
    left = Marking.of(["A", "B"])
    right = Marking.of(["B", "C"])

    assert left + right == Marking.of({"A": 1, "B": 2, "C": 1})
    assert (left + right) - right == left
    assert left.covers(Marking.of(["A"]))
    assert not left.covers(right)
    assert left.support == frozenset({"A", "B"})


def test_marking_subtraction_never_clamps():
    """Removing absent tokens raises instead of clamping at zero"""
    with pytest.raises(NegativeMarking):
        Marking.of(["A"]) - Marking.of(["B"])


def test_build_rejects_shared_ids():
    """Places and transitions need disjoint identifiers"""
    with pytest.raises(ValidationError) as error:
        PetriNet.build(["x"], ["x"], [])
    assert error.value.clause == "disjoint-nodes"


def test_build_rejects_place_to_place_arc():
    """Every arc joins a place and a transition"""
    with pytest.raises(ValidationError) as error:
        PetriNet.build(["A", "B"], ["t"], [("A", "B")])
    assert error.value.clause == "flow-endpoint"


def test_fire_moves_tokens(fig5):
    """Firing e1 moves the environment token from A to B"""
    assert fire(fig5.net, fig5.net.initial, "e1") == Marking.of(["B", "C"])
    assert fire_sequence(fig5.net, ["e2", "i", "b", "a"]) == fig5.net.initial


def test_fire_errors(fig5):
    """Unknown and disabled transitions are rejected"""
    with pytest.raises(UnknownTransition):
        fire(fig5.net, fig5.net.initial, "nope")
    with pytest.raises(NotEnabled):
        fire(fig5.net, fig5.net.initial, "a")


def test_reachable_markings_fixpoint(fig5):
    """The fig5 net reaches exactly four markings and none of them is final"""
    markings = reachable_markings(fig5.net)

    assert markings == {
        Marking.of(["A", "C"]),
        Marking.of(["B", "C"]),
        Marking.of(["A", "D"]),
        Marking.of(["B", "D"]),
    }
    assert not any(is_final(fig5.net, m) for m in markings)


def test_reachable_markings_bounded(fig5):
    """With a bound only markings within that many firings are returned"""
    assert reachable_markings(fig5.net, bound=0) == {fig5.net.initial}
    assert len(reachable_markings(fig5.net, bound=1)) == 3


def test_reachability_graph_labels(cycle_net):
    """Edges carry the fired transition"""
    graph = reachability_graph(cycle_net)

    labels = {data["label"] for _, _, data in graph.edges(data=True)}
    assert labels == {"pq", "qr", "rp"}
    assert graph.number_of_nodes() == 6


def test_state_cap_stops_unbounded_net(counter_net):
    """An unbounded net exceeds any state cap"""
    with pytest.raises(BoundExceeded):
        reachable_markings(counter_net, state_cap=50)


def test_incidence_matrix(fig5):
    """Rows follow sorted places and columns sorted transitions"""
    matrix = incidence_matrix(fig5.net)

    assert matrix.shape == (4, 5)
    assert matrix[:, 0].tolist() == [1, -1, 1, -1]
    assert matrix[:, 1].tolist() == [0, 0, 0, 0]


def test_concurrency_preservation(fig5, counter_net):
    """Transitions must consume as many tokens as they produce"""
    assert is_concurrency_preserving(fig5.net)
    assert not is_concurrency_preserving(counter_net)


def test_validate_net_fig5(fig5):
    """A safe concurrency-preserving net validates cleanly"""
    report = validate_net(fig5.net)

    assert report.valid
    assert report.one_bounded is True
    assert report.reachable == 4


def test_validate_net_two_tokens_on_meet(commitment):
    """The meet place of the commitment game can hold two tokens"""
    report = validate_net(commitment.net)

    assert not is_one_bounded(commitment.net)
    assert report.one_bounded is False
    assert [v.clause for v in report.violations] == ["one-bounded"]
    assert report.concurrency_preserving


def test_validate_net_reports_weights(counter_net):
    """Weighted arcs are reported as not set-like"""
    report = validate_net(counter_net)

    clauses = {v.clause for v in report.violations}
    assert {"concurrency-preserving", "set-like", "one-bounded"} <= clauses


@given(word=st.lists(st.sampled_from(["a", "b", "e1", "e2", "i"]), max_size=12))
def test_firing_matches_counter_arithmetic(fig5, word):
    """Enabled firings agree with plain multiset arithmetic on Counters"""
    net = fig5.net
    marking = net.initial
    tokens = Counter(net.initial.counts)
    for transition in word:
        if transition not in net.enabled(marking):
            continue
        marking = fire(net, marking, transition)
        tokens.subtract(net.pre[transition].counts)
        tokens.update(net.post[transition].counts)
        assert all(count >= 0 for count in tokens.values())
        assert marking == Marking.of(+tokens)
