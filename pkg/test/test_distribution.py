import pytest
from hypothesis import given, settings, strategies as st

from models.distribution import CommunicationGraph
from models.nets import Marking, PetriNet
from utils.distribution import (
    acyclic_distribution_exists, build_snd, communication_graph, compose_snd, distribution_from_blocks,
    find_slice_distribution, in_acyclic_class, iter_slice_distributions, single_system_process, slices_to_snd,
    system_processes, validate_slice_distribution, validate_snd,
)
from utils.errors import IncompatibleFamily, NotConcurrencyPreserving, SizeLimit
from utils.nets import reachable_markings


@st.composite
def preserving_nets(draw):
    """Nets of up to eight places and three tokens whose transitions move as many tokens as they take"""
    places = [f"p{i}" for i in range(draw(st.integers(1, 8)))]
    tokens = draw(st.lists(st.sampled_from(places), min_size=1, max_size=3))
    transitions, arcs = [], []
    for k in range(draw(st.integers(1, 5))):
        width = draw(st.integers(1, min(len(tokens), len(places))))
        name = f"t{k}"
        transitions.append(name)
        arcs += [(p, name) for p in draw(st.lists(st.sampled_from(places), min_size=width, max_size=width, unique=True))]
        arcs += [(name, p) for p in draw(st.lists(st.sampled_from(places), min_size=width, max_size=width, unique=True))]
    return PetriNet.build(places, transitions, arcs, tokens, name="preserving")


@pytest.fixture
def fig5_slices(fig5):
    """The unique slice distribution of fig5"""
    return find_slice_distribution(fig5.net)


### TESTS ###


def test_fig5_slices(fig5_slices):
    """Each token keeps to its own pair of places"""
    assert [sorted(s.places) for s in fig5_slices.slices] == [["A", "B"], ["C", "D"]]
    assert fig5_slices.transitions_of("s1") == {"e1", "e2", "a", "b"}
    assert fig5_slices.transitions_of("s2") == {"i", "a", "b"}
    assert fig5_slices.member_of["D"] == "s2"
    assert validate_slice_distribution(fig5_slices).valid


def test_slice_search_is_exhaustive(fig5):
    """fig5 has exactly one slice distribution"""
    assert len(list(iter_slice_distributions(fig5.net))) == 1


def test_slice_search_cap(fig5):
    """The search stops once it tried more assignments than allowed"""
    with pytest.raises(SizeLimit):
        list(iter_slice_distributions(fig5.net, search_cap=1))


def test_bad_partition(fig5):
    """Splitting the tokens the wrong way breaks the single-token clause"""
    report = validate_slice_distribution(distribution_from_blocks(fig5.net, [["A", "C"], ["B", "D"]]))

    assert not report.valid
    assert "slice-single-token" in {v.clause for v in report.violations}


def test_burglary_slices(burglary):
    """The burglary net splits into four slices and some split has a tree architecture"""
    d = find_slice_distribution(burglary.net)

    assert d is not None
    assert len(d.slices) == 4
    assert validate_slice_distribution(d).valid
    assert acyclic_distribution_exists(burglary.net, strict=True)
    assert in_acyclic_class(burglary)


def test_two_tokens_on_a_place_have_no_slices(commitment):
    """A place holding two tokens rules out slices"""
    assert find_slice_distribution(commitment.net) is None
    assert not in_acyclic_class(commitment)


def test_snd_of_commitment(commitment):
    """Singular nets distribute the net slices cannot"""
    snd = build_snd(commitment.net)

    assert len(snd.nets) == 4
    assert validate_snd(snd).valid
    assert {snd.pi[p] for p in snd.composition.places} <= commitment.net.places


def test_snd_of_fig5(fig5):
    """Each fig5 token gets one singular net and the shared transitions one copy each"""
    snd = build_snd(fig5.net)

    assert snd.members == ("m1", "m2")
    assert snd.places_of("m1") == {"A.1", "B.1"}
    assert snd.places_of("m2") == {"C.2", "D.2"}
    assert len(snd.composition.transitions) == 5
    assert validate_snd(snd).valid


def test_snd_needs_concurrency_preservation():
    """Transitions changing the token count cannot be distributed"""
    net = PetriNet.build(["p", "q", "r"], ["t"], [("p", "t"), ("t", "q"), ("t", "r")], ["p"])
    with pytest.raises(NotConcurrencyPreserving):
        build_snd(net)


def test_slices_as_snd(fig5_slices):
    """A slice distribution is an SND labelled by the identity"""
    snd = slices_to_snd(fig5_slices)

    assert snd.composition == fig5_slices.base
    assert validate_snd(snd).valid


def test_compose_rejects_shared_places(fig5_slices):
    """Members of a family own disjoint places"""
    snd = slices_to_snd(fig5_slices)
    with pytest.raises(IncompatibleFamily):
        compose_snd([snd.nets[0], snd.nets[0]])


def test_communication_graphs(fig5_slices, fig9, manager):
    """Shared transitions and actions join members into edges"""
    assert communication_graph(fig5_slices).edges == {frozenset({"s1", "s2"})}
    assert communication_graph(fig9).is_acyclic
    assert not communication_graph(manager).is_acyclic


def test_communication_graph_drops_self_loops():
    """Edges need two distinct ends"""
    graph = CommunicationGraph(("u", "v"), frozenset({frozenset({"u"}), frozenset({"u", "v"})}))

    assert graph.edges == {frozenset({"u", "v"})}
    assert graph.graph().number_of_edges() == 1


def test_system_processes(fig9, manager):
    """System processes are those taking part in a controllable action"""
    assert system_processes(fig9) == {"p1", "p2"}
    assert system_processes(manager) == {"M"}
    assert single_system_process(manager)
    assert not single_system_process(fig9)


@settings(max_examples=25)
@given(net=preserving_nets())
def test_random_snd_projects_onto_reachable_markings(net):
    """Every generated SND validates and its reachable markings map onto those of the base net"""
    snd = build_snd(net)
    projected = {Marking.of(snd.pi[p] for p in marking) for marking in reachable_markings(snd.composition)}

    assert validate_snd(snd).valid
    assert projected == set(reachable_markings(net))
