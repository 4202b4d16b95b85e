import pytest

from models.games import MemoryController, MemoryPolicy
from models.reports import Verdict
from utils.errors import BoundExceeded, Undecided
from utils.explore import ControllerLTS, StrategyLTS, bag, explore, unbag, verdict


### TESTS ###


def test_bag_round_trip():
    """Bags forget token order but keep multiplicities"""
    state = bag([("meet", ()), ("P", ()), ("meet", ())])

    assert sorted(unbag(state)) == [("P", ()), ("meet", ()), ("meet", ())]
    assert bag(reversed(unbag(state))) == state


def test_strategy_lts_closes_for_finite_memory(fig5):
    """A memoryless rule explores the four reachable markings and stops"""
    lts = StrategyLTS(fig5, MemoryPolicy(0, default={"i", "b"}))
    run = explore(lts, depth=1, judge=False)

    assert {str(lts.marking(state)) for state in run.graph.nodes} == {"{A,C}", "{B,C}", "{A,D}", "{B,D}"}
    assert not run.truncated


def test_strategy_lts_counts_tokens(commitment):
    """Two tokens on meet are kept as one bag entry with multiplicity two"""
    lts = StrategyLTS(commitment, MemoryPolicy(0, default=()))
    run = explore(lts, judge=False)

    assert any(lts.marking(state)["meet"] == 2 for state in run.graph.nodes)


def test_explore_state_cap(manager, manager_controller):
    """Exploration stops with an error past the state cap"""
    with pytest.raises(BoundExceeded):
        explore(ControllerLTS(manager, manager_controller), state_cap=10)


def test_path_to_failure(fig9):
    """The witness of a failure is a shortest path of actions"""
    table = {("p1", "A", ()): {"a"}, ("p1", "C", ()): {"c"}, ("p2", "E", ()): {"c"}}
    lts = ControllerLTS(fig9, MemoryController(fig9, 0, table, default=()))
    report = verdict(lts, fig9.objective)

    assert report.verdict == Verdict.NOT_WINNING
    assert report.witness == ["b", "c"]
    assert report.reason == "bad state D of p1 reached"


def test_failure_among_decided_states(manager):
    """A wrong decision is reported even while other decisions are still missing"""
    controller = MemoryController(manager, 2, {("M", "m1", ("rX", "c")): {"gY"}})
    report = verdict(ControllerLTS(manager, controller), manager.objective)

    assert report.verdict == Verdict.NOT_WINNING
    assert report.reason == "bad state tbad of T reached"


def test_missing_decision_is_raised(manager):
    """Without a failure the first missing decision is handed back"""
    controller = MemoryController(manager, 2, {("M", "m1", ("rX", "c")): {"gX"}})

    with pytest.raises(Undecided) as error:
        verdict(ControllerLTS(manager, controller), manager.objective)
    assert error.value.key[:2] == ("M", "m1")
    with pytest.raises(Undecided):
        explore(ControllerLTS(manager, MemoryController(manager, 2)), judge=False)
