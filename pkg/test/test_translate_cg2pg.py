from dataclasses import replace

import pytest

from models.automata import LocalProcess
from models.games import ControlGame, MemoryController, Objective
from models.reports import Verdict
from models.traces import DistributedAlphabet
from utils.automata import compose_local
from utils.errors import AssumptionViolated, IdCollision, NonSafetyObjective
from utils.games import controller_winning_bounded, rule_winning, strategy_winning
from utils.translate_cg2pg import (
    BASE, CHALLENGE, DEADLOCK, CommitmentController, CommitmentRule, act_name, cg_to_pg,
    controller_to_strategy_cg2pg, strategy_to_controller_cg2pg,
)
from utils.unfolding import validate_branching_process


@pytest.fixture
def fig9_res(fig9):
    """Base translation of fig9"""
    return cg_to_pg(fig9)


@pytest.fixture
def manager_res(manager):
    """Compact translation of the manager game: only m1 is a system place"""
    return cg_to_pg(manager, compact=True)


### TESTS ###


def test_fig9_places(fig9_res):
    """Every local state is a system place with one commitment per subset of its controllable actions"""
    g = fig9_res.petri_game

    assert len(g.net.places) == 15
    assert g.system == {"A", "B", "C", "D", "E", "F"}
    assert {"(A,{})", "(A,{a})", "(B,{})", "(E,{c})"} <= g.net.places
    assert g.special == {"D", "(D,{})"}
    assert g.objective == Objective.SAFETY


def test_fig9_transitions(fig9_res):
    """Controllable actions are copied only where every commitment contains them"""
    actions = {t for t in fig9_res.petri_game.net.transitions if t.startswith("act(")}

    assert actions == {
        act_name("a", ["A"], [{"a"}]),
        act_name("b", ["A"], [set()]),
        act_name("b", ["A"], [{"a"}]),
        act_name("c", ["C", "E"], [{"c"}, {"c"}]),
        act_name("d", ["B", "E"], [set(), set()]),
        act_name("d", ["B", "E"], [set(), {"c"}]),
    }
    assert len(fig9_res.taus) == 9
    assert fig9_res.pg_label(act_name("c", ["C", "E"], [{"c"}, {"c"}])) == "c"
    assert fig9_res.pg_label("tau(A,{a})") is None


def test_state_of_marking(fig9_res):
    """Commitments stand for the state they were taken in"""
    assert dict(fig9_res.state_of(["(C,{c})", "E"])) == {"p1": "C", "p2": "E"}


def test_compact(fig9):
    """States without controllable actions skip the commitment step"""
    res = cg_to_pg(fig9, compact=True)
    g = res.petri_game

    assert len(g.net.places) == 12
    assert len(g.net.transitions) == 12
    assert "B" not in g.system
    assert res.commitment_place("p1", "B", ()) == "B"
    assert res.commitment_place("p1", "A", {"a"}) == "(A,{a})"


def test_deadlock_detection(fig9, fig9_res):
    """Waiting on C while c is refused is an artificial deadlock and leads to bot"""
    res = cg_to_pg(fig9, DEADLOCK)
    g = res.petri_game

    assert len(res.artificial_deadlocks) == 3
    assert all(dict(res.state_of(m))["p1"] == "C" for m in res.artificial_deadlocks)
    assert {"bot_dl(p1)", "bot_dl(p2)"} <= g.special
    assert len(g.net.places) == len(fig9_res.net.places) + 2
    assert len(g.net.transitions) == len(fig9_res.net.transitions) + 3


def test_challenge(fig9, fig9_res):
    """Each commitment may retire its token to top"""
    res = cg_to_pg(fig9, CHALLENGE)
    g = res.petri_game

    assert {"top(p1)", "top(p2)"} <= g.net.places
    assert "top(p1)" not in g.special
    assert "tch(A,{a})" in g.net.transitions
    assert len(g.net.transitions) == len(fig9_res.net.transitions) + 3 + 9


def test_rejects_reachability_games(fig9):
    """Only safety control games translate this way"""
    with pytest.raises(NonSafetyObjective):
        cg_to_pg(replace(fig9, objective=Objective.REACHABILITY))
    with pytest.raises(ValueError):
        cg_to_pg(fig9, "fancy")


def test_shared_state_names_are_qualified():
    """Two processes using the state s get the places p.s and q.s"""
    alphabet = DistributedAlphabet.of({"a": {"p"}, "b": {"q"}})
    automaton = compose_local({
        "p": LocalProcess({"s", "t"}, "s", {("s", "a", "t")}),
        "q": LocalProcess({"s"}, "s", {("s", "b", "s")}),
    }, alphabet)
    res = cg_to_pg(ControlGame(automaton, controllable={"a"}, name="clash"), BASE)

    assert res.place_of[("p", "s")] == "p.s"
    assert res.place_of[("q", "s")] == "q.s"
    assert res.place_of[("p", "t")] == "t"
    assert res.net.initial.support == {"p.s", "q.s"}


def test_controller_becomes_winning_strategy(manager, manager_res, manager_controller):
    """Committing as the manager controller decides wins the translated game"""
    strategy = controller_to_strategy_cg2pg(manager, manager_res, manager_controller, depth=6)

    assert validate_branching_process(strategy.bp).valid
    assert strategy_winning(manager_res.petri_game, strategy, depth=20).verdict == Verdict.WINNING


def test_strategy_becomes_winning_controller(manager, manager_res, manager_controller):
    """Reading the commitments of the strategy back gives a winning controller"""
    strategy = controller_to_strategy_cg2pg(manager, manager_res, manager_controller, depth=6)
    controller = strategy_to_controller_cg2pg(manager, manager_res, strategy)

    assert isinstance(controller, CommitmentController)
    assert controller_winning_bounded(manager, controller, bound=20).verdict == Verdict.WINNING


def test_refusing_controller_loses(fig16):
    """The uncontrollable a still reaches the bad state B after any commitment"""
    res = cg_to_pg(fig16)
    report = rule_winning(res.petri_game, CommitmentRule(res, MemoryController(fig16, 0, default=())))

    assert report.verdict == Verdict.NOT_WINNING


def test_commitment_against_controller(fig9):
    """A controllable transition fired against the controller is an assumption violation"""
    res = cg_to_pg(fig9)
    rule = CommitmentRule(res, MemoryController(fig9, 0, default=()))
    memory = rule.initial("A", 0)

    with pytest.raises(AssumptionViolated):
        rule.fire(act_name("a", ["A"], [{"a"}]), [("(A,{a})", memory)], ["B"])


def test_colliding_deadlock_names_raise(fig9, monkeypatch):
    """Distinct artificial deadlocks need distinct tdl transitions"""
    monkeypatch.setattr("utils.translate_cg2pg.tdl_name", lambda marking: "tdl(clash)")

    with pytest.raises(IdCollision):
        cg_to_pg(fig9, DEADLOCK)
