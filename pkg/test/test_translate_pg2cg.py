import os
from dataclasses import replace

import pytest

from models.games import MemoryController, Objective
from models.reports import Verdict
from utils.distribution import build_snd, distribution_from_blocks, find_slice_distribution
from utils.errors import InvalidDistribution, NonReachabilityObjective, ReconstructionAssertionFailed
from utils.formats import load
from utils.games import (
    check_deterministic, check_justified_refusal, controller_winning_bounded, materialize, strategy_winning,
    tabulate_strategy,
)
from utils.translate_pg2cg import (
    HATTED, PLAIN, StrategyController, controller_to_strategy_pg2cg, pg_to_cg, reconstruct_play,
    strategy_to_controller_pg2cg,
)


@pytest.fixture
def fig5_slices(fig5):
    """Slices {A,B} and {C,D} of fig5"""
    return find_slice_distribution(fig5.net)


@pytest.fixture
def fig5_res(fig5, fig5_slices):
    """Plain translation of fig5"""
    return pg_to_cg(fig5, fig5_slices)


@pytest.fixture
def fig5_controller(fig5_res, fixtures_dir):
    """Table controller of the translated fig5 game"""
    return load(os.path.join(fixtures_dir, "fig5.controller"), game=fig5_res.control_game)


@pytest.fixture
def fig5_hatted(fig5, fig5_slices):
    """Hatted translation of fig5"""
    return pg_to_cg(fig5, fig5_slices, HATTED)


@pytest.fixture
def fig14_controller(fig5_hatted, fixtures_dir):
    """Controller of the hatted fig5 game committing to one transition at a time"""
    return load(os.path.join(fixtures_dir, "fig14.controller"), game=fig5_hatted.control_game)


### TESTS ###


def test_processes_and_states(fig5_res):
    """Environment places stay single states, system places fan out into commitments"""
    c = fig5_res.control_game

    assert dict(fig5_res.process_of_slice) == {"s1": "p1", "s2": "p2"}
    assert c.automaton.local_states["p1"] == {"A", "B"}
    assert c.automaton.local_states["p2"] == {
        "C", "(C,{})", "(C,{i})", "D", "(D,{})", "(D,{a})", "(D,{b})", "(D,{a,b})",
    }
    assert c.controllable == {
        "tau(C,{})", "tau(C,{i})", "tau(D,{})", "tau(D,{a})", "tau(D,{b})", "tau(D,{a,b})",
    }
    assert c.objective == Objective.REACHABILITY
    assert c.name == "fig5.cg"


def test_winning_states(fig5_res):
    """Commitments on a winning place are winning too"""
    special = fig5_res.control_game.special

    assert special["p1"] == {"B"}
    assert special["p2"] == {"D", "(D,{})", "(D,{a})", "(D,{b})", "(D,{a,b})"}


def test_transitions_need_commitment(fig5_res):
    """A system token only moves along transitions it committed to"""
    delta = fig5_res.control_game.automaton.delta

    assert dict(delta["i"]) == {("(C,{i})",): ("D",)}
    assert delta["a"][("B", "(D,{a,b})")] == ("A", "C")
    assert ("B", "(D,{b})") not in delta["a"]
    assert fig5_res.control_game.alphabet.domain("a") == ("p1", "p2")


def test_hatted_variant(fig5, fig5_slices):
    """Committing to both a and b can be zapped into bot"""
    res = pg_to_cg(fig5, fig5_slices, HATTED)
    c = res.control_game
    zaps = sorted(a for a in c.alphabet.actions if a.startswith("zap"))

    assert res.variant == HATTED
    assert len(c.automaton.local_states["p2"]) == 9
    assert zaps == ["zap(D,{a,b},a,b)"]
    assert dict(c.automaton.delta[zaps[0]]) == {("B", "(D,{a,b})"): ("bot(p1)", "bot(p2)")}
    assert res.cg_label(zaps[0]) is None


def test_labels(fig5_res):
    """Only transitions of the net are observable"""
    assert fig5_res.cg_label("a") == "a"
    assert fig5_res.cg_label("tau(C,{i})") is None
    assert fig5_res.pg_label("e1") == "e1"


def test_rejects_unknown_variant(fig5, fig5_slices):
    """Variants are plain or hatted"""
    with pytest.raises(ValueError):
        pg_to_cg(fig5, fig5_slices, "fancy")


def test_rejects_safety_games(fig5, fig5_slices):
    """Only reachability games translate this way"""
    with pytest.raises(NonReachabilityObjective):
        pg_to_cg(replace(fig5, objective=Objective.SAFETY), fig5_slices, PLAIN)


def test_rejects_bad_distributions(fig5, burglary):
    """Broken slices and distributions of other nets are refused"""
    with pytest.raises(InvalidDistribution):
        pg_to_cg(fig5, distribution_from_blocks(fig5.net, [["A", "C"], ["B", "D"]]))
    with pytest.raises(InvalidDistribution):
        pg_to_cg(fig5, find_slice_distribution(burglary.net))


def test_strategy_becomes_winning_controller(fig5, fig5_slices, fig5_res, fig5_policy):
    """Committing to what the strategy allows wins the translated game"""
    strategy = materialize(fig5, fig5_policy, depth=8)
    for controller in (StrategyController(fig5_res, fig5_policy),
                       strategy_to_controller_pg2cg(fig5, fig5_slices, fig5_res, strategy)):
        report = controller_winning_bounded(fig5_res.control_game, controller, bound=20)
        assert report.verdict == Verdict.WINNING


def test_controller_becomes_winning_strategy(fig5, fig5_slices, fig5_res, fig5_controller, fig5_policy):
    """The shipped controller yields the shipped strategy"""
    strategy = controller_to_strategy_pg2cg(fig5, fig5_slices, fig5_res, fig5_controller, depth=8)

    assert strategy_winning(fig5, strategy, depth=8).verdict == Verdict.WINNING
    assert check_justified_refusal(fig5, strategy).valid
    table = tabulate_strategy(strategy)
    assert {key: value for key, value in table.decisions.items() if value} == dict(fig5_policy.decisions)


def test_reconstruct_play(fig5_res, fig5_controller):
    """Commitments are interleaved right before the transitions using them"""
    play = reconstruct_play(fig5_res, fig5_controller, ["e1", "i", "b"])

    assert play == ("e1", "tau(C,{i})", "i", "tau(D,{b})", "b")
    with pytest.raises(ReconstructionAssertionFailed):
        reconstruct_play(fig5_res, fig5_controller, ["a"])


def test_snd_translation(commitment):
    """A net with two tokens on one place translates through its singular nets"""
    snd = build_snd(commitment.net)
    res = pg_to_cg(commitment, snd)
    c = res.control_game

    assert len(c.processes) == 4
    assert all(res.taus[tau][0] in res.system for tau in c.controllable)
    assert {res.cg_label(t) for t in snd.composition.transitions} == commitment.net.transitions


def test_snd_controller_to_strategy(commitment):
    """A controller that never commits yields a strategy that never fires i"""
    snd = build_snd(commitment.net)
    res = pg_to_cg(commitment, snd)
    controller = MemoryController(res.control_game, 0, default=())
    strategy = controller_to_strategy_pg2cg(commitment, snd, res, controller, depth=4)

    labels = {strategy.bp.labels[e] for e in strategy.bp.events}
    assert "i" not in labels
    assert {"mx", "my", "j"} <= labels


def test_hatted_controller_becomes_deterministic_strategy(fig5, fig5_slices, fig5_hatted, fig14_controller):
    """Allowed sets copy the single commitments, keyed on the past of each system place"""
    assert controller_winning_bounded(fig5_hatted.control_game, fig14_controller, bound=20).verdict == Verdict.WINNING

    strategy = controller_to_strategy_pg2cg(fig5, fig5_slices, fig5_hatted, fig14_controller, depth=8)

    assert check_deterministic(fig5, strategy)
    assert strategy_winning(fig5, strategy, depth=8).verdict == Verdict.WINNING
    assert dict(tabulate_strategy(strategy).decisions) == {
        ("C", ()): {"i"},
        ("D", ("i",)): {"a"},
        ("C", ("e1", "i", "a")): {"i"},
        ("C", ("e2", "i", "a")): {"i"},
        ("D", ("e1", "i", "a", "i")): set(),
        ("D", ("e2", "i", "a", "i")): {"b"},
        ("D", ("e2", "i", "a", "e1", "i", "b")): set(),
        ("D", ("e2", "i", "a", "e2", "i", "b")): set(),
    }
