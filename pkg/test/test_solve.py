import pytest

from models.reports import Verdict
from utils.distribution import build_snd, find_slice_distribution
from utils.errors import SizeLimit
from utils.games import controller_winning_bounded, strategy_winning
from utils.solve import solve_cg, solve_pg
from utils.translate_cg2pg import BASE, CHALLENGE, DEADLOCK, cg_to_pg
from utils.translate_pg2cg import pg_to_cg


### TESTS ###


def test_fig5_is_solved(fig5):
    """Firing i and then refusing a and b wins fig5"""
    strategy = solve_pg(fig5, depth=6)

    assert strategy is not None
    assert strategy_winning(fig5, strategy, depth=6).verdict == Verdict.WINNING


def test_burglary_needs_memory(burglary):
    """The alarm must remember which entrance the burglar used"""
    assert solve_pg(burglary, decision_memory=0) is None
    strategy = solve_pg(burglary, decision_memory=2)

    assert strategy is not None
    assert strategy_winning(burglary, strategy).verdict == Verdict.WINNING


def test_commitment_is_lost(commitment):
    """The token on D cannot learn which choice was made before committing"""
    assert solve_pg(commitment, decision_memory=3) is None


def test_manager_is_solved(manager):
    """Two actions of causal memory are enough for the manager"""
    controller = solve_cg(manager, view_memory=2)

    assert controller is not None
    report = controller_winning_bounded(manager, controller)
    assert report.verdict == Verdict.WINNING


@pytest.mark.parametrize("name", ["fig9", "fig16"])
def test_lost_control_games(name, request):
    """An uncontrollable action leads to a bad state or a deadlock whatever is allowed"""
    assert solve_cg(request.getfixturevalue(name), view_memory=1) is None


def test_challenge_enforces_commitment(fig16):
    """Refusing to commit wins the base translation, the challenge turns it into a deadlock"""
    assert solve_pg(cg_to_pg(fig16, BASE).petri_game) is not None
    assert solve_pg(cg_to_pg(fig16, CHALLENGE).petri_game) is None


def test_search_cap(manager):
    """The search stops after the allowed number of candidates"""
    with pytest.raises(SizeLimit):
        solve_cg(manager, view_memory=2, search_cap=1)


def test_depth_bounds_the_returned_strategy(fig5):
    """Memory policies are checked exactly, the depth only bounds the materialized prefix"""
    strategy = solve_pg(fig5, depth=1)

    assert strategy is not None
    assert strategy.bp.depth == 1
    assert sorted(strategy.bp.labels[e] for e in strategy.bp.events) == ["e1", "e2", "i"]


@pytest.mark.parametrize("name, view_memory", [("fig5", 0), ("burglary", 3)])
def test_translated_petri_games_are_solved(name, view_memory, request):
    """Won Petri games translate to control games with a winning controller"""
    g = request.getfixturevalue(name)
    c = pg_to_cg(g, find_slice_distribution(g.net)).control_game
    controller = solve_cg(c, view_memory=view_memory)

    assert controller is not None
    assert controller_winning_bounded(c, controller).verdict == Verdict.WINNING


def test_translated_commitment_game_is_lost(commitment):
    """The singular net translation of a lost game has no winning controller"""
    assert solve_pg(commitment, decision_memory=0) is None
    assert solve_cg(pg_to_cg(commitment, build_snd(commitment.net)).control_game, view_memory=0) is None


def test_translated_manager_is_solved(manager):
    """A strategy on the compact net reads the client's last request like the controller does"""
    g = cg_to_pg(manager, compact=True).petri_game
    strategy = solve_pg(g, depth=6, decision_memory=2)

    assert strategy is not None
    assert strategy_winning(g, strategy).verdict == Verdict.WINNING


def test_translated_fig9_is_lost(fig9):
    """With deadlock detection refusing to commit no longer saves the system"""
    assert solve_cg(fig9, view_memory=0) is None
    assert solve_pg(cg_to_pg(fig9, DEADLOCK).petri_game) is None
