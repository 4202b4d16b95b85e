import os

import pytest
from hypothesis import given, settings, strategies as st

from models.games import MemoryController, MemoryPolicy, PetriGame
from models.nets import PetriNet
from models.reports import BisimVerdict
from utils.distribution import find_slice_distribution
from utils.errors import BoundExceeded
from utils.formats import load
from utils.translate_cg2pg import CommitmentRule, cg_to_pg
from utils.translate_pg2cg import ControllerRule, StrategyController, pg_to_cg
from utils.verify import weak_bisim_check


@st.composite
def sliced_games(draw):
    """Games with one or two slices of up to six places and a memoryless policy on them"""
    slices = [[f"{name}{j}" for j in range(draw(st.integers(1, 6)))] for name in "ab"[:draw(st.integers(1, 2))]]
    transitions, arcs = [], []
    for i, places in enumerate(slices):
        for k in range(draw(st.integers(1, 4))):
            name = f"t{i}{k}"
            transitions.append(name)
            arcs += [(draw(st.sampled_from(places)), name), (name, draw(st.sampled_from(places)))]
    if len(slices) == 2:
        for k in range(draw(st.integers(0, 3))):
            name = f"sync{k}"
            transitions.append(name)
            for places in slices:
                arcs += [(draw(st.sampled_from(places)), name), (name, draw(st.sampled_from(places)))]
    places = [p for block in slices for p in block]
    net = PetriNet.build(places, transitions, arcs, [block[0] for block in slices], name="sliced")
    system = draw(st.sets(st.sampled_from(places)))
    g = PetriGame(net, system, draw(st.sets(st.sampled_from(places), max_size=2)))
    table = {(p, ()): draw(st.sets(st.sampled_from(transitions))) for p in sorted(system)}
    return g, MemoryPolicy(0, table, default=())


@pytest.fixture
def fig5_res(fig5):
    """Plain translation of fig5 along its slices"""
    return pg_to_cg(fig5, find_slice_distribution(fig5.net))


@pytest.fixture
def fig5_controller(fig5_res, fixtures_dir):
    """The shipped controller of the translated fig5 game"""
    return load(os.path.join(fixtures_dir, "fig5.controller"), game=fig5_res.control_game)


### TESTS ###


def test_fig5_strategy_and_controller_are_bisimilar(fig5, fig5_policy, fig5_res, fig5_controller):
    """Commitments are internal, every transition is matched by the same action"""
    witness = weak_bisim_check(
        fig5, fig5_policy, fig5_res.control_game, fig5_controller,
        depth=16, pg_label=fig5_res.pg_label, cg_label=fig5_res.cg_label,
    )

    assert witness.verdict == BisimVerdict.PASS
    assert ("{A,C}", "{'p1': 'A', 'p2': 'C'}") in witness.relation


def test_refusing_controller_is_not_bisimilar(fig5, fig5_policy, fig5_res):
    """The strategy fires i, a controller that never commits cannot follow"""
    controller = MemoryController(fig5_res.control_game, 0, default=())
    witness = weak_bisim_check(
        fig5, fig5_policy, fig5_res.control_game, controller,
        depth=8, pg_label=fig5_res.pg_label, cg_label=fig5_res.cg_label,
    )

    assert witness.verdict == BisimVerdict.FAIL
    assert witness.clause == 1
    assert witness.unmatched == "i"


def test_manager_strategy_and_controller_are_bisimilar(manager, manager_controller):
    """The commitment strategy of the translated manager game mirrors its controller"""
    res = cg_to_pg(manager, compact=True)
    witness = weak_bisim_check(
        res.petri_game, CommitmentRule(res, manager_controller), manager, manager_controller,
        depth=6, pg_label=res.pg_label, cg_label=res.cg_label,
    )

    assert witness.verdict == BisimVerdict.PASS


def test_pair_cap(fig5, fig5_policy, fig5_res, fig5_controller):
    """Too many candidate pairs raise"""
    with pytest.raises(BoundExceeded):
        weak_bisim_check(
            fig5, fig5_policy, fig5_res.control_game, fig5_controller,
            pg_label=fig5_res.pg_label, cg_label=fig5_res.cg_label, state_cap=1,
        )


@settings(max_examples=25)
@given(game=sliced_games())
def test_random_sliced_games_round_trip(game):
    """A policy, its controller and the policy read back from that controller are all bisimilar"""
    g, policy = game
    res = pg_to_cg(g, find_slice_distribution(g.net))
    controller = StrategyController(res, policy)

    for rule in (policy, ControllerRule(res, controller)):
        witness = weak_bisim_check(
            g, rule, res.control_game, controller, depth=6, pg_label=res.pg_label, cg_label=res.cg_label,
        )
        assert witness.verdict == BisimVerdict.PASS
