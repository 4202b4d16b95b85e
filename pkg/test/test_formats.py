import os

import pytest

from models.games import FunctionController, MemoryController
from models.nets import PetriNet
from utils.distribution import build_snd, find_slice_distribution, validate_snd
from utils.errors import ParseError, ValidationError
from utils.formats import dump, emit, load, parse
from utils.games import materialize
from utils.translate_cg2pg import cg_to_pg
from utils.translate_pg2cg import HATTED, pg_to_cg


NET = """\
kind: petri_net
name: tiny
places: A B
transitions: t
flow:
  t: A -> B
init: A
"""


### TESTS ###


def test_parse_petri_net():
    """Flow lines read as 'sources -> targets'"""
    net = parse(NET)

    assert isinstance(net, PetriNet)
    assert net.name == "tiny"
    assert str(net.initial) == "{A}"
    assert net.post["t"].support == {"B"}


def test_fixtures_parse(fig5, fig9, manager):
    """The shipped games keep their names and objectives"""
    assert fig5.name == "fig5"
    assert fig5.system == {"C", "D"}
    assert fig9.controllable == {"a", "c"}
    assert manager.special["T"] == {"tbad"}


@pytest.mark.parametrize("text, line", [
    (NET.replace("  t: A -> B", "  u: A -> B"), 6),
    (NET + "bogus: x\n", 8),
    (NET.replace("t: A -> B", "t: A B"), 6),
    ("kind: nonsense\n", 1),
])
def test_parse_errors_have_positions(text, line):
    """Malformed documents are reported with their line"""
    with pytest.raises(ParseError) as error:
        parse(text, path="tiny.pn")
    assert error.value.line == line
    assert str(error.value).startswith("tiny.pn:")


def test_malformed_yaml():
    """YAML syntax errors surface as parse errors"""
    with pytest.raises(ParseError):
        parse("kind: [petri_net\n")
    with pytest.raises(ParseError):
        parse("- just\n- a list\n")


def test_parse_validates():
    """Arcs to undeclared places break the net invariants"""
    with pytest.raises(ValidationError) as error:
        parse(NET.replace("t: A -> B", "t: A -> Z"))
    assert error.value.clause == "flow-endpoint"


def test_controller_needs_its_game(fixtures_dir):
    """Controllers are read against a control game"""
    with pytest.raises(ParseError):
        load(os.path.join(fixtures_dir, "manager.controller"))


def test_games_emit_stably(fig5, fig9, manager, burglary):
    """Emitting a parsed emission gives the same text"""
    translated = [
        pg_to_cg(fig5, find_slice_distribution(fig5.net), HATTED).control_game,
        cg_to_pg(fig9).petri_game,
    ]
    for game in [fig5, fig9, manager, burglary, *translated]:
        text = emit(game)
        assert emit(parse(text)) == text


def test_strategy_file(fig5, fig5_policy):
    """A materialized strategy is written as its history table"""
    text = emit(materialize(fig5, fig5_policy, depth=8), name="fig5")
    policy = parse(text)

    assert {key: value for key, value in policy.decisions.items() if value} == dict(fig5_policy.decisions)


def test_memory_controller_file(manager, manager_controller, tmp_path):
    """Memory controllers survive a dump and a load"""
    path = str(tmp_path / "manager.controller")
    dump(manager_controller, path)
    loaded = load(path, game=manager)

    assert isinstance(loaded, MemoryController)
    assert loaded.k == 2
    assert loaded.table == manager_controller.table


def test_distribution_files(fig5):
    """Slice and singular net distributions are read against their net"""
    slices = find_slice_distribution(fig5.net)
    loaded = parse(emit(slices), net=fig5.net)

    assert loaded.members == slices.members
    assert [s.places for s in loaded.slices] == [s.places for s in slices.slices]

    snd = build_snd(fig5.net)
    loaded = parse(emit(snd), net=fig5.net)

    assert loaded.members == snd.members
    assert loaded.composition.transitions == snd.composition.transitions
    assert validate_snd(loaded).valid


def test_no_file_form(fig9):
    """Callable controllers must be tabulated before they are written"""
    with pytest.raises(TypeError):
        emit(FunctionController(fig9, lambda p, view: ()))
