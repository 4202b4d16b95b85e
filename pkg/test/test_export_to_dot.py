import pytest

from utils.export_to_dot import _quote, automaton_to_dot, game_to_dot, net_to_dot, to_dot
from utils.games import materialize
from utils.unfolding import unfold


### TESTS ###


def test_quote():
    """Quotes and backslashes are escaped"""
    assert _quote('a"b') == r'"a\"b"'
    assert _quote("a\\b") == '"a\\\\b"'


def test_net_shows_tokens(fig5):
    """Initially marked places carry a bullet per token"""
    text = net_to_dot(fig5.net)

    assert text.startswith('digraph "fig5" {')
    assert '"A" [label="A •" shape=circle' in text
    assert '"B" [label="B" shape=circle' in text
    assert '"B" -> "a";' in text
    assert '"a" [label="a" shape=box];' in text


def test_game_colours(fig5):
    """System places are gray, special places have a double border"""
    lines = {line.split(" [")[0].strip(): line for line in game_to_dot(fig5).splitlines() if "shape=circle" in line}

    assert 'fillcolor="gray80"' in lines['"C"']
    assert 'fillcolor="white"' in lines['"A"']
    assert "peripheries=2" in lines['"D"']
    assert "peripheries=2" not in lines['"C"']


def test_branching_process_uses_labels(fig5):
    """Conditions and events are drawn with the base names"""
    text = to_dot(unfold(fig5.net, depth=1), fig5)

    assert 'label="e1" shape=box' in text
    assert 'label="A •"' in text


def test_strategy(fig5, fig5_policy):
    """Strategies are drawn as their branching process"""
    assert to_dot(materialize(fig5, fig5_policy, depth=3)).startswith("digraph")


def test_automaton(fig9):
    """One cluster per process, uncontrollable moves dashed"""
    text = automaton_to_dot(fig9)

    assert "subgraph cluster_0 {" in text and "subgraph cluster_1 {" in text
    assert '"p1.D" [label="D" shape=doublecircle];' in text
    assert '"p1.A" -> "p1.C" [label="b" style=dashed];' in text
    assert '"p1.A" -> "p1.B" [label="a" style=solid];' in text
    assert '"p2.E" -> "p2.F" [label="c" style=solid];' in text


def test_unknown_object():
    """Only nets, games and strategies can be drawn"""
    with pytest.raises(TypeError):
        to_dot("fig5")
