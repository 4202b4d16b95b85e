"""
Graphviz DOT rendering of nets, games, branching processes and control games.

System places are filled gray, environment places white and special places (winning
or bad) get a double border. Transitions are boxes.
"""
from models.games import ControlGame, PetriGame, Strategy
from models.nets import PetriNet
from models.unfolding import BranchingProcess


def _quote(text: str) -> str:
    return '"{}"'.format(str(text).replace("\\", "\\\\").replace('"', r"\""))


def _place(node: str, label: str, tokens: int, system: bool, special: bool) -> str:
    text = f"{label} {'•' * tokens}" if tokens else label
    attrs = [f"label={_quote(text)}", "shape=circle"]
    attrs.append('style=filled fillcolor="gray80"' if system else 'style=filled fillcolor="white"')
    if special:
        attrs.append("peripheries=2")
    return f"  {_quote(node)} [{' '.join(attrs)}];"


def net_to_dot(
    net: PetriNet,
    system: frozenset = frozenset(),
    special: frozenset = frozenset(),
    labels: dict | None = None,
) -> str:
    """DOT text of a net; ``labels`` renames nodes in the picture only."""
    labels = labels or {}
    lines = [f"digraph {_quote(net.name)} {{", "  rankdir=TB;"]
    for place in sorted(net.places):
        lines.append(_place(place, labels.get(place, place), net.initial[place], place in system, place in special))
    for transition in sorted(net.transitions):
        lines.append(f"  {_quote(transition)} [label={_quote(labels.get(transition, transition))} shape=box];")
    for source, target, weight in net.arcs:
        suffix = f" [label={weight}]" if weight > 1 else ""
        lines.append(f"  {_quote(source)} -> {_quote(target)}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def game_to_dot(game: PetriGame) -> str:
    return net_to_dot(game.net, game.system, game.special)


def bp_to_dot(bp: BranchingProcess, game: PetriGame | None = None) -> str:
    """Conditions and events are drawn with their base labels; colours follow the base place."""
    system = frozenset(c for c in bp.conditions if game and bp.labels[c] in game.system)
    special = frozenset(c for c in bp.conditions if game and bp.labels[c] in game.special)
    return net_to_dot(bp.net, system, special, labels=dict(bp.labels))


def automaton_to_dot(game: ControlGame) -> str:
    """
    One cluster per process with its local moves; shared actions are drawn in every
    process of their domain. Controllable moves are solid, uncontrollable ones dashed.
    """
    aut = game.automaton
    lines = [f"digraph {_quote(game.name)} {{", "  rankdir=LR;"]
    moves = set()
    for action, table in aut.delta.items():
        for source, target in table.items():
            for p, s, t in zip(aut.alphabet.domain(action), source, target):
                moves.add((p, s, action, t))
    for index, p in enumerate(aut.processes):
        lines.append(f"  subgraph cluster_{index} {{")
        lines.append(f"    label={_quote(p)};")
        for state in sorted(aut.local_states[p]):
            shape = "doublecircle" if state in game.special[p] else "circle"
            lines.append(f"    {_quote(p + '.' + state)} [label={_quote(state)} shape={shape}];")
        start = _quote(f"{p}.__start")
        lines.append(f"    {start} [label=\"\" shape=none width=0 height=0];")
        lines.append(f"    {start} -> {_quote(p + '.' + aut.initial[p])};")
        lines.append("  }")
    for p, s, action, t in sorted(moves):
        style = "solid" if action in game.controllable else "dashed"
        lines.append(f"  {_quote(p + '.' + s)} -> {_quote(p + '.' + t)} [label={_quote(action)} style={style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_dot(obj, game: PetriGame | None = None) -> str:
    if isinstance(obj, PetriGame):
        return game_to_dot(obj)
    if isinstance(obj, PetriNet):
        return net_to_dot(obj)
    if isinstance(obj, ControlGame):
        return automaton_to_dot(obj)
    if isinstance(obj, Strategy):
        return bp_to_dot(obj.bp, obj.game)
    if isinstance(obj, BranchingProcess):
        return bp_to_dot(obj, game)
    raise TypeError(f"cannot draw {type(obj).__name__}")
