"""
Textual game files.

Every file is a YAML document with a ``kind`` section. Identifiers are separated by
blanks inside a section, so they may hold any character but white space. Files are
composed with PyYAML's ``BaseLoader``: every scalar stays a string and keeps its
position for error messages.

Kinds: ``petri_net``, ``petri_game``, ``control_game``, ``strategy``, ``controller``,
``distribution`` and ``snd``. Strategies, controllers and distributions refer to a game
or net given by the caller.
"""
from __future__ import annotations

import logging
from typing import Optional

import yaml
from immutabledict import immutabledict

from models.automata import AsyncAutomaton
from models.distribution import SingularNet, SingularNetDistribution, SliceDistribution
from models.games import (
    ControlGame, HistoryPolicy, MemoryController, MemoryPolicy, Objective, PetriGame, Strategy, TableController,
)
from models.nets import PetriNet
from models.traces import DistributedAlphabet
from utils.distribution import compose_snd, distribution_from_blocks, slice_subnet
from utils.errors import ParseError
from utils.games import tabulate_strategy

KINDS = ("petri_net", "petri_game", "control_game", "strategy", "controller", "distribution", "snd")

SECTIONS = {
    "petri_net": {"kind", "name", "places", "transitions", "flow", "init"},
    "petri_game": {"kind", "name", "places", "transitions", "flow", "init", "system", "special", "objective"},
    "control_game": {"kind", "name", "objective", "processes", "init", "actions", "controllable", "delta", "special"},
    "strategy": {"kind", "game", "policy", "k", "default", "decisions"},
    "controller": {"kind", "game", "policy", "k", "view_cap", "default", "decisions"},
    "distribution": {"kind", "net", "slices"},
    "snd": {"kind", "name", "members", "labels", "flow", "init"},
}


class _Reader:
    """Sections of one composed document, with positioned errors."""

    def __init__(self, text: str, path: Optional[str] = None):
        self.path = path
        try:
            root = yaml.compose(text, Loader=yaml.BaseLoader)
        except yaml.MarkedYAMLError as error:
            mark = error.problem_mark or error.context_mark
            raise ParseError(error.problem or "malformed document", mark.line + 1, mark.column + 1, path) from error
        if not isinstance(root, yaml.MappingNode):
            raise ParseError("a game file is a mapping of sections", 1, 1, path)
        self.root = root
        self.sections = {}
        for key, value in root.value:
            if key.value in self.sections:
                raise self.error(key, f"duplicate section {key.value!r}")
            self.sections[key.value] = (key, value)

    def error(self, node: yaml.Node, message: str) -> ParseError:
        return ParseError(message, node.start_mark.line + 1, node.start_mark.column + 1, self.path)

    def check_sections(self, kind: str) -> None:
        for name, (key, _) in self.sections.items():
            if name not in SECTIONS[kind]:
                raise self.error(key, f"unknown section {name!r} for kind {kind}")

    def node(self, name: str, required: bool = True) -> Optional[yaml.Node]:
        if name not in self.sections:
            if required:
                raise ParseError(f"missing section {name!r}", self.root.end_mark.line + 1, 1, self.path)
            return None
        return self.sections[name][1]

    def scalar(self, node: yaml.Node) -> str:
        if not isinstance(node, yaml.ScalarNode):
            raise self.error(node, "expected a line of identifiers")
        return node.value

    def text(self, name: str, default: Optional[str] = None) -> Optional[str]:
        node = self.node(name, required=default is None)
        return default if node is None else self.scalar(node).strip()

    def words(self, name: str, required: bool = True) -> Optional[list[str]]:
        node = self.node(name, required=required)
        return None if node is None else self.scalar(node).split()

    def mapping(self, name: str, required: bool = True) -> list[tuple[str, yaml.Node]]:
        node = self.node(name, required=required)
        if node is None:
            return []
        if not isinstance(node, yaml.MappingNode):
            if isinstance(node, yaml.ScalarNode) and not node.value.strip():
                return []
            raise self.error(node, f"section {name!r} must map names to values")
        return [(self.scalar(key), value) for key, value in node.value]

    def rows(self, name: str, required: bool = True) -> list[tuple[yaml.Node, list[str]]]:
        """``a | b c | d`` lines of a sequence section, split into blank-separated columns."""
        node = self.node(name, required=required)
        if node is None:
            return []
        if isinstance(node, yaml.ScalarNode) and not node.value.strip():
            return []
        if not isinstance(node, yaml.SequenceNode):
            raise self.error(node, f"section {name!r} must be a list of rows")
        return [(item, [column.split() for column in self.scalar(item).split("|")]) for item in node.value]

    def arrow(self, node: yaml.Node) -> tuple[list[str], list[str]]:
        line = self.scalar(node)
        if line.count("->") != 1:
            raise self.error(node, f"expected 'sources -> targets', got {line!r}")
        left, right = line.split("->")
        return left.split(), right.split()


def _net(reader: _Reader, name: str) -> PetriNet:
    places = reader.words("places")
    transitions = reader.words("transitions")
    arcs = []
    for transition, node in reader.mapping("flow", required=False):
        if transition not in transitions:
            raise reader.error(node, f"flow of undeclared transition {transition!r}")
        sources, targets = reader.arrow(node)
        arcs += [(place, transition) for place in sources]
        arcs += [(transition, place) for place in targets]
    initial = reader.words("init", required=False) or []
    for place in initial:
        if place not in places:
            raise reader.error(reader.node("init"), f"initial token on undeclared place {place!r}")
    return PetriNet.build(places, transitions, arcs, initial, name=name)


def _objective(reader: _Reader, default: Objective) -> Objective:
    value = reader.text("objective", default.value)
    try:
        return Objective(value)
    except ValueError:
        raise reader.error(reader.node("objective"), f"unknown objective {value!r}")


def _control_game(reader: _Reader) -> ControlGame:
    states = {process: reader.scalar(node).split() for process, node in reader.mapping("processes")}
    initial = {}
    for process, node in reader.mapping("init"):
        if process not in states:
            raise reader.error(node, f"initial state of undeclared process {process!r}")
        initial[process] = reader.scalar(node).strip()
    dom = {}
    for action, node in reader.mapping("actions"):
        dom[action] = reader.scalar(node).split()
        stray = set(dom[action]) - set(states)
        if stray:
            raise reader.error(node, f"action {action!r} uses undeclared processes {sorted(stray)}")
    alphabet = DistributedAlphabet.of(dom)
    delta = {}
    for action, node in reader.mapping("delta", required=False):
        if action not in dom:
            raise reader.error(node, f"delta of undeclared action {action!r}")
        entries = node.value if isinstance(node, yaml.SequenceNode) else [node]
        table = {}
        for entry in entries:
            source, target = reader.arrow(entry)
            width = len(alphabet.domain(action))
            if len(source) != width or len(target) != width:
                raise reader.error(entry, f"delta({action}) needs {width} states on each side")
            table[tuple(source)] = tuple(target)
        delta[action] = table
    special = {process: reader.scalar(node).split() for process, node in reader.mapping("special", required=False)}
    automaton = AsyncAutomaton(alphabet=alphabet, local_states=states, initial=initial, delta=delta)
    return ControlGame(
        automaton,
        controllable=frozenset(reader.words("controllable", required=False) or ()),
        special=immutabledict(special),
        objective=_objective(reader, Objective.SAFETY),
        name=reader.text("name", "game"),
    )


def _default(reader: _Reader) -> Optional[list[str]]:
    return reader.words("default", required=False)


def _strategy(reader: _Reader):
    policy = reader.text("policy", "history")
    rows = reader.rows("decisions", required=False)
    if policy == "history":
        decisions = {}
        for node, columns in rows:
            if len(columns) != 3 or len(columns[0]) != 1:
                raise reader.error(node, "expected 'place | past | allowed'")
            decisions[(columns[0][0], tuple(columns[1]))] = columns[2]
        return HistoryPolicy(decisions, _default(reader) or ())
    if policy == "memory":
        table = {}
        for node, columns in rows:
            if len(columns) != 3 or len(columns[0]) != 1:
                raise reader.error(node, "expected 'place | memory | allowed'")
            table[(columns[0][0], tuple(columns[1]))] = columns[2]
        return MemoryPolicy(int(reader.text("k", "0")), table, _default(reader))
    raise reader.error(reader.node("policy"), f"unknown strategy policy {policy!r}")


def _controller(reader: _Reader, game: ControlGame):
    policy = reader.text("policy", "table")
    rows = reader.rows("decisions", required=False)
    if policy == "table":
        table = {}
        for node, columns in rows:
            if len(columns) != 3 or len(columns[0]) != 1:
                raise reader.error(node, "expected 'process | view | allowed'")
            table[(columns[0][0], tuple(columns[1]))] = columns[2]
        view_cap = reader.text("view_cap", "")
        return TableController(game, table, _default(reader) or (), int(view_cap) if view_cap else None)
    if policy == "memory":
        table = {}
        for node, columns in rows:
            if len(columns) != 4 or len(columns[0]) != 1 or len(columns[1]) != 1:
                raise reader.error(node, "expected 'process | state | memory | allowed'")
            table[(columns[0][0], columns[1][0], tuple(columns[2]))] = columns[3]
        return MemoryController(game, int(reader.text("k", "0")), table, _default(reader))
    raise reader.error(reader.node("policy"), f"unknown controller policy {policy!r}")


def _snd(reader: _Reader, base: PetriNet) -> SingularNetDistribution:
    labels = {node: reader.scalar(value).strip() for node, value in reader.mapping("labels")}
    members = [(name, reader.scalar(value).split()) for name, value in reader.mapping("members")]
    places = [place for _, owned in members for place in owned]
    transitions = sorted(set(labels) - set(places))
    arcs = []
    for transition, node in reader.mapping("flow", required=False):
        sources, targets = reader.arrow(node)
        arcs += [(place, transition) for place in sources]
        arcs += [(transition, place) for place in targets]
    union = PetriNet.build(places, transitions, arcs, reader.words("init", required=False) or [])
    nets = []
    for name, owned in members:
        subnet = slice_subnet(union, owned, name)
        nets.append(SingularNet(subnet, {node: labels[node] for node in subnet.places | subnet.transitions}))
    composition, pi = compose_snd(nets, name=reader.text("name", f"{base.name}.snd"))
    return SingularNetDistribution(base, nets, composition, pi)


def parse(
    text: str,
    path: Optional[str] = None,
    game: Optional[ControlGame] = None,
    net: Optional[PetriNet] = None,
):
    """
    Parse one game file.

    Arguments:
        text: The document.
        path: File name used in error messages.
        game: The control game a controller file belongs to.
        net: The net a distribution or SND file belongs to.

    Returns:
        The object the ``kind`` section names: PetriNet, PetriGame, ControlGame, a
        strategy policy, a controller, SliceDistribution or SingularNetDistribution.

    Raises:
        ParseError: When the document is malformed, with its line and column.
        ValidationError: When the parsed object violates an invariant.
    """
    reader = _Reader(text, path)
    kind = reader.text("kind")
    if kind not in KINDS:
        raise reader.error(reader.node("kind"), f"unknown kind {kind!r}")
    reader.check_sections(kind)
    if kind == "petri_net":
        return _net(reader, reader.text("name", "net"))
    if kind == "petri_game":
        base = _net(reader, reader.text("name", "game"))
        return PetriGame(
            base,
            system=frozenset(reader.words("system", required=False) or ()),
            special=frozenset(reader.words("special", required=False) or ()),
            objective=_objective(reader, Objective.REACHABILITY),
        )
    if kind == "control_game":
        return _control_game(reader)
    if kind == "strategy":
        return _strategy(reader)
    if kind == "controller":
        if game is None:
            raise reader.error(reader.node("kind"), "a controller file needs the control game it belongs to")
        return _controller(reader, game)
    if net is None:
        raise reader.error(reader.node("kind"), f"a {kind} file needs the net it belongs to")
    if kind == "distribution":
        return distribution_from_blocks(net, [reader.scalar(value).split() for _, value in reader.mapping("slices")])
    return _snd(reader, net)


def load(path: str, game: Optional[ControlGame] = None, net: Optional[PetriNet] = None):
    with open(path, "r", encoding="utf-8") as handle:
        result = parse(handle.read(), path=path, game=game, net=net)
    logging.info(f"Loaded {path} OK")
    return result


### EMIT ###


def _line(items) -> str:
    return " ".join(sorted(items))


def _flow(net: PetriNet) -> dict:
    return {t: f"{' '.join(net.pre[t])} -> {' '.join(net.post[t])}".strip() for t in sorted(net.transitions)}


def _net_sections(net: PetriNet) -> dict:
    return {
        "places": _line(net.places),
        "transitions": _line(net.transitions),
        "flow": _flow(net),
        "init": " ".join(net.initial),
    }


def _row(*columns) -> str:
    return " | ".join(" ".join(column) for column in columns)


def emit(obj, name: Optional[str] = None) -> str:
    """
    Canonical text of a net, game, strategy policy, controller or distribution.

    Strategies are written as the history table of their branching process. Only
    table and memory controllers have a file form; tabulate others first.
    """
    if isinstance(obj, PetriGame):
        doc = {"kind": "petri_game", "name": obj.name, **_net_sections(obj.net)}
        doc.update({"system": _line(obj.system), "special": _line(obj.special), "objective": obj.objective.value})
    elif isinstance(obj, PetriNet):
        doc = {"kind": "petri_net", "name": obj.name, **_net_sections(obj)}
    elif isinstance(obj, ControlGame):
        aut = obj.automaton
        doc = {
            "kind": "control_game",
            "name": obj.name,
            "objective": obj.objective.value,
            "processes": {p: _line(aut.local_states[p]) for p in aut.processes},
            "init": dict(aut.initial),
            "actions": {a: " ".join(aut.alphabet.domain(a)) for a in sorted(aut.alphabet.actions)},
            "controllable": _line(obj.controllable),
            "delta": {
                a: [f"{' '.join(source)} -> {' '.join(target)}" for source, target in sorted(table.items())]
                for a, table in aut.delta.items() if table
            },
            "special": {p: _line(states) for p, states in obj.special.items() if states},
        }
    elif isinstance(obj, Strategy):
        return emit(tabulate_strategy(obj), name=name or obj.game.name)
    elif isinstance(obj, HistoryPolicy):
        doc = {"kind": "strategy", "game": name or "", "policy": "history", "default": _line(obj.default)}
        doc["decisions"] = [_row([p], past, sorted(v)) for (p, past), v in sorted(obj.decisions.items())]
    elif isinstance(obj, MemoryPolicy):
        doc = {"kind": "strategy", "game": name or "", "policy": "memory", "k": str(obj.k)}
        if obj.default is not None:
            doc["default"] = _line(obj.default)
        doc["decisions"] = [_row([p], memory, sorted(v)) for (p, memory), v in sorted(obj.table.items())]
    elif isinstance(obj, TableController):
        doc = {"kind": "controller", "game": obj.game.name, "policy": "table", "default": _line(obj.default)}
        if obj.view_cap is not None:
            doc["view_cap"] = str(obj.view_cap)
        doc["decisions"] = [_row([p], view, sorted(v)) for (p, view), v in sorted(obj.table.items())]
    elif isinstance(obj, MemoryController):
        doc = {"kind": "controller", "game": obj.game.name, "policy": "memory", "k": str(obj.k)}
        if obj.default is not None:
            doc["default"] = _line(obj.default)
        doc["decisions"] = [_row([p], [s], memory, sorted(v)) for (p, s, memory), v in sorted(obj.table.items())]
    elif isinstance(obj, SliceDistribution):
        doc = {"kind": "distribution", "net": obj.base.name, "slices": {m: _line(obj.places_of(m)) for m in obj.members}}
    elif isinstance(obj, SingularNetDistribution):
        composition = obj.composition
        doc = {
            "kind": "snd",
            "name": composition.name,
            "members": {m: _line(obj.places_of(m)) for m in obj.members},
            "labels": dict(obj.pi),
            "flow": _flow(composition),
            "init": " ".join(composition.initial),
        }
    else:
        raise TypeError(f"no file form for {type(obj).__name__}")
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False, allow_unicode=True, width=10_000)


def dump(obj, path: str, name: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(emit(obj, name=name))
    logging.info(f"Wrote {path} OK")
