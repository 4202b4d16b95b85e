from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional

from immutabledict import immutabledict

from models.automata import AsyncAutomaton
from models.nets import PetriNet
from models.traces import Trace
from models.unfolding import BranchingProcess, condition_id, event_id, initial_id
from utils.errors import Undecided, ValidationError
from utils.traces import extend, join, normalize


class Objective(str, Enum):
    REACHABILITY = "reachability"
    SAFETY = "safety"


@dataclass(frozen=True)
class PetriGame:
    """
    A Petri game: a net whose places are split between system and environment.

    Attributes:
        net (PetriNet): Underlying net; the flow must be set-like.
        system (frozenset[str]): System places; all other places belong to the environment.
        special (frozenset[str]): Winning places for reachability, bad places for safety.
        objective (Objective): Reachability or safety.

    Raises:
        ValidationError: When system or special places are not places of the net, or the
            flow carries multiplicities above one.
    """
    net: PetriNet
    system: frozenset[str]
    special: frozenset[str]
    objective: Objective = Objective.REACHABILITY

    def __post_init__(self):
        object.__setattr__(self, "system", frozenset(self.system))
        object.__setattr__(self, "special", frozenset(self.special))
        object.__setattr__(self, "objective", Objective(self.objective))
        if not self.system <= self.net.places:
            raise ValidationError("system-places", f"unknown system places {sorted(self.system - self.net.places)}")
        if not self.special <= self.net.places:
            raise ValidationError("special-places", f"unknown special places {sorted(self.special - self.net.places)}")
        if not self.net.is_set_like():
            raise ValidationError("set-like", "Petri games need arcs of multiplicity one")

    @property
    def environment(self) -> frozenset[str]:
        return self.net.places - self.system

    @property
    def name(self) -> str:
        return self.net.name


@dataclass(frozen=True)
class ControlGame:
    """
    A control game over an asynchronous automaton.

    Attributes:
        automaton (AsyncAutomaton): The plant.
        controllable (frozenset[str]): Actions the controller may allow; all others are uncontrollable.
        special (immutabledict[str, frozenset[str]]): Winning or bad local states per process.
        objective (Objective): Reachability or safety.
        name (str): Free-form name.
    """
    automaton: AsyncAutomaton
    controllable: frozenset[str]
    special: immutabledict = field(default_factory=immutabledict)
    objective: Objective = Objective.SAFETY
    name: str = field(default="game", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "controllable", frozenset(self.controllable))
        object.__setattr__(self, "objective", Objective(self.objective))
        special = {p: frozenset(dict(self.special).get(p, ())) for p in self.automaton.processes}
        object.__setattr__(self, "special", immutabledict(special))
        if not self.controllable <= self.automaton.alphabet.actions:
            raise ValidationError("controllable", f"unknown actions {sorted(self.controllable - self.automaton.alphabet.actions)}")
        for process, states in dict(self.special).items():
            if process not in self.automaton.local_states:
                raise ValidationError("special-states", f"unknown process {process!r}")
            if not states <= self.automaton.local_states[process]:
                raise ValidationError("special-states", f"unknown states of {process!r}: {sorted(states - self.automaton.local_states[process])}")

    @property
    def alphabet(self):
        return self.automaton.alphabet

    @property
    def uncontrollable(self) -> frozenset[str]:
        return self.automaton.alphabet.actions - self.controllable

    @property
    def processes(self) -> tuple[str, ...]:
        return self.automaton.processes


### STRATEGY RULES ###


class BranchingRule:
    """Tokens are conditions of an explicit branching process."""

    finite = True

    def __init__(self, bp: BranchingProcess, decision: Optional[Mapping[str, frozenset]] = None):
        self.bp = bp
        self.decision = decision
        self.index = {}
        for event in bp.events:
            self.index[(bp.labels[event], bp.net.pre[event].support)] = event

    def initial(self, place: str, index: int):
        return initial_id(place, index)

    def allowed(self, place: str, memory) -> frozenset:
        if self.decision is not None and memory in self.decision:
            return self.decision[memory]
        return self.bp.outgoing_labels(memory)

    def fire(self, transition: str, tokens: list, post: Iterable[str]) -> Optional[dict]:
        event = self.index.get((transition, frozenset(memory for _, memory in tokens)))
        if event is None:
            return None
        return {self.bp.labels[c]: c for c in self.bp.net.post[event].support}

    def truncated(self, memory) -> bool:
        return self.bp.on_frontier(memory)


@dataclass(frozen=True)
class Causal:
    """A token carrying its full causal past: ``(event id, label, predecessor ids)`` triples."""
    condition: str
    producer: Optional[str]
    past: frozenset


def canonical_past(past: frozenset) -> tuple[str, ...]:
    """The lexicographically least label sequence of a causal past."""
    remaining = {eid: (label, preds) for eid, label, preds in past}
    done = set()
    result = []
    while remaining:
        ready = [eid for eid, (_, preds) in remaining.items() if preds <= done]
        chosen = min(ready, key=lambda eid: (remaining[eid][0], eid))
        result.append(remaining.pop(chosen)[0])
        done.add(chosen)
    return tuple(result)


class HistoryPolicy:
    """
    Decisions keyed on the canonical causal past of a system place.

    Attributes:
        decisions (immutabledict): ``(place, label sequence)`` to the allowed transitions.
        default (frozenset): Decision for pasts without an entry.
    """

    finite = False

    def __init__(self, decisions: Mapping[tuple, Iterable[str]], default: Iterable[str] = ()):
        self.decisions = immutabledict({(p, tuple(k)): frozenset(v) for (p, k), v in decisions.items()})
        self.default = frozenset(default)
        self._keys = {}

    def initial(self, place: str, index: int) -> Causal:
        return Causal(initial_id(place, index), None, frozenset())

    def key(self, memory: Causal) -> tuple[str, ...]:
        if memory.past not in self._keys:
            self._keys[memory.past] = canonical_past(memory.past)
        return self._keys[memory.past]

    def allowed(self, place: str, memory: Causal) -> frozenset:
        return self.decisions.get((place, self.key(memory)), self.default)

    def fire(self, transition: str, tokens: list, post: Iterable[str]) -> dict:
        eid = event_id(transition, [memory.condition for _, memory in tokens])
        preds = frozenset(memory.producer for _, memory in tokens if memory.producer is not None)
        past = frozenset().union(*(memory.past for _, memory in tokens)) | {(eid, transition, preds)}
        return {place: Causal(condition_id(eid, place), eid, past) for place in post}

    def truncated(self, memory) -> bool:
        return False



class MemoryPolicy:
    """
    Decisions keyed on the last ``k`` labels of a token's causal memory.

    The memory of a produced token is the concatenation of the consumed memories (in
    place order) followed by the fired transition, cut to its last ``k`` labels.
    Without a ``default`` a missing key raises ``Undecided`` so that a solver can branch.
    """

    finite = True

    def __init__(self, k: int, table: Optional[Mapping[tuple, Iterable[str]]] = None, default: Optional[Iterable[str]] = None):
        self.k = k
        self.table = {(p, tuple(m)): frozenset(v) for (p, m), v in (table or {}).items()}
        self.default = None if default is None else frozenset(default)

    def initial(self, place: str, index: int) -> tuple:
        return ()

    def allowed(self, place: str, memory: tuple) -> frozenset:
        key = (place, memory)
        if key in self.table:
            return self.table[key]
        if self.default is not None:
            return self.default
        raise Undecided(key)

    def fire(self, transition: str, tokens: list, post: Iterable[str]) -> dict:
        joined = tuple(label for _, memory in tokens for label in memory) + (transition,)
        memory = joined[-self.k:] if self.k else ()
        return {place: memory for place in post}

    def truncated(self, memory) -> bool:
        return False



@dataclass(frozen=True)
class Strategy:
    """
    A strategy for a Petri game.

    Attributes:
        game (PetriGame): The game.
        bp (BranchingProcess): The branching process of the strategy, possibly a
            depth-bounded prefix.
        decision (immutabledict[str, frozenset[str]]): Allowed base transitions per system
            condition of ``bp``.
        rule: Optional intensional description (a strategy rule) the prefix was built
            from; exploration uses it beyond the prefix.
    """
    game: PetriGame
    bp: BranchingProcess
    decision: immutabledict = field(default_factory=immutabledict)
    rule: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "decision", immutabledict({c: frozenset(v) for c, v in dict(self.decision).items()}))
        for condition, allowed in self.decision.items():
            place = self.bp.labels.get(condition)
            if place is None:
                raise ValidationError("decision-node", f"unknown condition {condition!r}")
            stray = allowed - self.game.net.postset(place)
            if stray:
                raise ValidationError("decision-postset", f"{condition}: {sorted(stray)} not in post({place})")

    @classmethod
    def from_bp(cls, game: PetriGame, bp: BranchingProcess) -> Strategy:
        """Read decisions off the events actually present below each system condition."""
        decision = {c: bp.outgoing_labels(c) for c in bp.conditions if bp.labels[c] in game.system}
        return cls(game, bp, decision)

    @cached_property
    def strategy_rule(self):
        return self.rule if self.rule is not None else BranchingRule(self.bp, self.decision)


### CONTROLLERS ###


LONG = "<long>"


class Controller:
    """
    Contract shared by controllers: per-process memory advanced on every action.

    ``advance(a, memories)`` receives the memories of dom(a) in sorted process order
    and returns the new ones in the same order; ``allowed(p, state, memory)`` returns
    the controllable actions the local controller of ``p`` allows.
    """

    finite = False

    def __init__(self, game: ControlGame):
        self.game = game

    def initial_memory(self, process: str):
        return ()

    def advance(self, action: str, memories: tuple) -> tuple:
        raise NotImplementedError

    def allowed(self, process: str, state: str, memory) -> frozenset:
        raise NotImplementedError

    def truncated(self, memory) -> bool:
        """True when the memory lies beyond what the controller was built to decide."""
        return False


class _ViewController(Controller):
    view_cap: Optional[int] = None

    def advance(self, action: str, memories: tuple) -> tuple:
        if any(memory == LONG for memory in memories):
            return (LONG,) * len(memories)
        alphabet = self.game.alphabet
        view = extend(join(*(Trace(alphabet, memory) for memory in memories)), action).word
        if self.view_cap is not None and len(view) > self.view_cap:
            view = LONG
        return (view,) * len(memories)


class TableController(_ViewController):
    """
    Local controllers given as tables over canonical local views.

    Attributes:
        table (immutabledict): ``(process, view normal form)`` to allowed actions.
        default (frozenset): Decision for views without an entry, and for views longer
            than ``view_cap``.
        view_cap (int, optional): Views above this length are not distinguished.

    Raises:
        ValidationError: When an entry allows an uncontrollable action or one outside the process alphabet.
    """

    def __init__(
        self,
        game: ControlGame,
        table: Mapping[tuple, Iterable[str]],
        default: Iterable[str] = (),
        view_cap: Optional[int] = None,
    ):
        super().__init__(game)
        alphabet = game.alphabet
        normalized = {}
        for (process, word), allowed in table.items():
            allowed = frozenset(allowed)
            stray = allowed - (game.controllable & alphabet.actions_of(process))
            if stray:
                raise ValidationError("controller-actions", f"{process} may not allow {sorted(stray)}")
            normalized[(process, normalize(alphabet, word).word)] = allowed
        self.table = immutabledict(normalized)
        self.default = frozenset(default)
        self.view_cap = view_cap
        self.finite = view_cap is not None

    def allowed(self, process: str, state: str, memory) -> frozenset:
        if memory == LONG:
            return self.default & self.game.alphabet.actions_of(process)
        return self.table.get((process, memory), self.default & self.game.alphabet.actions_of(process))


class FunctionController(_ViewController):
    """Local controllers given by a callable ``f(process, view) -> actions``."""

    def __init__(self, game: ControlGame, function: Callable[[str, Trace], Iterable[str]]):
        super().__init__(game)
        self.function = function

    def allowed(self, process: str, state: str, memory) -> frozenset:
        return frozenset(self.function(process, Trace(self.game.alphabet, memory)))


class MemoryController(Controller):
    """
    Local controllers keyed on ``(process, local state, last k actions of the causal memory)``.

    On action ``a`` every process of dom(a) takes the concatenation of the memories of
    dom(a), in sorted process order, followed by ``a``, cut to its last ``k`` actions.
    Without a ``default`` a missing key raises ``Undecided`` unless the state offers no
    controllable action.
    """

    finite = True

    def __init__(
        self,
        game: ControlGame,
        k: int,
        table: Optional[Mapping[tuple, Iterable[str]]] = None,
        default: Optional[Iterable[str]] = None,
    ):
        super().__init__(game)
        self.k = k
        self.table = {(p, s, tuple(m)): frozenset(v) for (p, s, m), v in (table or {}).items()}
        self.default = None if default is None else frozenset(default)

    def advance(self, action: str, memories: tuple) -> tuple:
        joined = tuple(a for memory in memories for a in memory) + (action,)
        memory = joined[-self.k:] if self.k else ()
        return (memory,) * len(memories)

    def options(self, process: str, state: str) -> frozenset:
        return self.game.automaton.outgoing.get((process, state), frozenset()) & self.game.controllable

    def allowed(self, process: str, state: str, memory) -> frozenset:
        key = (process, state, memory)
        if key in self.table:
            return self.table[key]
        if self.default is not None:
            return self.default & self.options(process, state)
        if not self.options(process, state):
            return frozenset()
        raise Undecided(key)
