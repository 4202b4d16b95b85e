from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

from immutabledict import immutabledict

from models.traces import DistributedAlphabet
from utils.errors import ValidationError


GlobalState = immutabledict


def global_state(states: Mapping[str, str]) -> GlobalState:
    """Canonical hashable global state: process to local state, sorted by process."""
    return immutabledict(sorted(states.items()))


@dataclass(frozen=True)
class LocalProcess:
    """
    A finite local automaton of one process.

    Attributes:
        states (frozenset[str]): Local states.
        initial (str): Initial state.
        transitions (frozenset[tuple[str, str, str]]): ``(state, action, target)`` triples,
            deterministic per ``(state, action)``.
    """
    states: frozenset[str]
    initial: str
    transitions: frozenset

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "transitions", frozenset(tuple(t) for t in self.transitions))
        if self.initial not in self.states:
            raise ValidationError("initial-state", f"initial state {self.initial!r} is not a state")
        seen = {}
        for source, action, target in self.transitions:
            if source not in self.states or target not in self.states:
                raise ValidationError("local-transition", f"{source} -{action}-> {target} uses unknown states")
            if seen.setdefault((source, action), target) != target:
                raise ValidationError("deterministic", f"{action!r} is not deterministic in {source!r}")

    @property
    def actions(self) -> frozenset[str]:
        return frozenset(action for _, action, _ in self.transitions)


@dataclass(frozen=True)
class AsyncAutomaton:
    """
    A deterministic asynchronous automaton.

    ``delta[a]`` maps a tuple of local states of the processes in ``dom(a)``, ordered by
    sorted process id, to the successor tuple. Missing entries mean undefined.

    Attributes:
        alphabet (DistributedAlphabet): Actions and their domains.
        local_states (immutabledict[str, frozenset[str]]): S_p per process.
        initial (immutabledict[str, str]): Initial local state per process.
        delta (immutabledict[str, immutabledict[tuple, tuple]]): Sparse transition tables.

    Raises:
        ValidationError: When a table entry touches states outside ``S_p`` or has the wrong width.
    """
    alphabet: DistributedAlphabet
    local_states: immutabledict
    initial: immutabledict
    delta: immutabledict

    def __post_init__(self):
        object.__setattr__(self, "local_states", immutabledict(
            sorted((p, frozenset(states)) for p, states in dict(self.local_states).items())
        ))
        object.__setattr__(self, "initial", global_state(dict(self.initial)))
        tables = {}
        for action in sorted(self.alphabet.actions):
            entries = dict(dict(self.delta).get(action, {}))
            tables[action] = immutabledict(sorted((tuple(k), tuple(v)) for k, v in entries.items()))
        unknown = set(dict(self.delta)) - self.alphabet.actions
        if unknown:
            raise ValidationError("delta-action", f"delta mentions actions outside the alphabet: {sorted(unknown)}")
        object.__setattr__(self, "delta", immutabledict(tables))

        processes = set(self.local_states)
        if set(self.alphabet.processes) - processes:
            raise ValidationError("processes", f"alphabet uses processes without states: {sorted(set(self.alphabet.processes) - processes)}")
        if set(self.initial) != processes:
            raise ValidationError("initial-state", "every process needs exactly one initial state")
        for process, state in self.initial.items():
            if state not in self.local_states[process]:
                raise ValidationError("initial-state", f"{state!r} is not a state of {process!r}")
        for action, table in self.delta.items():
            dom = self.alphabet.domain(action)
            for source, target in table.items():
                if len(source) != len(dom) or len(target) != len(dom):
                    raise ValidationError("delta-domain", f"delta({action}) entry {source} does not match dom {dom}")
                for process, s, t in zip(dom, source, target):
                    if s not in self.local_states[process] or t not in self.local_states[process]:
                        raise ValidationError("delta-domain", f"delta({action}) uses unknown states of {process!r}")

    @property
    def processes(self) -> tuple[str, ...]:
        return tuple(self.local_states)

    @cached_property
    def outgoing(self) -> immutabledict:
        """Per ``(process, state)`` the actions with some defined entry from that state (en(s))."""
        table = {}
        for action, entries in self.delta.items():
            dom = self.alphabet.domain(action)
            for source in entries:
                for process, state in zip(dom, source):
                    table.setdefault((process, state), set()).add(action)
        return immutabledict({key: frozenset(value) for key, value in table.items()})
