from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Mapping

from immutabledict import immutabledict

from utils.errors import UnknownAction, ValidationError


@dataclass(frozen=True)
class DistributedAlphabet:
    """
    Actions together with the processes that synchronise on them.

    Two actions are dependent iff their domains intersect; every action depends on itself.
    Action ids are totally ordered by string comparison, which fixes the normal form of
    traces.

    Attributes:
        dom (immutabledict[str, frozenset[str]]): Non-empty process set per action.
    """
    dom: immutabledict

    def __post_init__(self):
        table = {}
        for action, processes in dict(self.dom).items():
            processes = frozenset(processes)
            if not processes:
                raise ValidationError("dom-nonempty", f"action {action!r} has an empty domain")
            table[action] = processes
        object.__setattr__(self, "dom", immutabledict(sorted(table.items())))

    @classmethod
    def of(cls, dom: Mapping[str, object]) -> DistributedAlphabet:
        return cls(immutabledict(dom))

    @property
    def actions(self) -> frozenset[str]:
        return frozenset(self.dom)

    @cached_property
    def processes(self) -> tuple[str, ...]:
        return tuple(sorted(set().union(*self.dom.values()))) if self.dom else ()

    def actions_of(self, process: str) -> frozenset[str]:
        """The actions whose domain contains ``process``."""
        return frozenset(a for a, processes in self.dom.items() if process in processes)

    def domain(self, action: str) -> tuple[str, ...]:
        """Sorted domain of ``action``; the order used for local state tuples."""
        if action not in self.dom:
            raise UnknownAction(action)
        return tuple(sorted(self.dom[action]))

    def depends(self, a: str, b: str) -> bool:
        return not self.dom[a].isdisjoint(self.dom[b])

    def independent(self, a: str, b: str) -> bool:
        return not self.depends(a, b)


@dataclass(frozen=True)
class Trace:
    """
    A Mazurkiewicz trace stored as its lexicographic normal form.

    Build traces with ``utils.traces.normalize``; two traces are equal iff their normal
    forms (and alphabets) are equal.
    """
    alphabet: DistributedAlphabet = field(repr=False)
    word: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return " ".join(self.word) if self.word else "ε"


@dataclass(frozen=True)
class LabelledPoset:
    """
    A finite labelled partial order.

    Attributes:
        elements (frozenset): The carrier set.
        order (frozenset[tuple]): Pairs ``(x, y)`` with ``x <= y``; reflexive and transitive.
        label (immutabledict): Label per element.
    """
    elements: frozenset
    order: frozenset
    label: immutabledict

    def __post_init__(self):
        object.__setattr__(self, "elements", frozenset(self.elements))
        reflexive = {(x, x) for x in self.elements}
        object.__setattr__(self, "order", frozenset(self.order) | reflexive)
        object.__setattr__(self, "label", immutabledict(self.label))
        for x, y in self.order:
            if x != y and (y, x) in self.order:
                raise ValidationError("antisymmetric", f"{x!r} and {y!r} precede each other")
        if set(self.label) != set(self.elements):
            raise ValidationError("total-label", "every element needs exactly one label")

    def leq(self, x: Hashable, y: Hashable) -> bool:
        return (x, y) in self.order

    def maximal(self) -> frozenset:
        return frozenset(x for x in self.elements if not any(x != y and self.leq(x, y) for y in self.elements))

    def linearization(self) -> tuple:
        """The lexicographically least linear extension by label; ties broken by ``repr``."""
        remaining = set(self.elements)
        result = []
        while remaining:
            minimal = [x for x in remaining if not any(y != x and self.leq(y, x) for y in remaining)]
            chosen = min(minimal, key=lambda x: (self.label[x], repr(x)))
            result.append(chosen)
            remaining.remove(chosen)
        return tuple(result)

    def canonical(self) -> tuple[str, ...]:
        return tuple(self.label[x] for x in self.linearization())

    def isomorphic(self, other: LabelledPoset) -> bool:
        """
        Label-preserving order isomorphism via canonical linearizations.

        Complete for posets whose equally labelled elements are comparable, which is
        the case for every poset built from a trace or a causal past of a safe net.
        """
        if len(self.elements) != len(other.elements) or self.canonical() != other.canonical():
            return False
        mine, theirs = self.linearization(), other.linearization()
        return all(
            self.leq(mine[i], mine[j]) == other.leq(theirs[i], theirs[j])
            for i in range(len(mine))
            for j in range(len(mine))
        )
