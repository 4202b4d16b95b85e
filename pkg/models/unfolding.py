from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

from immutabledict import immutabledict

from models.nets import PetriNet


def _digest(*parts: str) -> str:
    return hashlib.blake2b("\x1f".join(parts).encode("utf-8"), digest_size=16).hexdigest()


def event_id(label: str, pre: Iterable[str]) -> str:
    """Hash-canonical id of an event: its label and the sorted ids of its preset."""
    return f"{label}#{_digest(label, *sorted(pre))}"


def condition_id(event: str, place: str) -> str:
    return f"{place}@{event}"


def initial_id(place: str, index: int) -> str:
    return f"{place}#init{index}"


@dataclass(frozen=True)
class BranchingProcess:
    """
    An occurrence net together with its initial homomorphism into a base net.

    Places of ``net`` are conditions, transitions are events. ``labels`` is lambda,
    ``heights`` the length of the longest event chain below a node (initial conditions
    have height 0, an event is one above its highest precondition, a condition inherits
    the height of its producer). Conditions whose height reaches ``depth`` form the
    frontier of a depth-bounded prefix.

    Attributes:
        net (PetriNet): The occurrence net.
        labels (immutabledict[str, str]): lambda, node to base node.
        base (PetriNet): The base net.
        heights (immutabledict[str, int]): Height per node.
        depth (int, optional): Depth bound the prefix was built with.
        memory (immutabledict): Strategy memory attached to conditions by ``materialize``.
    """
    net: PetriNet
    labels: immutabledict
    base: PetriNet = field(compare=False)
    heights: immutabledict = field(default_factory=immutabledict, compare=False)
    depth: Optional[int] = field(default=None, compare=False)
    memory: immutabledict = field(default_factory=immutabledict, compare=False, repr=False)

    @property
    def conditions(self) -> frozenset[str]:
        return self.net.places

    @property
    def events(self) -> frozenset[str]:
        return self.net.transitions

    @property
    def initial(self) -> frozenset[str]:
        return self.net.initial.support

    @cached_property
    def producer(self) -> immutabledict:
        """Condition to the event that produced it (None for initial conditions)."""
        table = {c: None for c in self.net.places}
        for event in self.net.transitions:
            for c in self.net.post[event].support:
                table[c] = event
        return immutabledict(table)

    def consumers(self, condition: str) -> frozenset[str]:
        return self.net.postset(condition)

    def height(self, node: str) -> int:
        return self.heights.get(node, 0)

    def on_frontier(self, condition: str) -> bool:
        return self.depth is not None and self.height(condition) >= self.depth

    def outgoing_labels(self, condition: str) -> frozenset[str]:
        """The base transitions the condition actually takes part in."""
        return frozenset(self.labels[e] for e in self.consumers(condition))
