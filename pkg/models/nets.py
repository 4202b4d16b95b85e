from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping

from immutabledict import immutabledict

from utils.errors import NegativeMarking, ValidationError


def _counts(items: Iterable[str] | Mapping[str, int]) -> immutabledict:
    if isinstance(items, Mapping):
        counter = Counter({key: int(value) for key, value in items.items()})
    else:
        counter = Counter(items)
    for place, count in counter.items():
        if count < 0:
            raise NegativeMarking(f"Negative count {count} for place {place!r}")
    return immutabledict(sorted((place, count) for place, count in counter.items() if count))


@dataclass(frozen=True)
class Marking:
    """
    A finite multiset of places.

    Markings are immutable and hashable so that they can be stored in sets during
    exhaustive exploration. Arithmetic never clamps: subtracting more tokens than a place
    holds raises ``NegativeMarking``.

    Attributes:
        counts (immutabledict): Place id to a strictly positive token count.
    """
    counts: immutabledict = field(default_factory=immutabledict)

    def __post_init__(self):
        if not isinstance(self.counts, immutabledict) or any(v <= 0 for v in self.counts.values()):
            object.__setattr__(self, "counts", _counts(self.counts))

    @classmethod
    def of(cls, items: Iterable[str] | Mapping[str, int] = ()) -> Marking:
        return cls(_counts(items))

    def __add__(self, other: Marking) -> Marking:
        merged = Counter(self.counts)
        merged.update(other.counts)
        return Marking(_counts(merged))

    def __sub__(self, other: Marking) -> Marking:
        if not self.covers(other):
            raise NegativeMarking(f"Cannot remove {other} from {self}")
        merged = Counter(self.counts)
        merged.subtract(other.counts)
        return Marking(_counts(merged))

    def covers(self, other: Marking) -> bool:
        """True iff ``other`` is a sub-multiset of this marking."""
        return all(self.counts.get(place, 0) >= count for place, count in other.counts.items())

    def __getitem__(self, place: str) -> int:
        return self.counts.get(place, 0)

    def __contains__(self, place: object) -> bool:
        return place in self.counts

    def __iter__(self) -> Iterator[str]:
        for place, count in self.counts.items():
            for _ in range(count):
                yield place

    def __len__(self) -> int:
        return sum(self.counts.values())

    @property
    def support(self) -> frozenset[str]:
        return frozenset(self.counts)

    def is_set(self) -> bool:
        return all(count == 1 for count in self.counts.values())

    def __str__(self) -> str:
        parts = [place if count == 1 else f"{count}*{place}" for place, count in self.counts.items()]
        return "{" + ",".join(parts) + "}"


EMPTY = Marking()


@dataclass(frozen=True)
class PetriNet:
    """
    A finite place/transition net with multiset flow and an initial marking.

    The flow relation is stored per transition: ``pre[t]`` is the multiset of places
    consumed by ``t`` and ``post[t]`` the multiset produced. Node identifiers are opaque
    strings and places and transitions must use disjoint identifiers.

    Attributes:
        places (frozenset[str]): Place identifiers.
        transitions (frozenset[str]): Transition identifiers.
        pre (immutabledict[str, Marking]): Consumed multiset per transition.
        post (immutabledict[str, Marking]): Produced multiset per transition.
        initial (Marking): The initial marking ``In``.
        name (str): Free-form name used by file formats and DOT output.

    Raises:
        ValidationError: When identifiers overlap or the flow mentions undeclared nodes.
    """
    places: frozenset[str]
    transitions: frozenset[str]
    pre: immutabledict
    post: immutabledict
    initial: Marking = EMPTY
    name: str = field(default="net", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "places", frozenset(self.places))
        object.__setattr__(self, "transitions", frozenset(self.transitions))
        if not isinstance(self.initial, Marking):
            object.__setattr__(self, "initial", Marking.of(self.initial))
        for attr in ("pre", "post"):
            given = dict(getattr(self, attr))
            table = {
                t: (given.get(t) if isinstance(given.get(t), Marking) else Marking.of(given.get(t, ())))
                for t in sorted(self.transitions)
            }
            unknown = set(given) - self.transitions
            if unknown:
                raise ValidationError("flow-endpoint", f"flow mentions undeclared transitions {sorted(unknown)}")
            object.__setattr__(self, attr, immutabledict(table))

        overlap = self.places & self.transitions
        if overlap:
            raise ValidationError("disjoint-nodes", f"ids used as place and transition: {sorted(overlap)}")
        for t in self.transitions:
            stray = (self.pre[t].support | self.post[t].support) - self.places
            if stray:
                raise ValidationError("flow-endpoint", f"transition {t!r} touches undeclared places {sorted(stray)}")
        stray = self.initial.support - self.places
        if stray:
            raise ValidationError("initial-marking", f"initial marking uses undeclared places {sorted(stray)}")

    @classmethod
    def build(
        cls,
        places: Iterable[str],
        transitions: Iterable[str],
        arcs: Iterable[tuple],
        initial: Iterable[str] | Mapping[str, int] = (),
        name: str = "net",
    ) -> PetriNet:
        """
        Build a net from a list of arcs.

        Arguments:
            places: Place identifiers.
            transitions: Transition identifiers.
            arcs: ``(source, target)`` or ``(source, target, weight)`` tuples; exactly one
                endpoint must be a transition.
            initial: Initial marking as places (repeated for several tokens) or a mapping.
            name: Net name.

        Returns:
            PetriNet: The validated net.
        """
        places = frozenset(places)
        transitions = frozenset(transitions)
        pre = {t: Counter() for t in transitions}
        post = {t: Counter() for t in transitions}
        for arc in arcs:
            source, target, *weight = arc
            weight = weight[0] if weight else 1
            if source in transitions and target in places:
                post[source][target] += weight
            elif source in places and target in transitions:
                pre[target][source] += weight
            else:
                raise ValidationError("flow-endpoint", f"arc {source!r} -> {target!r} does not join a place and a transition")
        return cls(
            places=places,
            transitions=transitions,
            pre={t: Marking.of(c) for t, c in pre.items()},
            post={t: Marking.of(c) for t, c in post.items()},
            initial=Marking.of(initial),
            name=name,
        )

    @cached_property
    def _place_post(self) -> immutabledict:
        table = {p: set() for p in self.places}
        for t in self.transitions:
            for p in self.pre[t].support:
                table[p].add(t)
        return immutabledict({p: frozenset(ts) for p, ts in table.items()})

    @cached_property
    def _place_pre(self) -> immutabledict:
        table = {p: set() for p in self.places}
        for t in self.transitions:
            for p in self.post[t].support:
                table[p].add(t)
        return immutabledict({p: frozenset(ts) for p, ts in table.items()})

    def preset(self, node: str) -> frozenset[str]:
        """The set of nodes with an arc into ``node``."""
        if node in self.transitions:
            return self.pre[node].support
        return self._place_pre[node]

    def postset(self, node: str) -> frozenset[str]:
        """The set of nodes with an arc out of ``node``."""
        if node in self.transitions:
            return self.post[node].support
        return self._place_post[node]

    @property
    def arcs(self) -> tuple[tuple[str, str, int], ...]:
        """All arcs as sorted ``(source, target, weight)`` triples."""
        result = []
        for t in sorted(self.transitions):
            result.extend((p, t, c) for p, c in self.pre[t].counts.items())
            result.extend((t, p, c) for p, c in self.post[t].counts.items())
        return tuple(result)

    def is_set_like(self) -> bool:
        return all(self.pre[t].is_set() and self.post[t].is_set() for t in self.transitions)

    def enabled(self, marking: Marking) -> tuple[str, ...]:
        return tuple(t for t in sorted(self.transitions) if marking.covers(self.pre[t]))
