from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx
from immutabledict import immutabledict

from models.nets import PetriNet
from utils.errors import ValidationError


@dataclass(frozen=True)
class SliceDistribution:
    """
    A partition of a net into slices, one per initial token.

    Each slice is a subnet of ``base``: its places are a block of the partition, its
    transitions are every base transition touching the block and its flow is the
    restriction of the base flow. Slices are named ``s1 .. sk`` in the order of their
    sorted place sets.

    Attributes:
        base (PetriNet): The distributed net.
        slices (tuple[PetriNet, ...]): The slices; ``name`` of each is its member id.
    """
    base: PetriNet
    slices: tuple

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        names = [s.name for s in self.slices]
        if len(set(names)) != len(names):
            raise ValidationError("member-names", f"slice names are not unique: {names}")

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.slices)

    @cached_property
    def _by_name(self) -> dict:
        return {s.name: s for s in self.slices}

    def member(self, name: str) -> PetriNet:
        return self._by_name[name]

    def places_of(self, name: str) -> frozenset[str]:
        return self._by_name[name].places

    def transitions_of(self, name: str) -> frozenset[str]:
        return self._by_name[name].transitions

    @cached_property
    def member_of(self) -> immutabledict:
        """Place to the slice holding it."""
        return immutabledict({p: s.name for s in self.slices for p in sorted(s.places)})

    @property
    def composition(self) -> PetriNet:
        """The parallel composition of a slice distribution is the base net itself."""
        return self.base

    @cached_property
    def pi(self) -> immutabledict:
        nodes = sorted(self.base.places | self.base.transitions)
        return immutabledict({node: node for node in nodes})


@dataclass(frozen=True)
class SingularNet:
    """
    A one-token net labelled into a base net.

    Attributes:
        net (PetriNet): The member net; every transition has one place before and one after.
        pi (immutabledict[str, str]): Node of ``net`` to node of the base net.
    """
    net: PetriNet
    pi: immutabledict

    def __post_init__(self):
        object.__setattr__(self, "pi", immutabledict(sorted(dict(self.pi).items())))

    @property
    def name(self) -> str:
        return self.net.name


@dataclass(frozen=True)
class SingularNetDistribution:
    """
    A compatible family of singular nets together with its composition.

    Places of different members are disjoint; transitions may be shared and then carry
    the same label in every member. ``composition`` is the union of the members and ``pi``
    labels its nodes in ``base``.

    Attributes:
        base (PetriNet): The distributed net.
        nets (tuple[SingularNet, ...]): The family; ``members`` lists their names.
        composition (PetriNet): Union of the member nets.
        pi (immutabledict[str, str]): Union of the member labellings.
    """
    base: PetriNet
    nets: tuple
    composition: PetriNet = field(compare=False)
    pi: immutabledict = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nets", tuple(self.nets))
        object.__setattr__(self, "pi", immutabledict(sorted(dict(self.pi).items())))

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.nets)

    @cached_property
    def _by_name(self) -> dict:
        return {m.name: m for m in self.nets}

    def member(self, name: str) -> SingularNet:
        return self._by_name[name]

    def places_of(self, name: str) -> frozenset[str]:
        return self._by_name[name].net.places

    def transitions_of(self, name: str) -> frozenset[str]:
        return self._by_name[name].net.transitions

    @cached_property
    def member_of(self) -> immutabledict:
        return immutabledict({p: m.name for m in self.nets for p in sorted(m.net.places)})


@dataclass(frozen=True)
class CommunicationGraph:
    """
    Undirected graph over distribution members with an edge per shared transition.

    Attributes:
        vertices (tuple[str, ...]): Member or process ids.
        edges (frozenset[frozenset[str]]): Unordered pairs; self-loops are never stored.
    """
    vertices: tuple
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices)))
        object.__setattr__(self, "edges", frozenset(frozenset(e) for e in self.edges if len(frozenset(e)) == 2))

    @cached_property
    def is_acyclic(self) -> bool:
        components = nx.utils.UnionFind(self.vertices)
        for u, v in sorted(tuple(sorted(e)) for e in self.edges):
            if components[u] == components[v]:
                return False
            components.union(u, v)
        return True

    def graph(self) -> nx.Graph:
        result = nx.Graph()
        result.add_nodes_from(self.vertices)
        result.add_edges_from(tuple(e) for e in self.edges)
        return result
