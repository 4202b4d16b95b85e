import logging
from collections import deque
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence

import networkx as nx
from immutabledict import immutabledict

from models.nets import Marking, PetriNet
from models.traces import LabelledPoset
from models.unfolding import BranchingProcess, condition_id, event_id, initial_id
from models.reports import BranchingReport
from utils.config import resolve
from utils.errors import (
    AmbiguousLabel, BoundExceeded, IdCollision, NotEnabled, NotOneBounded, UnknownNode, ValidationError,
)
from utils.nets import is_one_bounded


class NodeRelation(str, Enum):
    CAUSAL = "causal"
    CONFLICT = "conflict"
    CONCURRENT = "concurrent"


class PrefixBuilder:
    """
    Worklist construction of a depth-bounded branching process.

    Every new condition is matched against the base transitions it feeds; the
    co-relation is maintained incrementally (a new condition is concurrent with the
    co-set of its producer and with its siblings). An optional strategy rule filters
    events and attaches memory to conditions: an event is added iff every system
    condition of its preset allows the label and the rule can fire it.
    """

    def __init__(
        self,
        base: PetriNet,
        depth: int,
        rule=None,
        system: frozenset = frozenset(),
        state_cap: Optional[int] = None,
    ):
        if not base.is_set_like():
            raise ValidationError("set-like", f"net {base.name} has arcs with multiplicity above one")
        self.base = base
        self.depth = depth
        self.rule = rule
        self.system = frozenset(system)
        self.state_cap = resolve(state_cap, "state_cap")
        self.pre = {}
        self.post = {}
        self.labels = {}
        self.heights = {}
        self.memory = {}
        self.co = {}
        self.by_label = {}
        self.worklist = deque()
        self.initial = []

    def _new_condition(self, cid: str, place: str, height: int, memory) -> None:
        if len(self.labels) >= self.state_cap:
            raise BoundExceeded(self.state_cap, "nodes")
        self.labels[cid] = place
        self.heights[cid] = height
        self.co[cid] = set()
        self.by_label.setdefault(place, set()).add(cid)
        if self.rule is not None:
            self.memory[cid] = memory
        self.worklist.append(cid)

    def _seed(self) -> None:
        for place, count in self.base.initial.counts.items():
            for index in range(count):
                cid = initial_id(place, index)
                memory = self.rule.initial(place, index) if self.rule is not None else None
                self._new_condition(cid, place, 0, memory)
                self.initial.append(cid)
        for cid in self.initial:
            self.co[cid] = set(self.initial) - {cid}

    def _cosets(self, chosen: tuple, places: Sequence[str]) -> Iterator[tuple]:
        if not places:
            yield chosen
            return
        candidates = set(self.by_label.get(places[0], ()))
        for c in chosen:
            candidates &= self.co[c]
        for candidate in sorted(candidates):
            yield from self._cosets(chosen + (candidate,), places[1:])

    def _try_add(self, transition: str, preset: tuple) -> None:
        if max(self.heights[c] for c in preset) >= self.depth:
            return
        eid = event_id(transition, preset)
        if eid in self.pre:
            if self.labels[eid] != transition or self.pre[eid] != frozenset(preset):
                raise IdCollision(eid)
            return
        produced = None
        if self.rule is not None:
            tokens = sorted(((self.labels[c], self.memory[c]) for c in preset), key=lambda tok: tok[0])
            for place, memory in tokens:
                if place in self.system and transition not in self.rule.allowed(place, memory):
                    return
            produced = self.rule.fire(transition, tokens, sorted(self.base.post[transition].support))
            if produced is None:
                return
        height = 1 + max(self.heights[c] for c in preset)
        self.pre[eid] = frozenset(preset)
        self.labels[eid] = transition
        self.heights[eid] = height
        coset = set.intersection(*(self.co[c] for c in preset))
        post = []
        for place in sorted(self.base.post[transition].support):
            cid = condition_id(eid, place)
            self._new_condition(cid, place, height, produced[place] if produced is not None else None)
            post.append(cid)
        self.post[eid] = frozenset(post)
        for cid in post:
            self.co[cid] = coset | (set(post) - {cid})
            for other in coset:
                self.co[other].add(cid)

    def build(self) -> BranchingProcess:
        self._seed()
        while self.worklist:
            condition = self.worklist.popleft()
            place = self.labels[condition]
            for transition in sorted(self.base.postset(place)):
                others = sorted(self.base.pre[transition].support - {place})
                for preset in self._cosets((condition,), others):
                    self._try_add(transition, preset)
        conditions = [n for n in self.labels if n not in self.pre]
        net = PetriNet(
            places=frozenset(conditions),
            transitions=frozenset(self.pre),
            pre={e: Marking.of(p) for e, p in self.pre.items()},
            post={e: Marking.of(p) for e, p in self.post.items()},
            initial=Marking.of(self.initial),
            name=f"unfolding({self.base.name})",
        )
        return BranchingProcess(
            net=net,
            labels=immutabledict(self.labels),
            base=self.base,
            heights=immutabledict(self.heights),
            depth=self.depth,
            memory=immutabledict(self.memory),
        )


def unfold(
    base: PetriNet,
    depth: Optional[int] = None,
    safe_only: bool = False,
    state_cap: Optional[int] = None,
) -> BranchingProcess:
    """
    The unfolding of ``base`` up to events of height ``depth``.

    Arguments:
        base (PetriNet): Net with set-like flow.
        depth (int, optional): Height bound; defaults to the configured depth.
        safe_only (bool): Reject bases that are not 1-bounded.
        state_cap (int, optional): Maximum number of nodes.

    Raises:
        NotOneBounded: When ``safe_only`` is set and the base is not 1-bounded.
        BoundExceeded: When the prefix grows beyond ``state_cap`` nodes.
    """
    depth = resolve(depth, "depth")
    if safe_only and not is_one_bounded(base, state_cap=state_cap):
        raise NotOneBounded(f"net {base.name} is not 1-bounded")
    bp = PrefixBuilder(base, depth, state_cap=state_cap).build()
    logging.info(f"Unfolding of {base.name} to depth {depth} built OK ({len(bp.events)} events)")
    return bp


def _check_node(bp: BranchingProcess, node: str) -> None:
    if node not in bp.labels:
        raise UnknownNode(node)


def _down_sets(bp: BranchingProcess) -> dict:
    """Per node, every node below or equal to it."""
    cached = bp.__dict__.get("_down_sets")
    if cached is not None:
        return cached
    table = {}
    for node in sorted(bp.labels, key=lambda n: (bp.height(n), n not in bp.events, n)):
        if node in bp.events:
            below = {node}
            for c in bp.net.pre[node].support:
                below |= table[c]
            table[node] = frozenset(below)
        else:
            producer = bp.producer[node]
            table[node] = (table[producer] if producer is not None else frozenset()) | {node}
    bp.__dict__["_down_sets"] = table
    return table


def past_events(bp: BranchingProcess, node: str) -> frozenset[str]:
    """Events y with y <= node."""
    _check_node(bp, node)
    return frozenset(n for n in _down_sets(bp)[node] if n in bp.events)


def causal_past(bp: BranchingProcess, node: str) -> LabelledPoset:
    """
    past(x) as a labelled poset of events ordered by causality and labelled by lambda.

    Raises:
        UnknownNode: When ``node`` is not in the branching process.
    """
    events = past_events(bp, node)
    table = _down_sets(bp)
    order = {(x, y) for y in events for x in table[y] if x in bp.events}
    return LabelledPoset(
        elements=events,
        order=frozenset(order),
        label=immutabledict({e: bp.labels[e] for e in events}),
    )


def node_relation(bp: BranchingProcess, x: str, y: str) -> NodeRelation:
    """Classify two nodes as causally related, in conflict, or concurrent."""
    _check_node(bp, x)
    _check_node(bp, y)
    table = _down_sets(bp)
    if x in table[y] or y in table[x]:
        return NodeRelation.CAUSAL
    mine = [n for n in table[x] if n in bp.events]
    theirs = [n for n in table[y] if n in bp.events]
    for t1 in mine:
        for t2 in theirs:
            if t1 != t2 and not bp.net.pre[t1].support.isdisjoint(bp.net.pre[t2].support):
                return NodeRelation.CONFLICT
    return NodeRelation.CONCURRENT


def co_relation(bp: BranchingProcess) -> dict:
    """Concurrency between conditions, recomputed from the structure of ``bp``."""
    co = {c: set() for c in bp.conditions}
    initial = set(bp.initial)
    for c in initial:
        co[c] = initial - {c}
    for event in sorted(bp.events, key=lambda e: (bp.height(e), e)):
        pre = bp.net.pre[event].support
        coset = set.intersection(*(co[c] for c in pre)) if pre else set()
        post = bp.net.post[event].support
        for c in post:
            co[c] = coset | (set(post) - {c})
            for other in coset:
                co[other].add(c)
    return co


def cosets(bp: BranchingProcess, places: Iterable[str], co: Optional[dict] = None) -> Iterator[tuple]:
    """Pairwise concurrent condition tuples labelled, in order, by ``places``."""
    co = co_relation(bp) if co is None else co
    places = sorted(places)
    by_label = {}
    for c in bp.conditions:
        by_label.setdefault(bp.labels[c], []).append(c)

    def extend(chosen: tuple, rest: list):
        if not rest:
            yield chosen
            return
        for candidate in sorted(by_label.get(rest[0], ())):
            if all(candidate in co[c] for c in chosen):
                yield from extend(chosen + (candidate,), rest[1:])

    yield from extend((), places)


def validate_branching_process(bp: BranchingProcess) -> BranchingReport:
    """
    Check the occurrence-net clauses, the homomorphism clauses and injectivity.

    Returns:
        BranchingReport: Violations by clause name; never raises for a violation.
    """
    report = BranchingReport(events=len(bp.events), conditions=len(bp.conditions))
    net, base = bp.net, bp.base

    graph = nx.DiGraph()
    graph.add_nodes_from(bp.labels)
    producers = {c: [] for c in bp.conditions}
    for event in net.transitions:
        if not (net.pre[event].is_set() and net.post[event].is_set()):
            report.add("occurrence-set-flow", f"event {event} has a multiset pre or post")
        for c in net.pre[event].support:
            graph.add_edge(c, event)
        for c in net.post[event].support:
            graph.add_edge(event, c)
            producers[c].append(event)
    for c, made in producers.items():
        if len(made) > 1:
            report.add("occurrence-single-cause", f"condition {c} has {len(made)} producers")
    initial_expected = {c for c, made in producers.items() if not made}
    if set(net.initial) != initial_expected or not net.initial.is_set():
        report.add("occurrence-initial", "initial marking differs from the conditions without producer")
    if not nx.is_directed_acyclic_graph(graph):
        report.add("occurrence-well-founded", "the causality relation has a cycle")
        return report

    ancestors = {e: {n for n in nx.ancestors(graph, e) if n in net.transitions} | {e} for e in net.transitions}
    for event, past in sorted(ancestors.items()):
        clash = False
        for t1 in past:
            for t2 in past:
                if t1 < t2 and not net.pre[t1].support.isdisjoint(net.pre[t2].support):
                    clash = True
        if clash:
            report.add("occurrence-no-self-conflict", f"event {event} is in self-conflict")

    for node, label in bp.labels.items():
        if node in net.places and label not in base.places:
            report.add("homomorphism-types", f"condition {node} maps to non-place {label}")
        if node in net.transitions and label not in base.transitions:
            report.add("homomorphism-types", f"event {node} maps to non-transition {label}")
    if report.violations:
        return report
    for event in sorted(net.transitions):
        label = bp.labels[event]
        if Marking.of(bp.labels[c] for c in net.pre[event]) != base.pre[label]:
            report.add("homomorphism-pre", f"labels of pre({event}) != pre({label})")
        if Marking.of(bp.labels[c] for c in net.post[event]) != base.post[label]:
            report.add("homomorphism-post", f"labels of post({event}) != post({label})")
    if Marking.of(bp.labels[c] for c in net.initial) != base.initial:
        report.add("homomorphism-initial", "labels of the initial cut differ from the initial marking of the base")

    seen = {}
    for event in sorted(net.transitions):
        key = (bp.labels[event], net.pre[event].support)
        if key in seen:
            report.add("injective", f"events {seen[key]} and {event} share label and preset")
        seen.setdefault(key, event)
    return report


def simulate(bp: BranchingProcess, word: Iterable[str], marking: Optional[frozenset] = None) -> frozenset:
    """
    Fire base transitions in ``bp`` by resolving each label to its enabled copy.

    Raises:
        NotEnabled: When no copy of a label is enabled.
        AmbiguousLabel: When several copies are enabled.
    """
    marking = frozenset(bp.initial) if marking is None else frozenset(marking)
    by_label = {}
    for event in bp.events:
        by_label.setdefault(bp.labels[event], []).append(event)
    for label in word:
        ready = [e for e in by_label.get(label, ()) if bp.net.pre[e].support <= marking]
        if not ready:
            raise NotEnabled(label)
        if len(ready) > 1:
            raise AmbiguousLabel(f"{len(ready)} copies of {label!r} are enabled")
        event = ready[0]
        marking = (marking - bp.net.pre[event].support) | bp.net.post[event].support
    return marking
