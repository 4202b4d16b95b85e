"""Bounded exploration shared by strategy checks, controller checks, bisimulation and solvers."""
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import networkx as nx

from models.automata import global_state
from models.games import ControlGame, Objective, PetriGame
from models.nets import Marking
from models.reports import Verdict, WinningReport
from utils.automata import enabled, step
from utils.config import resolve
from utils.errors import BoundExceeded, Undecided
from utils.nets import is_final


def bag(tokens) -> frozenset:
    """Canonical multiset of hashable tokens."""
    return frozenset(Counter(tokens).items())


def unbag(state: frozenset) -> list:
    return [token for token, count in state for _ in range(count)]


class StrategyLTS:
    """
    The transition system of a strategy given by a rule.

    States are multisets of ``(place, memory)`` tokens; an edge fires a base transition
    on one choice of tokens covering its preset. System tokens must allow the transition
    and the rule must be able to fire it.
    """

    def __init__(self, game: PetriGame, rule):
        self.game = game
        self.net = game.net
        self.rule = rule
        self.finite = getattr(rule, "finite", False)
        tokens = []
        for place, count in self.net.initial.counts.items():
            tokens.extend((place, rule.initial(place, index)) for index in range(count))
        self.initial = bag(tokens)

    def marking(self, state: frozenset) -> Marking:
        counts = Counter()
        for (place, _), count in state:
            counts[place] += count
        return Marking.of(counts)

    def moves(self, state: frozenset) -> list:
        """``(transition, successor, consumed tokens)`` triples in sorted transition order."""
        by_place = {}
        for (place, memory), _ in state:
            by_place.setdefault(place, []).append((place, memory))
        counts = dict(state)
        result = []
        for transition in sorted(self.net.transitions):
            places = sorted(self.net.pre[transition].support)
            if not all(place in by_place for place in places):
                continue
            post = sorted(self.net.post[transition].support)
            for combo in product(*(by_place[place] for place in places)):
                combo = list(combo)
                if any(
                    place in self.game.system and transition not in self.rule.allowed(place, memory)
                    for place, memory in combo
                ):
                    continue
                produced = self.rule.fire(transition, combo, post)
                if produced is None:
                    continue
                updated = Counter(counts)
                updated.subtract(combo)
                updated.update((place, produced[place]) for place in post)
                result.append((transition, frozenset((tok, n) for tok, n in updated.items() if n > 0), tuple(combo)))
        return result

    def successors(self, state: frozenset) -> list:
        return [(label, target) for label, target, _ in self.moves(state)]

    def truncated(self, state: frozenset) -> bool:
        return any(self.rule.truncated(memory) for (_, memory), _ in state)

    def failure(self, state: frozenset, moves: list) -> Optional[str]:
        marking = self.marking(state)
        if self.game.objective == Objective.SAFETY:
            bad = sorted(marking.support & self.game.special)
            if bad:
                return f"bad place {bad[0]} reached"
            if not moves and not self.truncated(state) and not is_final(self.net, marking):
                return f"deadlock in {marking}"
            return None
        if not moves and not self.truncated(state):
            losing = sorted(marking.support - self.game.special)
            if losing:
                return f"final marking {marking} holds a token on {losing[0]}"
        return None


class ControllerLTS:
    """
    The transition system of a control game under a controller.

    States pair the global state with the per-process controller memories.
    Uncontrollable actions are always possible; a controllable action needs the consent
    of every process in its domain.
    """

    def __init__(self, game: ControlGame, controller):
        self.game = game
        self.aut = game.automaton
        self.controller = controller
        self.finite = getattr(controller, "finite", False)
        memories = {p: controller.initial_memory(p) for p in self.aut.processes}
        self.initial = (self.aut.initial, global_state(memories))

    def permitted(self, state, action: str) -> bool:
        if action not in self.game.controllable:
            return True
        current, memories = state
        return all(
            action in self.controller.allowed(p, current[p], memories[p])
            for p in self.aut.alphabet.domain(action)
        )

    def successors(self, state) -> list:
        current, memories = state
        result = []
        for action in enabled(self.aut, current):
            if not self.permitted(state, action):
                continue
            dom = self.aut.alphabet.domain(action)
            advanced = self.controller.advance(action, tuple(memories[p] for p in dom))
            updated = dict(memories)
            updated.update(zip(dom, advanced))
            result.append((action, (step(self.aut, current, action), global_state(updated))))
        return result

    def truncated(self, state) -> bool:
        _, memories = state
        return any(self.controller.truncated(memory) for memory in memories.values())

    def failure(self, state, moves: list) -> Optional[str]:
        current, _ = state
        if self.game.objective == Objective.SAFETY:
            for p in self.aut.processes:
                if current[p] in self.game.special[p]:
                    return f"bad state {current[p]} of {p} reached"
            if not moves and enabled(self.aut, current) and not self.truncated(state):
                return f"deadlock in {dict(current)}"
            return None
        if not moves and not self.truncated(state):
            for p in self.aut.processes:
                if current[p] not in self.game.special[p]:
                    return f"final play leaves {p} in non-winning state {current[p]}"
        return None


@dataclass
class Exploration:
    graph: nx.MultiDiGraph
    initial: object
    truncated: set = field(default_factory=set)
    failure: Optional[tuple] = None
    undecided: Optional[Undecided] = None

    def path_to(self, node) -> list[str]:
        nodes = nx.shortest_path(self.graph, self.initial, node)
        return [next(iter(self.graph.get_edge_data(a, b).values()))["label"] for a, b in zip(nodes, nodes[1:])]


def explore(lts, depth: Optional[int] = None, state_cap: Optional[int] = None, judge: bool = True) -> Exploration:
    """
    Breadth-first exploration of ``lts``.

    Finite-memory systems are explored until the graph closes; others stop expanding at
    ``depth`` and record the cut states as truncated. With ``judge`` the exploration stops
    at the first state the system's ``failure`` check rejects.

    A state whose moves need a decision the system does not hold yet is left unexpanded
    and the first such request is kept in ``undecided``; without ``judge`` it is raised
    once the exploration ends.

    Raises:
        BoundExceeded: When more than ``state_cap`` states are found.
        Undecided: Without ``judge``, when some state needed a missing decision.
    """
    state_cap = resolve(state_cap, "state_cap")
    limit = None if lts.finite else resolve(depth, "depth")
    graph = nx.MultiDiGraph()
    graph.add_node(lts.initial, level=0)
    result = Exploration(graph, lts.initial)
    queue = deque([lts.initial])
    while queue:
        node = queue.popleft()
        level = graph.nodes[node]["level"]
        try:
            moves = lts.successors(node)
        except Undecided as missing:
            result.undecided = result.undecided or missing
            continue
        if judge:
            reason = lts.failure(node, moves)
            if reason is not None:
                result.failure = (reason, node)
                return result
        if lts.truncated(node):
            result.truncated.add(node)
        if limit is not None and level >= limit:
            if moves:
                result.truncated.add(node)
            continue
        for label, target in moves:
            if target not in graph:
                if graph.number_of_nodes() >= state_cap:
                    raise BoundExceeded(state_cap)
                graph.add_node(target, level=level + 1)
                queue.append(target)
            graph.add_edge(node, target, label=label)
    if result.undecided is not None and not judge:
        raise result.undecided
    return result


def verdict(lts, objective: Objective, depth: Optional[int] = None, state_cap: Optional[int] = None) -> WinningReport:
    """Winning verdict for a strategy or controller transition system."""
    run = explore(lts, depth=depth, state_cap=state_cap)
    states = run.graph.number_of_nodes()
    if run.failure is not None:
        reason, node = run.failure
        return WinningReport(verdict=Verdict.NOT_WINNING, reason=reason, witness=run.path_to(node), states=states)
    if objective == Objective.REACHABILITY:
        try:
            cycle = nx.find_cycle(run.graph, source=run.initial)
        except nx.NetworkXNoCycle:
            cycle = None
        if cycle:
            witness = run.path_to(cycle[0][0]) + [run.graph.edges[edge]["label"] for edge in cycle]
            return WinningReport(verdict=Verdict.NOT_WINNING, reason="infinite play", witness=witness, states=states)
    # failures among decided states stand, otherwise the missing decision is needed first
    if run.undecided is not None:
        raise run.undecided
    if run.truncated:
        logging.warning(f"Exploration truncated at {len(run.truncated)} states; verdict inconclusive")
        return WinningReport(verdict=Verdict.INCONCLUSIVE, reason="depth bound reached", states=states, truncated=len(run.truncated))
    return WinningReport(verdict=Verdict.WINNING, states=states, exact=True)
