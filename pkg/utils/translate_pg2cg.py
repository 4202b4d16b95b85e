"""
Petri games to control games.

Every member of a distribution becomes a process. Places become local states, system
places additionally get one commitment state per subset of the transitions leaving
them, chosen by a local controllable ``tau`` action. Transitions become uncontrollable
actions shared by the members containing them. The ``hatted`` variant adds a ``bot``
state per process and ``zap`` actions that punish commitments enabling two transitions.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

from immutabledict import immutabledict

from models.automata import LocalProcess
from models.distribution import SingularNetDistribution, SliceDistribution
from models.games import Controller, ControlGame, Objective, PetriGame, Strategy
from models.nets import PetriNet
from models.traces import DistributedAlphabet
from utils.automata import compose_local, step
from utils.distribution import validate_slice_distribution
from utils.errors import (
    AmbiguousLabel,
    InvalidDistribution,
    NonReachabilityObjective,
    NotDefined,
    ReconstructionAssertionFailed,
)
from utils.games import materialize

PLAIN = "plain"
HATTED = "hatted"

OK = "ok"
BROKEN = "broken"
CUT = "cut"


def set_name(items: Iterable[str]) -> str:
    return "{" + ",".join(sorted(items)) + "}"


def tau_name(place: str, chosen: Iterable[str]) -> str:
    return f"tau({place},{set_name(chosen)})"


def commitment_name(place: str, chosen: Iterable[str]) -> str:
    return f"({place},{set_name(chosen)})"


def zap_name(place: str, chosen: Iterable[str], first: str, second: str) -> str:
    return f"zap({place},{set_name(chosen)},{first},{second})"


def bot_name(process: str) -> str:
    return f"bot({process})"


def subsets(items: Iterable[str]) -> list[frozenset]:
    items = sorted(items)
    return [frozenset(c) for size in range(len(items) + 1) for c in combinations(items, size)]


@dataclass(frozen=True)
class PgToCgResult:
    """
    A translated control game together with the bookkeeping the strategy translations need.

    Attributes:
        game (PetriGame): The source game.
        distribution: The slice distribution or SND the processes come from.
        control_game (ControlGame): The translated game.
        variant (str): ``plain`` or ``hatted``.
        process_of_slice (immutabledict): Member id to process id.
        slice_of_process (immutabledict): Process id to member id.
        owner (immutabledict): Composition place to the process holding it.
        local_flow (immutabledict): ``(process, transition)`` to the member-local
            ``(source place, target place)``.
        taus (immutabledict): ``tau`` action to its ``(place, commitment set)``.
        system (frozenset[str]): System places of the composition.
    """
    game: PetriGame
    distribution: object = field(repr=False)
    control_game: ControlGame
    variant: str
    process_of_slice: immutabledict
    slice_of_process: immutabledict
    owner: immutabledict = field(repr=False)
    local_flow: immutabledict = field(repr=False)
    taus: immutabledict = field(repr=False)
    system: frozenset = field(repr=False)

    @property
    def net(self) -> PetriNet:
        return self.distribution.composition

    @property
    def pi(self) -> immutabledict:
        return self.distribution.pi

    def offered(self, place: str) -> frozenset[str]:
        """Base labels of the transitions leaving a composition place."""
        return frozenset(self.pi[t] for t in self.net.postset(place))

    def initial_place(self, member: str) -> str:
        return next(iter(self.net.initial.support & self.distribution.places_of(member)))

    def pg_label(self, transition: str) -> Optional[str]:
        return transition

    def cg_label(self, action: str) -> Optional[str]:
        """Observable base transition of an action; commitments and zaps are internal."""
        if action in self.net.transitions:
            return self.pi[action]
        return None


def _member_flow(net: PetriNet, places: frozenset, transition: str) -> tuple[str, str]:
    sources = net.pre[transition].support & places
    targets = net.post[transition].support & places
    if len(sources) != 1 or len(targets) != 1:
        raise InvalidDistribution(f"{transition} moves {len(sources)} tokens of one member")
    return next(iter(sources)), next(iter(targets))


def pg_to_cg(g: PetriGame, d, variant: str = PLAIN) -> PgToCgResult:
    """
    Translate a reachability Petri game along a slice distribution or an SND.

    Commitment sets range over base transition labels, so copies of a transition in an
    SND cannot be told apart by a controller.

    Raises:
        NonReachabilityObjective: When ``g`` is a safety game.
        InvalidDistribution: When ``d`` does not distribute the net of ``g``.
    """
    if g.objective != Objective.REACHABILITY:
        raise NonReachabilityObjective(f"{g.name} is not a reachability game")
    if variant not in (PLAIN, HATTED):
        raise ValueError(f"unknown variant {variant!r}")
    if d.base.places != g.net.places or d.base.transitions != g.net.transitions:
        raise InvalidDistribution(f"distribution does not belong to {g.name}")
    if isinstance(d, SliceDistribution):
        report = validate_slice_distribution(d)
        if not report.valid:
            raise InvalidDistribution(report.violations[0].message)
    elif not isinstance(d, SingularNetDistribution):
        raise InvalidDistribution(f"unsupported distribution {type(d).__name__}")

    net, pi = d.composition, d.pi
    system = frozenset(q for q in net.places if pi[q] in g.system)
    winning = frozenset(q for q in net.places if pi[q] in g.special)
    process_of = {m: f"p{i}" for i, m in enumerate(d.members, start=1)}
    owner = {q: process_of[m] for m in d.members for q in d.places_of(m)}

    dom, flow, copies = {}, {}, {}
    for m in d.members:
        p = process_of[m]
        for t in d.transitions_of(m):
            dom.setdefault(t, set()).add(p)
            flow[(p, t)] = _member_flow(net, d.places_of(m), t)
            copies.setdefault(pi[t], set()).add(p)

    states = {p: set() for p in process_of.values()}
    moves = {p: set() for p in process_of.values()}
    special = {p: set() for p in process_of.values()}
    taus = {}
    for q in sorted(net.places):
        p = owner[q]
        states[p].add(q)
        if q in winning:
            special[p].add(q)
        if q not in system:
            continue
        for chosen in subsets(pi[t] for t in net.postset(q)):
            state, tau = commitment_name(q, chosen), tau_name(q, chosen)
            states[p].add(state)
            moves[p].add((q, tau, state))
            dom[tau] = {p}
            taus[tau] = (q, chosen)
            if q in winning:
                special[p].add(state)

    for (p, t), (source, target) in flow.items():
        if source not in system:
            moves[p].add((source, t, target))
            continue
        for chosen in subsets(pi[u] for u in net.postset(source)):
            if pi[t] in chosen:
                moves[p].add((commitment_name(source, chosen), t, target))

    if variant == HATTED:
        _add_zaps(d, net, pi, system, owner, process_of, copies, states, moves, dom)

    alphabet = DistributedAlphabet.of(dom)
    processes = {}
    for m, p in process_of.items():
        start = net.initial.support & d.places_of(m)
        if len(start) != 1:
            raise InvalidDistribution(f"member {m} starts with {len(start)} tokens")
        processes[p] = LocalProcess(states[p], next(iter(start)), moves[p])
    automaton = compose_local(processes, alphabet)
    suffix = "hcg" if variant == HATTED else "cg"
    control_game = ControlGame(
        automaton,
        controllable=frozenset(taus),
        special=immutabledict(special),
        objective=Objective.REACHABILITY,
        name=f"{g.name}.{suffix}",
    )
    logging.info(f"Translated {g.name} to a control game OK ({len(processes)} processes, {len(dom)} actions)")
    return PgToCgResult(
        game=g,
        distribution=d,
        control_game=control_game,
        variant=variant,
        process_of_slice=immutabledict(process_of),
        slice_of_process=immutabledict({p: m for m, p in process_of.items()}),
        owner=immutabledict(sorted(owner.items())),
        local_flow=immutabledict(flow),
        taus=immutabledict(sorted(taus.items())),
        system=system,
    )


def _add_zaps(d, net, pi, system, owner, process_of, copies, states, moves, dom) -> None:
    for p in process_of.values():
        states[p].add(bot_name(p))
    offered = {q: frozenset(pi[t] for t in net.postset(q)) for q in net.places}
    labels_of = {process_of[m]: frozenset(pi[t] for t in d.transitions_of(m)) for m in d.members}
    places_of = {process_of[m]: d.places_of(m) for m in d.members}
    for q in sorted(system):
        p = owner[q]
        for chosen in subsets(offered[q]):
            for first, second in combinations(sorted(chosen), 2):
                zap = zap_name(q, chosen, first, second)
                involved = {p} | copies.get(first, set()) | copies.get(second, set())
                dom[zap] = involved
                moves[p].add((commitment_name(q, chosen), zap, bot_name(p)))
                for other in sorted(involved - {p}):
                    needed = {first, second} & labels_of[other]
                    for r in sorted(places_of[other]):
                        if r not in system:
                            if needed <= offered[r]:
                                moves[other].add((r, zap, bot_name(other)))
                            continue
                        for committed in subsets(offered[r]):
                            if needed <= committed:
                                moves[other].add((commitment_name(r, committed), zap, bot_name(other)))


### STRATEGY TO CONTROLLER ###


class StrategyController(Controller):
    """
    Local controllers that follow a strategy of the source game.

    The memory of a process is ``(place, rule memory, status)``: the place its token
    sits on, the strategy memory of that token and whether the strategy could follow
    the play so far. A process on a system place commits to exactly the transitions the
    strategy allows there; on every other state it allows nothing.
    """

    def __init__(self, res: PgToCgResult, rule):
        super().__init__(res.control_game)
        self.res = res
        self.rule = rule
        self.finite = getattr(rule, "finite", False)
        self._initial = {}
        seen = Counter()
        for member in res.distribution.members:
            place = res.initial_place(member)
            label = res.pi[place]
            self._initial[res.process_of_slice[member]] = (place, rule.initial(label, seen[label]), OK)
            seen[label] += 1

    def initial_memory(self, process: str):
        return self._initial[process]

    def advance(self, action: str, memories: tuple) -> tuple:
        res = self.res
        if action not in res.net.transitions:
            return memories
        dom = self.game.alphabet.domain(action)
        targets = [res.local_flow[(p, action)][1] for p in dom]
        statuses = {status for _, _, status in memories}
        status = OK if statuses == {OK} else (CUT if CUT in statuses else BROKEN)
        if status == OK:
            label = res.pi[action]
            tokens = sorted(((res.pi[place], memory) for place, memory, _ in memories), key=lambda token: token[0])
            produced = self.rule.fire(label, tokens, sorted(res.game.net.post[label].support))
            if produced is None:
                status = CUT if any(self.rule.truncated(memory) for _, memory, _ in memories) else BROKEN
            else:
                return tuple((target, produced[res.pi[target]], OK) for target in targets)
        return tuple((target, None, status) for target in targets)

    def allowed(self, process: str, state: str, memory) -> frozenset:
        place, rule_memory, status = memory
        if status != OK or state != place or place not in self.res.system:
            return frozenset()
        chosen = self.rule.allowed(self.res.pi[place], rule_memory) & self.res.offered(place)
        return frozenset({tau_name(place, chosen)})

    def truncated(self, memory) -> bool:
        _, rule_memory, status = memory
        return status == CUT or (status == OK and self.rule.truncated(rule_memory))


def strategy_to_controller_pg2cg(g: PetriGame, d, res: PgToCgResult, s: Strategy) -> StrategyController:
    return StrategyController(res, s.strategy_rule)


### CONTROLLER TO STRATEGY ###


def _commitment(res: PgToCgResult, controller, place: str, memory) -> frozenset:
    """Union of the commitment sets the controller allows on ``place``; empty when none."""
    chosen = frozenset()
    for action in controller.allowed(res.owner[place], place, memory):
        if action in res.taus and res.taus[action][0] == place:
            chosen |= res.taus[action][1]
    return chosen


class ControllerRule:
    """
    Strategy rule on the composition net driven by a controller of the translated game.

    A token carries the controller memory of its process. Before a system token takes
    part in a transition its process commits to the union of the sets the controller
    allows, so the memory sees the ``tau`` action first.
    """

    def __init__(self, res: PgToCgResult, controller):
        self.res = res
        self.controller = controller
        self.finite = getattr(controller, "finite", False)

    def initial(self, place: str, index: int):
        return self.controller.initial_memory(self.res.owner[place])

    def allowed(self, place: str, memory) -> frozenset:
        return _commitment(self.res, self.controller, place, memory)

    def fire(self, transition: str, tokens: list, post: Iterable[str]) -> dict:
        res = self.res
        local = {}
        for place, memory in tokens:
            if place in res.system:
                chosen = _commitment(res, self.controller, place, memory)
                (memory,) = self.controller.advance(tau_name(place, chosen), (memory,))
                local[res.owner[place]] = (commitment_name(place, chosen), memory)
            else:
                local[res.owner[place]] = (place, memory)
        dom = res.control_game.alphabet.domain(transition)
        if set(dom) != set(local):
            raise ReconstructionAssertionFailed(f"{transition} involves {list(dom)}, tokens come from {sorted(local)}")
        source = tuple(local[p][0] for p in dom)
        target = res.control_game.automaton.delta[transition].get(source)
        if target is None:
            raise ReconstructionAssertionFailed(f"{transition} is not a move of the translated game from {source}")
        advanced = self.controller.advance(transition, tuple(local[p][1] for p in dom))
        produced = dict(zip(target, advanced))
        return {place: produced[place] for place in post}

    def truncated(self, memory) -> bool:
        return self.controller.truncated(memory)


class LiftedRule:
    """A rule on an SND composition seen from the base net: tokens remember their copy place."""

    def __init__(self, res: PgToCgResult, inner):
        self.res = res
        self.inner = inner
        self.finite = getattr(inner, "finite", False)
        net, pi = res.net, res.pi
        self.index = {(pi[t], net.pre[t].support): t for t in net.transitions}
        self.initials = {}
        seen = Counter()
        for member in res.distribution.members:
            place = res.initial_place(member)
            self.initials[(pi[place], seen[pi[place]])] = place
            seen[pi[place]] += 1

    def initial(self, place: str, index: int):
        copy = self.initials[(place, index)]
        return copy, self.inner.initial(copy, 0)

    def allowed(self, place: str, memory) -> frozenset:
        copy, inner = memory
        return self.inner.allowed(copy, inner)

    def fire(self, transition: str, tokens: list, post: Iterable[str]) -> Optional[dict]:
        copy = self.index.get((transition, frozenset(memory[0] for _, memory in tokens)))
        if copy is None:
            return None
        inner_tokens = sorted((memory for _, memory in tokens), key=lambda token: token[0])
        targets = sorted(self.res.net.post[copy].support)
        produced = self.inner.fire(copy, inner_tokens, targets)
        if produced is None:
            return None
        return {self.res.pi[place]: (place, produced[place]) for place in targets}

    def truncated(self, memory) -> bool:
        return self.inner.truncated(memory[1])


def controller_to_strategy_pg2cg(
    g: PetriGame,
    d,
    res: PgToCgResult,
    ctrl,
    depth: Optional[int] = None,
) -> Strategy:
    """
    Build the strategy of ``g`` whose system places allow what the controller commits to.

    Raises:
        ReconstructionAssertionFailed: When a transition of the strategy has no
            counterpart move in the translated game.
    """
    rule = ControllerRule(res, ctrl)
    if isinstance(d, SingularNetDistribution):
        rule = LiftedRule(res, rule)
    strategy = materialize(g, rule, depth=depth)
    logging.info(f"Strategy for {g.name} extracted from controller OK")
    return strategy


def reconstruct_play(res: PgToCgResult, ctrl, past: Iterable[str]) -> tuple[str, ...]:
    """
    Interleave the commitments of ``ctrl`` with a sequence of base transitions.

    Before each transition every system process involved commits to the union of the
    sets the controller allows; the result is a play of the translated game.

    Raises:
        ReconstructionAssertionFailed: When a transition is not enabled or not committed to.
        AmbiguousLabel: When two copies of a transition are enabled at once.
    """
    aut = res.control_game.automaton
    alphabet = aut.alphabet
    current = aut.initial
    memories = {p: ctrl.initial_memory(p) for p in aut.processes}
    word = []

    def play(action: str) -> None:
        nonlocal current
        try:
            current = step(aut, current, action)
        except NotDefined as error:
            raise ReconstructionAssertionFailed(f"{action} is not a move after {' '.join(word) or 'the start'}") from error
        dom = alphabet.domain(action)
        memories.update(zip(dom, ctrl.advance(action, tuple(memories[p] for p in dom))))
        word.append(action)

    for label in past:
        marked = frozenset(current.values())
        candidates = [t for t in sorted(res.net.transitions) if res.pi[t] == label and res.net.pre[t].support <= marked]
        if not candidates:
            raise ReconstructionAssertionFailed(f"{label} is not enabled after {' '.join(word) or 'the start'}")
        if len(candidates) > 1:
            raise AmbiguousLabel(f"{label} has enabled copies {candidates}")
        transition = candidates[0]
        for p in alphabet.domain(transition):
            place = current[p]
            if place in res.system:
                chosen = _commitment(res, ctrl, place, memories[p])
                if label not in chosen:
                    raise ReconstructionAssertionFailed(f"{p} does not commit to {label} on {place}")
                play(tau_name(place, chosen))
        play(transition)
    return tuple(word)
