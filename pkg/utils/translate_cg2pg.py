"""
Control games to Petri games.

Every local state becomes a system place whose token commits, by a ``tau`` transition,
to a set of controllable actions; the commitment is an environment place. An action
becomes one transition per combination of commitments of the processes taking part:
uncontrollable actions for every combination, controllable ones only where every
commitment contains them. Deadlock detection punishes final markings whose global
state can still move; the challenge lets committed tokens retire to a safe place.
"""
import hashlib
import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional

from immutabledict import immutabledict

from models.automata import global_state
from models.games import Controller, ControlGame, Objective, PetriGame, Strategy
from models.nets import Marking, PetriNet
from utils.automata import enabled, enabled_local
from utils.errors import AssumptionViolated, IdCollision, NonSafetyObjective
from utils.games import materialize
from utils.nets import reachability_graph
from utils.translate_pg2cg import BROKEN, CUT, OK, commitment_name, set_name, subsets, tau_name

BASE = "base"
DEADLOCK = "with_deadlock_detection"
CHALLENGE = "with_challenge"

VARIANTS = (BASE, DEADLOCK, CHALLENGE)


def act_name(action: str, states: Iterable[str], chosen: Iterable[Iterable[str]]) -> str:
    sets = ",".join(set_name(a) for a in chosen)
    return f"act({action},<{','.join(states)}>,[{sets}])"


def tdl_name(marking: Marking) -> str:
    digest = hashlib.blake2b(str(marking).encode("utf-8"), digest_size=16).hexdigest()
    return f"tdl({digest})"


def bot_dl_name(process: str) -> str:
    return f"bot_dl({process})"


def top_name(process: str) -> str:
    return f"top({process})"


def tch_name(place: str, chosen: Iterable[str]) -> str:
    return f"tch({place},{set_name(chosen)})"


@dataclass(frozen=True)
class CgToPgResult:
    """
    A translated Petri game with the maps back to the control game.

    Attributes:
        game (ControlGame): The source game.
        petri_game (PetriGame): The translated safety game.
        variant (str): ``base``, ``with_deadlock_detection`` or ``with_challenge``.
        compact (bool): States without controllable actions are environment places.
        zeta (immutabledict): Place to the local state it stands for; the gadget
            places ``bot_dl`` and ``top`` have no image.
        process_of (immutabledict): Place to its process.
        place_of (immutabledict): ``(process, state)`` to the place of the state.
        commitments (immutabledict): Environment place to ``(process, state, set)``.
        actions (immutabledict): Action transition to the action it copies.
        taus (immutabledict): ``tau`` transition to ``(state place, commitment place)``.
        artificial_deadlocks (frozenset[Marking]): Final markings whose global state
            can still move, computed on the base variant.
    """
    game: ControlGame
    petri_game: PetriGame
    variant: str
    compact: bool
    zeta: immutabledict = field(repr=False)
    process_of: immutabledict = field(repr=False)
    place_of: immutabledict = field(repr=False)
    commitments: immutabledict = field(repr=False)
    actions: immutabledict = field(repr=False)
    taus: immutabledict = field(repr=False)
    artificial_deadlocks: frozenset = field(default=frozenset(), repr=False)

    @property
    def net(self) -> PetriNet:
        return self.petri_game.net

    def commitment_place(self, process: str, state: str, chosen: Iterable[str]) -> str:
        place = self.place_of[(process, state)]
        if place not in self.petri_game.system:
            return place
        return commitment_name(place, chosen)

    def state_of(self, marking: Iterable[str]):
        """The global state a marking of the translated net stands for."""
        return global_state({self.process_of[q]: self.zeta[q] for q in marking})

    def pg_label(self, transition: str) -> Optional[str]:
        return self.actions.get(transition)

    def cg_label(self, action: str) -> Optional[str]:
        return action


def _place_names(c: ControlGame) -> dict:
    owners = {}
    for p in c.processes:
        for s in c.automaton.local_states[p]:
            owners.setdefault(s, []).append(p)
    return {
        (p, s): s if len(owners[s]) == 1 else f"{p}.{s}"
        for p in c.processes
        for s in c.automaton.local_states[p]
    }


def cg_to_pg(c: ControlGame, variant: str = BASE, compact: bool = False, state_cap: Optional[int] = None) -> CgToPgResult:
    """
    Translate a safety control game into a safety Petri game.

    Local states keep their names unless two processes share one, in which case the
    place is ``process.state``. Deadlock detection is computed on the base variant;
    the challenge is added on top of it.

    Raises:
        NonSafetyObjective: When ``c`` is a reachability game.
        BoundExceeded: When the reachable markings of the base variant exceed ``state_cap``.
    """
    if c.objective != Objective.SAFETY:
        raise NonSafetyObjective(f"{c.name} is not a safety game")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    aut = c.automaton
    place_of = _place_names(c)
    zeta, process_of, commitments = {}, {}, {}
    places, transitions, arcs = set(), set(), []
    system, bad = set(), set()
    taus = {}

    options = {}
    for (p, s), place in sorted(place_of.items()):
        places.add(place)
        zeta[place], process_of[place] = s, p
        controllable = enabled_local(aut, p, s) & c.controllable
        if s in c.special[p]:
            bad.add(place)
        if compact and not controllable:
            commitments[place] = (p, s, frozenset())
            options[(p, s)] = [(frozenset(), place)]
            continue
        system.add(place)
        options[(p, s)] = []
        for chosen in subsets(controllable):
            slot, tau = commitment_name(place, chosen), tau_name(place, chosen)
            places.add(slot)
            zeta[slot], process_of[slot] = s, p
            commitments[slot] = (p, s, chosen)
            options[(p, s)].append((chosen, slot))
            if s in c.special[p]:
                bad.add(slot)
            transitions.add(tau)
            arcs += [(place, tau), (tau, slot)]
            taus[tau] = (place, slot)

    actions = {}
    for action in sorted(aut.alphabet.actions):
        dom = aut.alphabet.domain(action)
        for source, target in aut.delta[action].items():
            names = [place_of[(p, s)] for p, s in zip(dom, source)]
            choices = [options[(p, s)] for p, s in zip(dom, source)]
            for combo in product(*choices):
                if action in c.controllable and not all(action in chosen for chosen, _ in combo):
                    continue
                name = act_name(action, names, [chosen for chosen, _ in combo])
                transitions.add(name)
                actions[name] = action
                arcs += [(slot, name) for _, slot in combo]
                arcs += [(name, place_of[(p, s)]) for p, s in zip(dom, target)]

    initial = [place_of[(p, s)] for p, s in aut.initial.items()]
    net = PetriNet.build(places, transitions, arcs, initial, name=f"{c.name}.pg")
    deadlocks = frozenset()
    if variant != BASE:
        deadlocks = _artificial_deadlocks(net, aut, process_of, zeta, state_cap)
        for p in c.processes:
            places.add(bot_dl_name(p))
            bad.add(bot_dl_name(p))
        for marking in sorted(deadlocks, key=str):
            name = tdl_name(marking)
            if name in transitions:
                raise IdCollision(name)
            transitions.add(name)
            arcs += [(q, name) for q in marking.support]
            arcs += [(name, bot_dl_name(p)) for p in c.processes]
    if variant == CHALLENGE:
        for p in c.processes:
            places.add(top_name(p))
        for slot, (p, s, chosen) in sorted(commitments.items()):
            name = tch_name(place_of[(p, s)], chosen)
            transitions.add(name)
            arcs += [(slot, name), (name, top_name(p))]
    if variant != BASE:
        net = PetriNet.build(places, transitions, arcs, initial, name=f"{c.name}.pg")

    petri_game = PetriGame(net, system=frozenset(system), special=frozenset(bad), objective=Objective.SAFETY)
    logging.info(f"Translated {c.name} to a Petri game OK ({len(net.places)} places, {len(net.transitions)} transitions)")
    return CgToPgResult(
        game=c,
        petri_game=petri_game,
        variant=variant,
        compact=compact,
        zeta=immutabledict(sorted(zeta.items())),
        process_of=immutabledict(sorted(process_of.items())),
        place_of=immutabledict(sorted(place_of.items())),
        commitments=immutabledict(sorted(commitments.items())),
        actions=immutabledict(sorted(actions.items())),
        taus=immutabledict(sorted(taus.items())),
        artificial_deadlocks=deadlocks,
    )


def _artificial_deadlocks(net: PetriNet, aut, process_of: dict, zeta: dict, state_cap: Optional[int]) -> frozenset:
    graph = reachability_graph(net, state_cap=state_cap)
    found = set()
    for marking in graph.nodes:
        if graph.out_degree(marking):
            continue
        current = global_state({process_of[q]: zeta[q] for q in marking.support})
        if enabled(aut, current):
            found.add(marking)
    logging.info(f"Found {len(found)} artificial deadlocks among {graph.number_of_nodes()} markings")
    return frozenset(found)


### CONTROLLER TO STRATEGY ###


class CommitmentRule:
    """
    Strategy rule on a translated Petri game that commits as a controller decides.

    Every token carries the controller memory of its process. A system place allows the
    single ``tau`` to the commitment the controller makes there; action transitions
    advance the memories of the processes taking part, all other transitions keep them.
    """

    def __init__(self, res: CgToPgResult, controller):
        self.res = res
        self.controller = controller
        self.finite = getattr(controller, "finite", False)

    def initial(self, place: str, index: int):
        return self.controller.initial_memory(self.res.process_of[place])

    def allowed(self, place: str, memory) -> frozenset:
        res = self.res
        p, s = res.process_of[place], res.zeta[place]
        chosen = self.controller.allowed(p, s, memory) & enabled_local(res.game.automaton, p, s) & res.game.controllable
        return frozenset({tau_name(place, chosen)})

    def fire(self, transition: str, tokens: list, post: Iterable[str]) -> dict:
        res = self.res
        action = res.actions.get(transition)
        memories = {res.process_of[place]: memory for place, memory in tokens}
        if action is None:
            # gadget places carry no memory
            return {place: memories.get(res.process_of.get(place)) for place in post}
        dom = res.game.alphabet.domain(action)
        if action in res.game.controllable:
            for place, memory in tokens:
                p, (_, s, _) = res.process_of[place], res.commitments[place]
                if action not in self.controller.allowed(p, s, memory):
                    raise AssumptionViolated(f"{p} committed to {action} on {s} but its controller refuses it")
        advanced = dict(zip(dom, self.controller.advance(action, tuple(memories[p] for p in dom))))
        return {place: advanced[res.process_of[place]] for place in post}

    def truncated(self, memory) -> bool:
        return memory is not None and self.controller.truncated(memory)


def controller_to_strategy_cg2pg(c: ControlGame, res: CgToPgResult, ctrl, depth: Optional[int] = None) -> Strategy:
    """
    Build the strategy of the translated game that commits to what ``ctrl`` allows.

    The result is deterministic and always commits.

    Raises:
        AssumptionViolated: When a controllable transition fires against the controller.
    """
    strategy = materialize(res.petri_game, CommitmentRule(res, ctrl), depth=depth)
    logging.info(f"Strategy for {res.petri_game.name} extracted from controller OK")
    return strategy


### STRATEGY TO CONTROLLER ###


class CommitmentController(Controller):
    """
    Local controllers reading the commitments of a strategy of the translated game.

    The memory of a process is ``(place, rule memory, status)``. Before an action the
    token of each involved process takes the ``tau`` the strategy allows; the action is
    then the transition copy leaving the chosen commitments. A process whose token
    refuses to commit, or whose move has no counterpart in the strategy, allows nothing
    from then on.
    """

    def __init__(self, res: CgToPgResult, rule):
        super().__init__(res.game)
        self.res = res
        self.rule = rule
        self.finite = getattr(rule, "finite", False)

    def initial_memory(self, process: str):
        place = self.res.place_of[(process, self.res.game.automaton.initial[process])]
        return place, self.rule.initial(place, 0), OK

    def _commit(self, place: str, memory) -> Optional[tuple]:
        """The commitment place and memory the strategy moves a token on ``place`` to."""
        res = self.res
        if place in res.commitments:
            return place, memory
        chosen = sorted(t for t in self.rule.allowed(place, memory) if t in res.taus and res.taus[t][0] == place)
        if not chosen:
            return None
        slot = res.taus[chosen[0]][1]
        produced = self.rule.fire(chosen[0], [(place, memory)], [slot])
        if produced is None:
            return None
        return slot, produced[slot]

    def allowed(self, process: str, state: str, memory) -> frozenset:
        place, rule_memory, status = memory
        if status != OK or self.res.zeta.get(place) != state:
            return frozenset()
        committed = self._commit(place, rule_memory)
        if committed is None:
            return frozenset()
        return self.res.commitments[committed[0]][2]

    def advance(self, action: str, memories: tuple) -> tuple:
        res = self.res
        dom = self.game.alphabet.domain(action)
        statuses = {status for _, _, status in memories}
        source = tuple(res.zeta[place] for place, _, _ in memories)
        target = res.game.automaton.delta[action].get(source)
        targets = [res.place_of[(p, s)] for p, s in zip(dom, target)] if target else [place for place, _, _ in memories]
        if statuses == {OK} and target is not None:
            committed = [self._commit(place, rule_memory) for place, rule_memory, _ in memories]
            if all(committed):
                chosen = [res.commitments[slot][2] for slot, _ in committed]
                name = act_name(action, [res.place_of[(p, s)] for p, s in zip(dom, source)], chosen)
                if name in res.net.transitions:
                    tokens = sorted(committed, key=lambda token: token[0])
                    produced = self.rule.fire(name, tokens, sorted(res.net.post[name].support))
                    if produced is not None:
                        return tuple((place, produced[place], OK) for place in targets)
                    if any(self.rule.truncated(memory) for _, memory in committed):
                        statuses = {CUT}
        status = CUT if CUT in statuses else BROKEN
        return tuple((place, None, status) for place in targets)

    def truncated(self, memory) -> bool:
        _, rule_memory, status = memory
        return status == CUT or (status == OK and self.rule.truncated(rule_memory))


def strategy_to_controller_cg2pg(c: ControlGame, res: CgToPgResult, s: Strategy) -> CommitmentController:
    return CommitmentController(res, s.strategy_rule)
