import logging
from collections import deque
from typing import Iterable, Optional

from models.automata import global_state
from models.games import ControlGame, HistoryPolicy, PetriGame, Strategy, TableController, canonical_past
from models.reports import RefusalReport, WinningReport
from models.traces import Trace
from utils.automata import step
from utils.config import resolve
from utils.explore import ControllerLTS, StrategyLTS, explore, verdict
from utils.traces import empty, extend, local_view, normalize
from utils.unfolding import PrefixBuilder, co_relation, cosets, past_events


def materialize(game: PetriGame, rule, depth: Optional[int] = None, state_cap: Optional[int] = None) -> Strategy:
    """
    Build the branching process of the strategy described by ``rule`` up to ``depth``.

    An event is added iff every system condition of its preset allows its label, so the
    result satisfies justified refusal by construction.
    """
    depth = resolve(depth, "depth")
    bp = PrefixBuilder(game.net, depth, rule=rule, system=game.system, state_cap=state_cap).build()
    decision = {}
    for condition in bp.conditions:
        place = bp.labels[condition]
        if place in game.system:
            decision[condition] = rule.allowed(place, bp.memory[condition]) & game.net.postset(place)
    logging.info(f"Strategy for {game.name} materialized to depth {depth} OK ({len(bp.events)} events)")
    return Strategy(game, bp, decision, rule=rule)


def check_justified_refusal(game: PetriGame, strategy: Strategy, depth: Optional[int] = None) -> RefusalReport:
    """
    Every missing event must be refused by a system condition of its would-be preset.

    For each co-set C below the depth bound labelled like pre(t) either a t-event with
    preset C exists or some system condition in C never takes part in a t-event.
    """
    bp = strategy.bp
    depth = depth if depth is not None else (bp.depth if bp.depth is not None else resolve(None, "depth"))
    co = co_relation(bp)
    present = {(bp.labels[e], bp.net.pre[e].support) for e in bp.events}
    report = RefusalReport()
    for transition in sorted(game.net.transitions):
        places = game.net.pre[transition].support
        if not places:
            continue
        for preset in cosets(bp, places, co):
            if max(bp.height(c) for c in preset) >= depth:
                continue
            report.checked += 1
            if (transition, frozenset(preset)) in present:
                continue
            refusers = [
                c for c in preset
                if bp.labels[c] in game.system and transition not in bp.outgoing_labels(c)
            ]
            if not refusers:
                report.add(
                    "justified-refusal",
                    f"{transition} is missing on {sorted(preset)} without a refusing system place",
                )
    return report


def check_deterministic(game: PetriGame, strategy: Strategy, depth: Optional[int] = None) -> bool:
    """True iff no reachable state lets a system token take part in two different events."""
    lts = StrategyLTS(game, strategy.strategy_rule)
    run = explore(lts, depth=depth, judge=False)
    for state in run.graph.nodes:
        involved = {}
        for transition, _, combo in lts.moves(state):
            for token in combo:
                if token[0] in game.system:
                    involved.setdefault(token, set()).add((transition, combo))
        for token, events in involved.items():
            if len(events) > 1:
                logging.info(f"Strategy is not deterministic at {token[0]}: {sorted(t for t, _ in events)}")
                return False
    return True


def strategy_winning(game: PetriGame, strategy: Strategy, depth: Optional[int] = None, state_cap: Optional[int] = None) -> WinningReport:
    return rule_winning(game, strategy.strategy_rule, depth=depth, state_cap=state_cap)


def rule_winning(game: PetriGame, rule, depth: Optional[int] = None, state_cap: Optional[int] = None) -> WinningReport:
    """Winning verdict of the strategy a rule describes, without materializing it."""
    return verdict(StrategyLTS(game, rule), game.objective, depth=depth, state_cap=state_cap)


def controller_compatible_plays(game: ControlGame, controller, bound: int) -> frozenset[Trace]:
    """Plays of at most ``bound`` actions compatible with ``controller``, as traces."""
    lts = ControllerLTS(game, controller)
    start = empty(game.alphabet)
    plays = {start: lts.initial}
    queue = deque([start])
    while queue:
        trace = queue.popleft()
        if len(trace) >= bound:
            continue
        for action, target in lts.successors(plays[trace]):
            successor = extend(trace, action)
            if successor not in plays:
                plays[successor] = target
                queue.append(successor)
    return frozenset(plays)


def controller_winning_bounded(game: ControlGame, controller, bound: Optional[int] = None, state_cap: Optional[int] = None) -> WinningReport:
    return verdict(ControllerLTS(game, controller), game.objective, depth=bound, state_cap=state_cap)


def replay(game: ControlGame, controller, word: Iterable[str]) -> tuple:
    """Global state and controller memories after ``word``."""
    current = game.automaton.initial
    memories = {p: controller.initial_memory(p) for p in game.processes}
    for action in word:
        dom = game.alphabet.domain(action)
        advanced = controller.advance(action, tuple(memories[p] for p in dom))
        memories.update(zip(dom, advanced))
        current = step(game.automaton, current, action)
    return current, global_state(memories)


def controller_decision(game: ControlGame, controller, process: str, view) -> frozenset[str]:
    """f_p(view): the actions the local controller of ``process`` allows after ``view``."""
    word = view.word if isinstance(view, Trace) else normalize(game.alphabet, view).word
    current, memories = replay(game, controller, word)
    return controller.allowed(process, current[process], memories[process])


def tabulate_strategy(strategy: Strategy) -> HistoryPolicy:
    """The decisions of a strategy keyed on the canonical causal past of every system condition."""
    bp = strategy.bp
    decisions = {}
    for condition, allowed in strategy.decision.items():
        past = frozenset(
            (event, bp.labels[event], frozenset(
                bp.producer[c] for c in bp.net.pre[event].support if bp.producer[c] is not None
            ))
            for event in past_events(bp, condition)
        )
        key = (bp.labels[condition], canonical_past(past))
        decisions[key] = decisions.get(key, frozenset()) | allowed
    return HistoryPolicy(decisions)


def tabulate_controller(game: ControlGame, controller, bound: Optional[int] = None) -> TableController:
    """
    The decisions of a controller on every local view of a compatible play of at most ``bound`` actions.

    Empty decisions are left to the table default.
    """
    bound = resolve(bound, "depth")
    table = {}
    for play in controller_compatible_plays(game, controller, bound):
        for process in game.processes:
            view = local_view(play, process)
            allowed = controller_decision(game, controller, process, view)
            allowed &= game.controllable & game.alphabet.actions_of(process)
            if allowed:
                table[(process, view.word)] = allowed
    logging.info(f"Controller tabulated on plays up to {bound} actions OK ({len(table)} entries)")
    return TableController(game, table)
