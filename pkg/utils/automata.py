import logging
from collections import deque
from itertools import product
from typing import Iterable, Mapping

from models.automata import AsyncAutomaton, GlobalState, LocalProcess, global_state
from models.traces import DistributedAlphabet, Trace
from utils.errors import ActionOutsideAlphabet, NotDefined, UnknownAction
from utils.traces import empty, extend


def compose_local(procs: Mapping[str, LocalProcess], alphabet: DistributedAlphabet) -> AsyncAutomaton:
    """
    Parallel composition of local automata.

    ``delta(a)`` is defined on a state tuple iff every process of ``dom(a)`` has an
    ``a``-transition from its component.

    Raises:
        ActionOutsideAlphabet: When a process uses an action outside its alphabet.
    """
    for process, local in procs.items():
        stray = local.actions - alphabet.actions_of(process)
        if stray:
            raise ActionOutsideAlphabet(f"process {process!r} uses actions outside its alphabet: {sorted(stray)}")
    moves = {}
    for process, local in procs.items():
        for source, action, target in local.transitions:
            moves.setdefault((process, action), []).append((source, target))

    delta = {}
    for action in sorted(alphabet.actions):
        dom = alphabet.domain(action)
        options = [moves.get((process, action), []) for process in dom]
        delta[action] = {
            tuple(source for source, _ in combo): tuple(target for _, target in combo)
            for combo in product(*options)
        }
    automaton = AsyncAutomaton(
        alphabet=alphabet,
        local_states={process: local.states for process, local in procs.items()},
        initial={process: local.initial for process, local in procs.items()},
        delta=delta,
    )
    logging.debug(f"Composed {len(procs)} local processes OK")
    return automaton


def restrict(aut: AsyncAutomaton, state: GlobalState, action: str) -> tuple[str, ...]:
    return tuple(state[process] for process in aut.alphabet.domain(action))


def is_defined(aut: AsyncAutomaton, state: GlobalState, action: str) -> bool:
    return restrict(aut, state, action) in aut.delta[action]


def step(aut: AsyncAutomaton, state: Mapping[str, str], action: str) -> GlobalState:
    """
    Execute ``action`` from ``state``: processes in dom(a) move by delta(a), others stay.

    Raises:
        UnknownAction: When ``action`` is not in the alphabet.
        NotDefined: When delta(a) is undefined on the dom(a)-restriction of ``state``.
    """
    if action not in aut.delta:
        raise UnknownAction(action)
    state = global_state(state) if not isinstance(state, GlobalState) else state
    source = restrict(aut, state, action)
    target = aut.delta[action].get(source)
    if target is None:
        raise NotDefined(action, source)
    updated = dict(state)
    updated.update(zip(aut.alphabet.domain(action), target))
    return global_state(updated)


def enabled(aut: AsyncAutomaton, state: GlobalState) -> tuple[str, ...]:
    return tuple(a for a in sorted(aut.delta) if is_defined(aut, state, a))


def enabled_local(aut: AsyncAutomaton, process: str, state: str) -> frozenset[str]:
    """en(s): the actions with a defined transition leaving local state ``state``."""
    return aut.outgoing.get((process, state), frozenset())


def run(aut: AsyncAutomaton, word: Iterable[str], state: GlobalState = None) -> GlobalState:
    state = aut.initial if state is None else state
    for action in word:
        state = step(aut, state, action)
    return state


def global_state_of(aut: AsyncAutomaton, trace: Trace) -> GlobalState:
    """state<u>: every linearization of a trace leads to the same global state."""
    return run(aut, trace.word)


def plays_upto(aut: AsyncAutomaton, bound: int) -> frozenset[Trace]:
    """All plays with at most ``bound`` actions, as traces; prefix-closed."""
    start = empty(aut.alphabet)
    plays = {start: aut.initial}
    frontier = deque([start])
    while frontier:
        trace = frontier.popleft()
        if len(trace) >= bound:
            continue
        state = plays[trace]
        for action in enabled(aut, state):
            successor = extend(trace, action)
            if successor not in plays:
                plays[successor] = step(aut, state, action)
                frontier.append(successor)
    return frozenset(plays)
