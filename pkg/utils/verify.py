"""Bounded weak bisimulation between a strategy and a controller."""
import logging
from collections import deque
from typing import Callable, Optional

from models.games import ControlGame, PetriGame, Strategy
from models.reports import BisimVerdict, BisimWitness
from utils.config import resolve
from utils.errors import BoundExceeded
from utils.explore import ControllerLTS, StrategyLTS


class _Side:
    """One transition system seen through an observable relabelling with capped tau runs."""

    def __init__(self, lts, label: Callable[[str], Optional[str]], tau_cap: int):
        self.lts = lts
        self.label = label
        self.tau_cap = tau_cap
        self.overflow = False
        self._moves = {}
        self._closure = {}
        self._weak = {}

    def moves(self, state) -> list:
        if state not in self._moves:
            self._moves[state] = [(self.label(action), target) for action, target in self.lts.successors(state)]
        return self._moves[state]

    def closure(self, state) -> frozenset:
        """States reachable by at most ``tau_cap`` internal moves."""
        if state not in self._closure:
            seen = {state: 0}
            queue = deque([state])
            while queue:
                current = queue.popleft()
                for label, target in self.moves(current):
                    if label is not None or target in seen:
                        continue
                    if seen[current] >= self.tau_cap:
                        self.overflow = True
                        continue
                    seen[target] = seen[current] + 1
                    queue.append(target)
            self._closure[state] = frozenset(seen)
        return self._closure[state]

    def weak(self, state, label: str) -> frozenset:
        """States reachable by ``label`` with internal moves before and after."""
        key = (state, label)
        if key not in self._weak:
            found = set()
            for middle in self.closure(state):
                for observed, target in self.moves(middle):
                    if observed == label:
                        found |= self.closure(target)
            self._weak[key] = frozenset(found)
        return self._weak[key]


def weak_bisim_check(
    g: PetriGame,
    s,
    c: ControlGame,
    ctrl,
    depth: Optional[int] = None,
    pg_label: Optional[Callable[[str], Optional[str]]] = None,
    cg_label: Optional[Callable[[str], Optional[str]]] = None,
    tau_cap: Optional[int] = None,
    state_cap: Optional[int] = None,
) -> BisimWitness:
    """
    Check that a strategy and a controller are weakly bisimilar for ``depth`` observable steps.

    Transitions and actions mapped to None by ``pg_label`` and ``cg_label`` are internal.
    The candidate pairs are those the four transfer clauses generate from the initial
    pair; pairs ``depth`` observable steps away, or where either side ran past what it
    was built for, are assumed related. The relation is then refined to its greatest
    fixpoint.

    Arguments:
        g: The Petri game.
        s: A strategy or a strategy rule for ``g``.
        c: The control game.
        ctrl: A controller for ``c``.
        depth: Observable steps to unroll.
        pg_label: Observable label of a transition; identity by default.
        cg_label: Observable label of an action; identity by default.
        tau_cap: Longest internal run considered; twice the number of processes by default.
        state_cap: Maximum number of candidate pairs.

    Returns:
        BisimWitness: ``pass`` with the relation, ``fail`` with the failed clause and a
        shortest observable path to it, or ``inconclusive`` when an internal run
        outgrew ``tau_cap``.
    """
    depth = resolve(depth, "depth")
    state_cap = resolve(state_cap, "state_cap")
    tau_cap = resolve(tau_cap, "tau_cap")
    if tau_cap is None:
        tau_cap = 2 * len(c.processes)
    rule = s.strategy_rule if isinstance(s, Strategy) else s
    left = _Side(StrategyLTS(g, rule), pg_label or (lambda t: t), tau_cap)
    right = _Side(ControllerLTS(c, ctrl), cg_label or (lambda a: a), tau_cap)

    start = (left.lts.initial, right.lts.initial)
    level = {start: 0}
    parent = {start: None}
    obligations = {}
    cut = set()
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        x, y = pair
        if level[pair] >= depth or left.lts.truncated(x) or right.lts.truncated(y):
            cut.add(pair)
            continue
        cut.discard(pair)
        duties = []
        for label, target in left.moves(x):
            partners = right.closure(y) if label is None else right.weak(y, label)
            duties.append((1 if label is not None else 2, label, [(target, other) for other in partners]))
        for label, target in right.moves(y):
            partners = left.closure(x) if label is None else left.weak(x, label)
            duties.append((3 if label is not None else 4, label, [(other, target) for other in partners]))
        obligations[pair] = duties
        for _, label, successors in duties:
            for successor in successors:
                reached = level[pair] + (label is not None)
                if successor in level and level[successor] <= reached:
                    continue
                if successor not in level and len(level) >= state_cap:
                    raise BoundExceeded(state_cap, "pairs")
                level[successor] = reached
                parent[successor] = (pair, label)
                if label is None:
                    queue.appendleft(successor)
                else:
                    queue.append(successor)

    relation = set(level)
    failed = {}
    changed = True
    while changed:
        changed = False
        for pair in sorted(relation - cut, key=lambda p: level[p], reverse=True):
            for clause, label, successors in obligations[pair]:
                if not any(successor in relation for successor in successors):
                    relation.discard(pair)
                    failed[pair] = (clause, label, not successors)
                    changed = True
                    break

    if start not in relation:
        intrinsic = [pair for pair, (_, _, empty) in failed.items() if empty] or list(failed)
        pair = min(intrinsic, key=lambda p: level[p])
        clause, label, _ = failed[pair]
        path = []
        node = pair
        while parent[node] is not None:
            node, step = parent[node]
            if step is not None:
                path.append(step)
        logging.info(f"Bisimulation fails on clause {clause} after {len(path)} observable steps")
        return BisimWitness(
            verdict=BisimVerdict.FAIL,
            depth=depth,
            clause=clause,
            counterexample=list(reversed(path)),
            unmatched=label or "tau",
        )
    pairs = sorted({(str(left.lts.marking(x)), str(dict(y[0]))) for x, y in relation})
    if left.overflow or right.overflow:
        logging.warning(f"Internal runs longer than {tau_cap} were cut; bisimulation inconclusive")
        return BisimWitness(verdict=BisimVerdict.INCONCLUSIVE, depth=depth, relation=pairs)
    logging.info(f"Bisimulation holds to depth {depth} OK ({len(relation)} pairs)")
    return BisimWitness(verdict=BisimVerdict.PASS, depth=depth, relation=pairs)
