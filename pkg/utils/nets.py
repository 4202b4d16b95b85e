import logging
from collections import deque
from typing import Iterable, Optional

import networkx as nx
import numpy as np

from models.nets import Marking, PetriNet
from models.reports import NetReport
from utils.config import resolve
from utils.errors import BoundExceeded, NotEnabled, UnknownTransition


def fire(net: PetriNet, marking: Marking, transition: str) -> Marking:
    """
    Fire ``transition`` in ``marking``.

    Arguments:
        net (PetriNet): The net.
        marking (Marking): Current marking.
        transition (str): Transition id.

    Returns:
        Marking: ``marking - pre(t) + post(t)``.

    Raises:
        UnknownTransition: When the net has no such transition.
        NotEnabled: When ``pre(t)`` is not covered by the marking.
    """
    if transition not in net.transitions:
        raise UnknownTransition(transition)
    if not marking.covers(net.pre[transition]):
        raise NotEnabled(transition)
    return marking - net.pre[transition] + net.post[transition]


def fire_sequence(net: PetriNet, sequence: Iterable[str], marking: Optional[Marking] = None) -> Marking:
    marking = net.initial if marking is None else marking
    for transition in sequence:
        marking = fire(net, marking, transition)
    return marking


def is_final(net: PetriNet, marking: Marking) -> bool:
    """True iff no transition is enabled in ``marking``."""
    return not any(marking.covers(net.pre[t]) for t in net.transitions)


def reachability_graph(
    net: PetriNet,
    bound: Optional[int] = None,
    state_cap: Optional[int] = None,
) -> nx.MultiDiGraph:
    """
    Breadth-first reachability graph.

    Nodes are markings, edges carry the fired transition in the ``label`` attribute.
    With ``bound=None`` the exploration runs to a fixpoint and raises ``BoundExceeded``
    when more than ``state_cap`` markings are found; with a bound it stops after
    ``bound`` firings.
    """
    state_cap = resolve(state_cap, "state_cap")
    graph = nx.MultiDiGraph()
    graph.add_node(net.initial, level=0)
    queue = deque([net.initial])
    while queue:
        marking = queue.popleft()
        level = graph.nodes[marking]["level"]
        if bound is not None and level >= bound:
            continue
        for transition in net.enabled(marking):
            successor = fire(net, marking, transition)
            if successor not in graph:
                if bound is None and graph.number_of_nodes() >= state_cap:
                    raise BoundExceeded(state_cap, "markings")
                graph.add_node(successor, level=level + 1)
                queue.append(successor)
            graph.add_edge(marking, successor, key=transition, label=transition)
    return graph


def reachable_markings(
    net: PetriNet,
    bound: Optional[int] = None,
    state_cap: Optional[int] = None,
) -> frozenset[Marking]:
    """All markings reachable within ``bound`` firings, or R(N) when ``bound`` is None."""
    return frozenset(reachability_graph(net, bound=bound, state_cap=state_cap).nodes)


def incidence_matrix(net: PetriNet) -> np.ndarray:
    """Place-by-transition matrix ``post - pre`` with rows and columns in sorted id order."""
    places = sorted(net.places)
    transitions = sorted(net.transitions)
    matrix = np.zeros((len(places), len(transitions)), dtype=int)
    row = {place: i for i, place in enumerate(places)}
    for j, transition in enumerate(transitions):
        for place, count in net.post[transition].counts.items():
            matrix[row[place], j] += count
        for place, count in net.pre[transition].counts.items():
            matrix[row[place], j] -= count
    return matrix


def is_concurrency_preserving(net: PetriNet) -> bool:
    if not net.transitions:
        return True
    return bool(np.all(incidence_matrix(net).sum(axis=0) == 0))


def is_one_bounded(net: PetriNet, state_cap: Optional[int] = None) -> bool:
    """Fixpoint check that no reachable marking holds two tokens on one place."""
    state_cap = resolve(state_cap, "state_cap")
    if not net.initial.is_set():
        return False
    seen = {net.initial}
    queue = deque(seen)
    while queue:
        marking = queue.popleft()
        for transition in net.enabled(marking):
            successor = fire(net, marking, transition)
            if not successor.is_set():
                return False
            if successor not in seen:
                if len(seen) >= state_cap:
                    raise BoundExceeded(state_cap, "markings")
                seen.add(successor)
                queue.append(successor)
    return True


def validate_net(net: PetriNet, state_cap: Optional[int] = None) -> NetReport:
    """
    Report 1-boundedness, concurrency preservation and set-likeness of ``net``.

    Violations are listed, never raised. When the state cap stops the 1-boundedness
    fixpoint the field stays None and a warning is logged.
    """
    report = NetReport(
        concurrency_preserving=is_concurrency_preserving(net),
        set_like=net.is_set_like(),
    )
    if not report.concurrency_preserving:
        for transition in sorted(net.transitions):
            if len(net.pre[transition]) != len(net.post[transition]):
                report.add(
                    "concurrency-preserving",
                    f"{transition}: |pre|={len(net.pre[transition])} |post|={len(net.post[transition])}",
                )
    if not report.set_like:
        report.add("set-like", "some arc has multiplicity above one")
    try:
        report.one_bounded = is_one_bounded(net, state_cap=state_cap)
        if report.one_bounded:
            report.reachable = len(reachable_markings(net, state_cap=state_cap))
        else:
            report.add("one-bounded", "a reachable marking holds two tokens on one place")
    except BoundExceeded as error:
        logging.warning(f"1-boundedness of {net.name} undecided: {error}")
    return report
