from typing import Iterable, Mapping, Sequence

from immutabledict import immutabledict

from models.traces import DistributedAlphabet, LabelledPoset, Trace
from utils.errors import UnknownAction


def _lex_normal_form(alphabet: DistributedAlphabet, word: Sequence[str]) -> tuple[str, ...]:
    remaining = list(word)
    result = []
    while remaining:
        best = None
        for i, action in enumerate(remaining):
            if best is not None and action >= remaining[best]:
                continue
            if all(not alphabet.depends(remaining[j], action) for j in range(i)):
                best = i
        result.append(remaining.pop(best))
    return tuple(result)


def normalize(alphabet: DistributedAlphabet, word: Iterable[str]) -> Trace:
    """
    Return the trace of ``word``.

    The normal form is the lexicographically least word equivalent to ``word`` under
    swaps of adjacent independent actions: repeatedly take the least action none of whose
    earlier occurrences it depends on.

    Raises:
        UnknownAction: When the word uses an action outside the alphabet.
    """
    word = tuple(word)
    for action in word:
        if action not in alphabet.dom:
            raise UnknownAction(action)
    return Trace(alphabet, _lex_normal_form(alphabet, word))


def empty(alphabet: DistributedAlphabet) -> Trace:
    return Trace(alphabet, ())


def extend(trace: Trace, action: str) -> Trace:
    return normalize(trace.alphabet, trace.word + (action,))


def projection(trace: Trace, process: str) -> tuple[str, ...]:
    """The subsequence of actions in which ``process`` takes part."""
    return tuple(a for a in trace.word if process in trace.alphabet.dom[a])


def local_view(trace: Trace, process: str) -> Trace:
    """
    view_p(u): the least prefix of ``trace`` holding every action of ``process``.

    Scanning backwards, an occurrence belongs to the view iff its domain meets the set of
    processes collected from the occurrences already kept.
    """
    alphabet = trace.alphabet
    reach = {process}
    kept = []
    for action in reversed(trace.word):
        if not alphabet.dom[action].isdisjoint(reach):
            kept.append(action)
            reach |= alphabet.dom[action]
    kept.reverse()
    return Trace(alphabet, _lex_normal_form(alphabet, kept))


def is_prefix(prefix: Trace, trace: Trace) -> bool:
    """Trace prefix order: every per-process projection of ``prefix`` prefixes the other."""
    for process in trace.alphabet.processes:
        mine = projection(prefix, process)
        if projection(trace, process)[:len(mine)] != mine:
            return False
    return True


def from_projections(alphabet: DistributedAlphabet, projections: Mapping[str, Sequence[str]]) -> Trace:
    """
    Rebuild the trace whose per-process projections are ``projections``.

    Raises:
        ValueError: When the projections disagree on a shared action.
    """
    cursor = {process: 0 for process in alphabet.processes}
    projections = {process: tuple(projections.get(process, ())) for process in alphabet.processes}
    total = sum(len(p) for p in projections.values())
    word = []
    consumed = 0
    while consumed < total:
        ready = set()
        for process, sequence in projections.items():
            if cursor[process] < len(sequence):
                action = sequence[cursor[process]]
                if all(
                    cursor[q] < len(projections[q]) and projections[q][cursor[q]] == action
                    for q in alphabet.dom[action]
                ):
                    ready.add(action)
        if not ready:
            raise ValueError("projections are not consistent with a single trace")
        action = min(ready)
        word.append(action)
        for q in alphabet.dom[action]:
            cursor[q] += 1
        consumed += len(alphabet.dom[action])
    return Trace(alphabet, tuple(word))


def join(*traces: Trace) -> Trace:
    """Least upper bound of prefixes of a common trace (e.g. several local views)."""
    if not traces:
        raise ValueError("join needs at least one trace")
    alphabet = traces[0].alphabet
    longest = {}
    for process in alphabet.processes:
        longest[process] = max((projection(t, process) for t in traces), key=len)
    return from_projections(alphabet, longest)


def poset_of(trace: Trace) -> LabelledPoset:
    """
    The labelled poset of occurrences of ``trace``.

    Elements are ``(action, index)`` pairs, ``index`` counting earlier occurrences of the
    same action; ``x <= y`` iff a chain of dependent occurrences leads from x to y.
    """
    alphabet = trace.alphabet
    seen = {}
    occurrences = []
    for action in trace.word:
        occurrences.append((action, seen.get(action, 0)))
        seen[action] = seen.get(action, 0) + 1
    below = []
    for j, (action, _) in enumerate(occurrences):
        down = {occurrences[j]}
        for i in range(j):
            if alphabet.depends(occurrences[i][0], action):
                down |= below[i]
        below.append(down)
    order = {(x, occurrences[j]) for j in range(len(occurrences)) for x in below[j]}
    return LabelledPoset(
        elements=frozenset(occurrences),
        order=frozenset(order),
        label=immutabledict({x: x[0] for x in occurrences}),
    )


def is_prime(trace: Trace) -> bool:
    """A prime trace has exactly one maximal occurrence."""
    return len(poset_of(trace).maximal()) == 1


def last(trace: Trace) -> str:
    """The action every linearization of a prime trace ends with."""
    maximal = poset_of(trace).maximal()
    if len(maximal) != 1:
        raise ValueError(f"trace {trace} is not prime")
    return next(iter(maximal))[0]
