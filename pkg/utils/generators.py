"""Parametric families: the 3-SAT hardness gadget and the two exponential lower-bound games."""
import logging
from typing import Iterable, Sequence

from models.automata import LocalProcess
from models.games import ControlGame, Objective, PetriGame
from models.nets import PetriNet
from models.traces import DistributedAlphabet
from utils.automata import compose_local
from utils.errors import MalformedFormula


def parse_formula(text: str) -> list[tuple[int, int, int]]:
    """
    Read clauses written as ``(1,-2,3)(2,2,-1)``; literal ``i`` is x_i and ``-i`` its negation.

    Raises:
        MalformedFormula: When a clause is not a triple of non-zero integers.
    """
    clauses = []
    for chunk in text.replace(" ", "").split(")"):
        if not chunk:
            continue
        body = chunk.lstrip(",(")
        try:
            literals = tuple(int(x) for x in body.split(","))
        except ValueError:
            raise MalformedFormula(f"clause {chunk!r} is not a list of integers")
        clauses.append(literals)
    return _checked(clauses)


def _checked(formula: Iterable[Sequence[int]]) -> list[tuple[int, int, int]]:
    clauses = [tuple(clause) for clause in formula]
    if not clauses:
        raise MalformedFormula("a formula needs at least one clause")
    for clause in clauses:
        if len(clause) != 3 or any(not isinstance(x, int) or x == 0 for x in clause):
            raise MalformedFormula(f"clause {clause} is not three non-zero literals")
    return clauses


def _literal(x: int) -> str:
    return f"x{x}" if x > 0 else f"nx{-x}"


def satisfiable(formula: Iterable[Sequence[int]]) -> bool:
    """Truth-table satisfiability, for cross-checking the gadget on tiny formulas."""
    clauses = _checked(formula)
    n = max(abs(x) for clause in clauses for x in clause)
    for assignment in range(2 ** n):
        if all(any(bool(assignment >> (abs(x) - 1) & 1) == (x > 0) for x in clause) for clause in clauses):
            return True
    return False


def gen_3sat_net(formula: Iterable[Sequence[int]]) -> PetriNet:
    """
    The reduction net of a 3-CNF formula with n variables and m clauses.

    Every variable ``i`` has a transition ``t{i}`` moving the tokens of ``top`` and ``bot``
    onto ``x{i}`` and ``nx{i}``; the part receiving ``x{i}`` fixes the truth value. Clause
    ``C{j}`` consumes its literal places and produces ``V{j}`` with two fillers so that
    ``V{j}`` may sit with either truth part when the clause is mixed. The transitions
    ``g{j}xy``, ``g{j}xh`` and ``g{j}yh`` read ``V{j}``, ``V{j+1}`` and the helper ``h{j}``
    pairwise; they close a cycle in the communication graph unless ``V{j}`` and ``V{j+1}``
    share a part. The net has 2n + 4m + 1 places and n + 4m - 3 transitions.

    Raises:
        MalformedFormula: When a clause is not three non-zero literals.
    """
    clauses = _checked(formula)
    n = max(abs(x) for clause in clauses for x in clause)
    m = len(clauses)
    places = ["top", "bot"]
    transitions, arcs = [], []
    for i in range(1, n + 1):
        places += [f"x{i}", f"nx{i}"]
        transitions.append(f"t{i}")
        arcs += [("top", f"t{i}"), ("bot", f"t{i}"), (f"t{i}", f"x{i}"), (f"t{i}", f"nx{i}")]
    for j, clause in enumerate(clauses, start=1):
        produced = [f"V{j}", f"f{j}a", f"f{j}b"]
        places += produced
        transitions.append(f"C{j}")
        arcs += [(literal, f"C{j}") for literal in sorted({_literal(x) for x in clause})]
        arcs += [(f"C{j}", place) for place in produced]
    for j in range(1, m):
        places.append(f"h{j}")
        for name, (left, right) in {
            f"g{j}xy": (f"V{j}", f"V{j + 1}"),
            f"g{j}xh": (f"V{j}", f"h{j}"),
            f"g{j}yh": (f"V{j + 1}", f"h{j}"),
        }.items():
            transitions.append(name)
            arcs += [(left, name), (right, name), (name, left), (name, right)]
    initial = ["top", "bot"] + [f"h{j}" for j in range(1, m)]
    net = PetriNet.build(places, transitions, arcs, initial, name=f"sat{n}x{m}")
    logging.info(f"3-SAT gadget built OK ({len(net.places)} places, {len(net.transitions)} transitions)")
    return net


def gen_lower_bound_pg(n: int) -> PetriGame:
    """
    Two slices sharing ``t1 .. tn``.

    The environment token moves from ``A`` to ``B`` by ``a`` or ``b`` and then to the
    winning place ``C`` by any ``t{i}``; the system token rests on the winning place ``D``
    and takes part in every ``t{i}`` without moving.
    """
    if n < 1:
        raise ValueError("the lower-bound family starts at n = 1")
    names = [f"t{i}" for i in range(1, n + 1)]
    arcs = [("A", "a"), ("A", "b"), ("a", "B"), ("b", "B")]
    for t in names:
        arcs += [("B", t), (t, "C"), ("D", t), (t, "D")]
    net = PetriNet.build(["A", "B", "C", "D"], ["a", "b", *names], arcs, ["A", "D"], name=f"lbpg{n}")
    return PetriGame(net, system={"D"}, special={"C", "D"}, objective=Objective.REACHABILITY)


def gen_lower_bound_cg(n: int) -> ControlGame:
    """One process moving from ``s0`` to ``s1`` by the uncontrollable ``x`` or a controllable ``a{i}``."""
    if n < 1:
        raise ValueError("the lower-bound family starts at n = 1")
    actions = ["x"] + [f"a{i}" for i in range(1, n + 1)]
    alphabet = DistributedAlphabet.of({a: {"p1"} for a in actions})
    local = LocalProcess({"s0", "s1"}, "s0", {("s0", a, "s1") for a in actions})
    automaton = compose_local({"p1": local}, alphabet)
    return ControlGame(automaton, controllable=frozenset(actions[1:]), objective=Objective.SAFETY, name=f"lbcg{n}")
