"""
Brute-force synthesis for desk-scale games.

Both solvers grow a partial decision table: the winning check runs under the table
and every time it asks for a missing decision the search branches over all choices for
that key. ``None`` means no winner exists among the finite-memory candidates tried,
which is not a proof that the game is lost.
"""
import logging
from typing import Optional

from tqdm import tqdm

from models.games import ControlGame, MemoryController, MemoryPolicy, PetriGame, Strategy
from models.reports import Verdict
from utils.automata import enabled_local
from utils.config import get_settings, resolve
from utils.errors import SizeLimit, Undecided
from utils.games import controller_winning_bounded, materialize, rule_winning
from utils.translate_pg2cg import subsets


def _search(name: str, build, check, options, search_cap: int) -> Optional[dict]:
    stack = [{}]
    tried = 0
    with tqdm(desc=f"solving {name}", unit="candidate", disable=not get_settings().progress) as bar:
        while stack:
            table = stack.pop()
            tried += 1
            bar.update()
            if tried > search_cap:
                raise SizeLimit(f"more than {search_cap} candidates for {name}")
            try:
                report = check(build(table))
            except Undecided as missing:
                # smallest sets are pushed first so the most permissive choice is tried first
                for chosen in sorted(options(missing.key), key=len):
                    stack.append({**table, missing.key: chosen})
                continue
            if report.verdict == Verdict.WINNING:
                logging.info(f"Winning table for {name} found after {tried} candidates OK")
                return table
    logging.info(f"No winning table for {name} among {tried} candidates")
    return None


def solve_pg(
    g: PetriGame,
    depth: Optional[int] = None,
    decision_memory: int = 0,
    search_cap: Optional[int] = None,
) -> Optional[Strategy]:
    """
    Search strategies deciding on a system place and the last ``decision_memory`` labels of its causal past.

    The winning check and the returned strategy are bounded by ``depth``; memory policies
    are finite-state, so their check closes before the bound.

    Raises:
        SizeLimit: When more than ``search_cap`` candidates are tried.
    """
    search_cap = resolve(search_cap, "search_cap")

    def options(key):
        place, _ = key
        return subsets(g.net.postset(place))

    table = _search(
        g.name,
        lambda table: MemoryPolicy(decision_memory, table),
        lambda policy: rule_winning(g, policy, depth=depth),
        options,
        search_cap,
    )
    if table is None:
        return None
    return materialize(g, MemoryPolicy(decision_memory, table, default=()), depth=depth)


def solve_cg(
    c: ControlGame,
    bound: Optional[int] = None,
    view_memory: int = 0,
    search_cap: Optional[int] = None,
) -> Optional[MemoryController]:
    """
    Search controllers deciding on the local state and the last ``view_memory`` actions of the causal memory.

    Raises:
        SizeLimit: When more than ``search_cap`` candidates are tried.
    """
    search_cap = resolve(search_cap, "search_cap")

    def options(key):
        process, state, _ = key
        return subsets(enabled_local(c.automaton, process, state) & c.controllable)

    table = _search(
        c.name,
        lambda table: MemoryController(c, view_memory, table),
        lambda controller: controller_winning_bounded(c, controller, bound),
        options,
        search_cap,
    )
    if table is None:
        return None
    return MemoryController(c, view_memory, table, default=())
