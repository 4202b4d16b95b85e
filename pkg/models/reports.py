from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class Verdict(str, Enum):
    WINNING = "winning"
    NOT_WINNING = "not_winning"
    INCONCLUSIVE = "inconclusive"


class BisimVerdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class Violation(BaseModel):
    """A violated clause together with a human readable explanation."""
    clause: str
    message: str


class Report(BaseModel):
    """Base class for every validation report; ``valid`` is derived from ``violations``."""
    violations: List[Violation] = Field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, clause: str, message: str) -> None:
        self.violations.append(Violation(clause=clause, message=message))


class NetReport(Report):
    """
    Structural facts about a Petri net.

    Attributes:
        one_bounded (bool, optional): None when the state cap stopped the reachability fixpoint.
        concurrency_preserving (bool): |pre(t)| == |post(t)| for every transition.
        set_like (bool): Every flow multiplicity is at most one.
        reachable (int, optional): Number of reachable markings found by the fixpoint.
    """
    one_bounded: Optional[bool] = None
    concurrency_preserving: bool = True
    set_like: bool = True
    reachable: Optional[int] = None


class BranchingReport(Report):
    events: int = 0
    conditions: int = 0


class RefusalReport(Report):
    checked: int = 0


class DistributionReport(Report):
    """
    Clause check of a slice distribution or an SND.

    Attributes:
        members (int): Number of slices or singular nets.
        bounded (bool): True when the state cap cut the reachable markings the
            maximality clause is checked on.
    """
    members: int = 0
    bounded: bool = False


class WinningReport(BaseModel):
    """
    Outcome of a bounded winning check.

    Attributes:
        verdict (Verdict): winning, not_winning or inconclusive.
        reason (str, optional): Why the verdict is not ``winning``.
        witness (list[str]): Labels of a shortest path to the offending state.
        states (int): Number of explored states.
        truncated (int): Number of states cut off by the depth bound.
        exact (bool): True when the explored graph closed, i.e. no bound was hit.
    """
    verdict: Verdict
    reason: Optional[str] = None
    witness: List[str] = Field(default_factory=list)
    states: int = 0
    truncated: int = 0
    exact: bool = False


class BisimWitness(BaseModel):
    """
    Result of a bounded weak-bisimulation check.

    Attributes:
        verdict (BisimVerdict): pass, fail or inconclusive.
        depth (int): Number of observable steps unrolled on both sides.
        relation (list[tuple[str, str]]): Related (strategy state, controller play) pairs.
        clause (int, optional): Transfer clause (1 to 4) that failed.
        counterexample (list[str]): Observable labels leading to the failing pair.
        unmatched (str, optional): The move that could not be matched.
    """
    verdict: BisimVerdict
    depth: int
    relation: List[Tuple[str, str]] = Field(default_factory=list)
    clause: Optional[int] = None
    counterexample: List[str] = Field(default_factory=list)
    unmatched: Optional[str] = None
