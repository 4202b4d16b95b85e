"""Exceptions raised by the game translation library.

Every error derives from :class:`GameBridgeError`, which itself is a ``ValueError`` so that
callers treating malformed input generically keep working.
"""


class GameBridgeError(ValueError):
    """Root of all library errors."""


class ValidationError(GameBridgeError):
    """An object violates one of its structural invariants.

    Attributes:
        clause (str): Short name of the violated clause, e.g. ``"flow-endpoint"``.
    """

    def __init__(self, clause: str, message: str):
        super().__init__(f"[{clause}] {message}")
        self.clause = clause


class ParseError(GameBridgeError):
    """A textual game file could not be parsed.

    Attributes:
        line (int): 1-based line number.
        column (int): 1-based column of the offending token.
    """

    def __init__(self, message: str, line: int, column: int = 1, path: str | None = None):
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.path = path


class NotEnabled(GameBridgeError):
    def __init__(self, transition: str):
        super().__init__(f"Transition {transition!r} is not enabled")
        self.transition = transition


class UnknownTransition(GameBridgeError):
    def __init__(self, transition: str):
        super().__init__(f"Unknown transition {transition!r}")
        self.transition = transition


class UnknownNode(GameBridgeError):
    def __init__(self, node: str):
        super().__init__(f"Unknown node {node!r}")
        self.node = node


class UnknownAction(GameBridgeError):
    def __init__(self, action: str):
        super().__init__(f"Unknown action {action!r}")
        self.action = action


class NegativeMarking(GameBridgeError):
    """Multiset subtraction would leave a negative count."""


class BoundExceeded(GameBridgeError):
    """An exhaustive exploration hit the configured state cap."""

    def __init__(self, cap: int, what: str = "states"):
        super().__init__(f"Exploration exceeded the cap of {cap} {what}")
        self.cap = cap


StateCapExceeded = BoundExceeded


class NotOneBounded(GameBridgeError):
    pass


class NotConcurrencyPreserving(GameBridgeError):
    pass


class ActionOutsideAlphabet(GameBridgeError):
    pass


class NotDefined(GameBridgeError):
    """The partial transition function of an action is undefined on a state."""

    def __init__(self, action: str, states: tuple):
        super().__init__(f"delta({action}) is undefined on {states}")
        self.action = action
        self.states = states


class SizeLimit(GameBridgeError):
    """A brute-force search space exceeds the configured search cap."""


class IncompatibleFamily(GameBridgeError):
    pass


class InvalidDistribution(GameBridgeError):
    pass


class NonReachabilityObjective(GameBridgeError):
    pass


class NonSafetyObjective(GameBridgeError):
    pass


class ReconstructionAssertionFailed(GameBridgeError):
    """A reconstructed play is not a play of the translated control game."""


class AssumptionViolated(GameBridgeError):
    pass


class MalformedFormula(GameBridgeError):
    pass


class AmbiguousLabel(GameBridgeError):
    """More than one copy of a base transition is enabled in a branching process."""


class Undecided(GameBridgeError):
    """A partial decision table was asked for a key it does not hold yet.

    Attributes:
        key (tuple): The missing key; solvers branch on it.
    """

    def __init__(self, key: tuple):
        super().__init__(f"No decision for {key}")
        self.key = key


class IdCollision(GameBridgeError):
    """Two different nodes hashed to the same generated id."""

    def __init__(self, node: str):
        super().__init__(f"Generated id {node!r} already names a different node")
        self.node = node
