"""Exception types raised across the package."""


class PeeringError(Exception):
    """Base class for all errors raised by greedy_peering."""


# graph mutation
class GraphError(PeeringError):
    pass


class SelfLoop(GraphError):
    pass


class AlreadyConnected(GraphError):
    """Either (src, dst) or (dst, src) is already present."""


class SrcOutFull(GraphError):
    pass


class DstInFull(GraphError):
    pass


class NoSuchEdge(GraphError):
    pass


class ConfigMismatch(PeeringError):
    pass


# scores
class BadWeights(PeeringError):
    pass


# constructions
class Infeasible(PeeringError):
    pass


class BadParams(PeeringError):
    pass


class NoStableTopology(PeeringError):
    pass


class ParityInfeasible(PeeringError):
    pass


# analysis
class BudgetExceeded(PeeringError):
    """Raised when a Nash scan would examine more actions than allowed.

    ``nodes_checked`` and ``actions_examined`` describe how far the scan got.
    """

    def __init__(self, message, nodes_checked=0, actions_examined=0):
        super().__init__(message)
        self.nodes_checked = nodes_checked
        self.actions_examined = actions_examined


class HistoryTooShort(PeeringError):
    pass


# harness
class ParseError(PeeringError):
    pass


class ValidationError(PeeringError):
    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)
