"""Exception hierarchy shared by all modules."""


class FredgraphError(Exception):
    """Base class for every error raised by this package."""


# graph construction / queries
class GraphError(FredgraphError):
    pass


class LoopEdge(GraphError):
    pass


class AntiParallelEdge(GraphError):
    pass


class MultipleEdge(GraphError):
    pass


class IsolatedVertex(GraphError):
    pass


class NonPositiveLength(GraphError):
    pass


class LatticeDegenerate(GraphError):
    pass


class RankMismatch(GraphError):
    pass


class Unreachable(GraphError):
    pass


class EpsilonTooLarge(GraphError):
    pass


# coefficient functions
class MissingLimit(FredgraphError):
    pass


class OutOfDomain(FredgraphError):
    pass


class NoConvergentSubsequence(FredgraphError):
    pass


# symbols and quadrature
class DerivativeUnavailable(FredgraphError):
    pass


class GridTooCoarse(FredgraphError):
    pass


class QuadratureDiverged(FredgraphError):
    pass


class StripViolation(FredgraphError):
    pass


class SymbolPole(FredgraphError):
    pass


class PointIsVertex(FredgraphError):
    pass


# assembly / floquet
class BandRadiusTooSmall(FredgraphError):
    pass


class DecayViolation(FredgraphError):
    pass


class NotPeriodic(FredgraphError):
    pass


class OffTorus(FredgraphError):
    pass


class WeightOutOfClass(FredgraphError):
    pass


class SpecFormatError(FredgraphError):
    """Malformed JSON graph/operator description."""
