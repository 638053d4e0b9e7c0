"""Exception and warning types shared across the package."""


class SynchronyError(Exception):
    """Base class for all errors raised by synchrony."""


class DegenerateBeliefs(SynchronyError, ValueError):
    """The two belief parameters coincide, so the closed form is undefined."""


class NoInteriorEquilibrium(UserWarning):
    """The numeric equilibrium search found no root with small residual."""


class InvalidDegree(SynchronyError, ValueError):
    pass


class ConstructionFailed(SynchronyError, RuntimeError):
    pass


class ParseError(SynchronyError, ValueError):
    pass


class SelfLoop(ParseError):
    pass


class DuplicateEdge(ParseError):
    pass


class DisconnectedGraphWarning(UserWarning):
    pass


class DisconnectedGraph(SynchronyError, ValueError):
    pass


class BadInitialActors(SynchronyError, ValueError):
    pass


class StateShapeError(SynchronyError, ValueError):
    pass


class EmptySchedule(SynchronyError, ValueError):
    pass


class NoTransition(SynchronyError, ValueError):
    pass


class UnknownAxis(SynchronyError, KeyError):
    pass


class SweepSpecError(SynchronyError, ValueError):
    pass


class NegativeCount(ParseError):
    pass


class TooFewAccepted(SynchronyError, RuntimeError):
    pass


class DegenerateBandwidth(SynchronyError, ValueError):
    pass


class ChainStuck(SynchronyError, RuntimeError):
    pass


class ConfigError(SynchronyError, ValueError):
    """Invalid configuration file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
