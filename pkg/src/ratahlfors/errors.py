"""Exception hierarchy shared by all modules."""


class RatAhlforsError(Exception):
    """Base class for every error raised by this package."""


class InvalidMap(RatAhlforsError, ValueError):
    """Coincident poles, zero residues or malformed coefficient arrays."""


class PoleProximity(RatAhlforsError):
    pass


class RootFindFailure(RatAhlforsError):
    pass


class NotGood(RatAhlforsError):
    """An operation requiring an n-good map was handed a map that is not."""


class TraceDivergence(RatAhlforsError):
    pass


class OnCurve(RatAhlforsError):
    pass


class SolverStall(RatAhlforsError):
    pass


class IllConditioned(RatAhlforsError):
    pass


class FlatnessFailure(RatAhlforsError):
    pass


class MapDivergence(RatAhlforsError):
    pass


class NoConvergence(RatAhlforsError):
    pass


class PolePlacement(RatAhlforsError):
    pass


class PathInvalid(RatAhlforsError):
    pass


class Unsupported(RatAhlforsError, NotImplementedError):
    pass
