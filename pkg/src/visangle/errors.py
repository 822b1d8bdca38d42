"""Exception hierarchy shared by all modules."""


class VisangleError(Exception):
    """Base class; the CLI turns these into structured failure reports."""


class ConvexityViolation(VisangleError):
    pass


class PositivityViolation(ConvexityViolation):
    """Support function not strictly positive (origin not interior)."""


class ProjectionError(VisangleError):
    pass


class PointInsideBody(VisangleError):
    pass


class DegenerateTangency(VisangleError):
    pass


class CircleTooSmall(VisangleError):
    pass


class NoBracket(VisangleError):
    pass


class TailTooLarge(VisangleError):
    pass


class SingularAtZero(VisangleError):
    pass


class AlphaOutOfRange(VisangleError):
    pass


class NegativeRadicand(VisangleError):
    pass


class RationalityViolation(VisangleError):
    pass


class PeriodicityViolation(VisangleError):
    pass


class NoIsotopicCircle(VisangleError):
    pass
