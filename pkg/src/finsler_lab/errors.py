"""Exception types shared across the package."""


class FinslerLabError(Exception):
    pass


class DomainViolation(FinslerLabError, ValueError):
    """A radicand, denominator or positivity requirement failed."""


class NonFiniteValue(FinslerLabError, ArithmeticError):
    pass


class SingularMetric(FinslerLabError):
    pass


class SingularDirection(DomainViolation):
    """Evaluation too close to y = +-b, where the square-type metrics degenerate."""


class BranchUndefined(DomainViolation):
    pass


class NoRealRoot(FinslerLabError):
    pass


class QuadratureFailure(FinslerLabError):
    pass


class NotProjectivelyFlat(FinslerLabError):
    pass


class DegenerateFlag(FinslerLabError):
    pass


class UnsupportedSignature(FinslerLabError):
    pass
