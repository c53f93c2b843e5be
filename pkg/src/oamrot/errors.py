"""Exception hierarchy.

Input errors subclass ValueError; numeric-domain failures (a valid request the
model cannot answer) subclass DomainError so the CLI can map them to distinct
exit codes.
"""


class DomainError(ArithmeticError):
    """A well-formed request that has no answer in the model's valid domain."""


class OutsideMonotoneBranch(DomainError):
    pass


class InsensitiveOperatingPoint(DomainError):
    pass


class NoCrossing(DomainError):
    pass


class DegenerateMask(DomainError):
    pass


class AmbiguousPeak(DomainError):
    pass


class PGMFormatError(ValueError):
    pass
