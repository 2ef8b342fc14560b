class DomainError(ValueError):
    """Argument outside the domain of a modulus or estimator."""


class PreconditionError(ValueError):
    """Inputs violate an operation's stated preconditions."""


class NotFound(LookupError):
    """No witness below the search cap.

    ``stage`` is the construction stage that failed (None for a bare
    witness search) and ``partial`` holds the stages completed before it.
    """

    def __init__(self, message, stage=None, partial=()):
        super().__init__(message)
        self.stage = stage
        self.partial = tuple(partial)
