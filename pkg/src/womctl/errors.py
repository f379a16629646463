"""Exception types shared across the package."""


class WomError(Exception):
    """Base class for all womctl errors."""


class NetworkError(WomError):
    """Base class for communication-graph validation errors."""


class NotStronglyConnected(NetworkError):
    def __init__(self, source: int, target: int):
        self.source = source
        self.target = target
        super().__init__(f"no path from agent {source} to agent {target}")


class NonPositiveDelay(NetworkError):
    pass


class DuplicateLink(NetworkError):
    pass


class ExplicitSelfLoop(NetworkError):
    pass


class ValidationError(WomError):
    """Base class for instance validation errors."""


class DistributionNotNormalized(ValidationError):
    def __init__(self, name: str, total: float):
        self.name = name
        self.total = total
        super().__init__(f"distribution {name} sums to {total!r}, expected 1")


class ShapeMismatch(ValidationError):
    pass


class AgentCountMismatch(ValidationError):
    pass


class DomainMismatch(WomError):
    """Strategy table keys do not match the instance's information schemas."""


class OutOfRange(WomError):
    pass


class IndexOrder(WomError):
    """Inaccessible sets are defined only with respect to equal or higher indices."""


class SchemaMismatch(WomError):
    pass


class CapExceeded(WomError):
    def __init__(self, required: int, cap: int, what: str = "search"):
        self.required = required
        self.cap = cap
        self.what = what
        super().__init__(f"{what} needs {required} candidates, cap is {cap}")


class ImpossibleObservation(WomError):
    """The conditioning event has probability zero under the current belief."""


class ZeroProbabilityCondition(WomError):
    pass


class MissingConditional(WomError):
    """A required conditional belief was not supplied to the factorization check."""
