"""Exception hierarchy shared across the package."""


class MinbrainError(Exception):
    """Base class for domain errors (CLI exit status 1)."""


class SchemaError(MinbrainError):
    """Input document does not match the expected JSON layout."""


class DomainMismatch(MinbrainError):
    pass


class NondeterministicInput(MinbrainError):
    pass


class SizeLimit(MinbrainError):
    pass


class PartialMap(MinbrainError):
    pass


class EmptyGoal(MinbrainError):
    pass


class InadmissibleDisturbance(MinbrainError):
    pass


class UndefinedInternalTransition(MinbrainError):
    pass


class HorizonExhausted(MinbrainError):
    pass


class InconsistentObservation(MinbrainError):
    pass


class ZeroEvidence(MinbrainError):
    pass


class ClosureViolation(MinbrainError):
    pass


class SigmaIllDefined(MinbrainError):
    pass


class NotReduced(MinbrainError):
    pass


class ZeroProbabilityHistory(MinbrainError):
    pass


class ImpossibleObservation(MinbrainError):
    pass


class RankDeficientExtensions(MinbrainError):
    pass
