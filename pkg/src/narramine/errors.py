"""Exception types shared across the package."""


class NarramineError(Exception):
    """Base class for all package errors."""


# --- graph model ---

class MissingNode(NarramineError):
    pass


class MissingNarrative(NarramineError):
    pass


class UnknownPredicate(NarramineError):
    pass


class EndpointNotEvent(NarramineError):
    pass


class SelfLoopRejected(NarramineError):
    pass


class CycleDetected(NarramineError):
    pass


class UnknownViewpoint(NarramineError):
    pass


# --- backends ---

class BackendUnavailable(NarramineError):
    pass


class UnparseableAnswer(NarramineError):
    pass


class EmptyTimeline(NarramineError):
    pass


class DimensionMismatch(NarramineError):
    pass


class ZeroVector(NarramineError):
    pass


# --- clustering ---

class InvalidParams(NarramineError):
    pass


class InvalidThreshold(NarramineError):
    pass


# --- mining ---

class EmptyViewpointCollection(NarramineError):
    pass


class NoDocumentsDetected(NarramineError):
    pass


# --- binding ---

class SourceUnavailable(NarramineError):
    pass


class AlreadyBound(NarramineError):
    pass
