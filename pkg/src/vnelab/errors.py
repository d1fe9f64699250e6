"""Exception types shared across the package."""


class VneError(Exception):
    """Base class for vnelab errors."""


class UnknownNodeError(VneError, KeyError):
    """A node id was queried that does not exist in the network."""


class InfeasibleAllocationError(VneError):
    """An embedding could not be allocated; the network was left unchanged."""


class ReleaseError(VneError):
    """Release of an embedding that is not currently allocated."""


class IncompleteEmbeddingError(VneError):
    """An embedding does not cover every node and link of its request."""


class ConvergenceError(VneError):
    """An iterative solver hit its iteration cap.

    Carries the residual achieved at the cap in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EpisodeError(VneError):
    """An episode trace is internally inconsistent (e.g. zero-probability action)."""


class ConfigError(VneError):
    """A scenario/agent config file could not be parsed."""


class GenerationError(VneError):
    """Random topology generation exhausted its retry budget."""


class FormatError(VneError):
    """A substrate/request/checkpoint file is malformed."""
