"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its documented domain."""


class UnsupportedSpecError(ValueError):
    """The operation does not support this process family."""


class CoverageError(ValueError):
    """A sequence does not cover the indices the operation needs."""


class ProvenanceError(ValueError):
    """The input's provenance (exact vs Monte Carlo) is wrong for this check."""


class ResourceError(RuntimeError):
    """The request cannot be honoured within the memory/precision budget."""


class InputError(ValueError):
    """A caller-supplied accessor or table violates its stated contract."""
