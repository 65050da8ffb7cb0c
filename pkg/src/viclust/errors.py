"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for every error this package raises on purpose."""


class DataError(PipelineError):
    """Malformed, inconsistent, or contract-violating input data."""


class GeometryError(PipelineError):
    """Invalid boundary geometry or adjacency input."""


class DegenerateColumnError(PipelineError):
    """A variable has no variation, or no observed value at all."""


class ConvergenceError(PipelineError):
    """An iterative solver exhausted its iteration budget."""


class MissingIntermediateError(PipelineError):
    """A pipeline step was invoked before its inputs were produced."""
