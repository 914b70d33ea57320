"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for simulator-specific errors."""


class EmptyActiveSetError(SimulationError):
    """A query or estimator was asked to run against zero active nodes."""


class DegenerateDistanceError(SimulationError):
    """Two distinct nodes occupy the same position, making 1/distance undefined."""


class GiniUndefinedError(SimulationError):
    """Gini index is undefined (fewer than two values, or all values zero)."""


class TargetOrderError(SimulationError):
    """Requested neighbor order k is outside the domain of a target distance function."""
