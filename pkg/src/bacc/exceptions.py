"""Exception hierarchy.

Every error raised by the package derives from :class:`BACCError`, which is a
``ValueError`` so that callers validating user input can catch the builtin.
"""


class BACCError(ValueError):
    """Base class for all package errors."""


class InvalidParameterError(BACCError):
    pass


class InvalidIntervalError(BACCError):
    pass


class DegenerateNodesError(BACCError):
    """Two interpolation nodes coincide (within tolerance)."""


class UnsupportedKindError(BACCError):
    pass


class NodeCoincidenceError(BACCError):
    """An evaluation point falls on an interpolation node where a pole-free
    quantity is undefined."""


class InvalidInputError(BACCError):
    pass


class ShapeMismatchError(BACCError):
    pass


class OutOfRegimeError(BACCError):
    """Parameters fall outside the range where a closed-form bound holds."""


class RecoveryThresholdError(BACCError):
    """Too few worker results for an exact (Lagrange) decode."""


class EmptySurvivorSetError(BACCError):
    pass


class InvalidPartitionError(BACCError):
    pass


class InfeasibleLayoutError(BACCError):
    pass
