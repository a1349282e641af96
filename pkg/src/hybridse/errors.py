"""Exception types shared across the toolkit."""


class HybridseError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(HybridseError, ValueError):
    """Caller passed data that violates a documented precondition."""


class DegenerateInputError(HybridseError, ValueError):
    """Input is formally valid but carries no usable signal (e.g. all zeros)."""


class NumericalError(HybridseError, ArithmeticError):
    """An iterative solve became singular beyond what regularization can fix."""


class WeightFormatError(HybridseError, ValueError):
    """Weight blob is malformed or does not match the model configuration."""


class SceneInfeasibleError(HybridseError, RuntimeError):
    """Scene sampling could not satisfy the geometric constraints."""
