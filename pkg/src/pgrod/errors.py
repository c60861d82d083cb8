"""Exception types raised by the rod library."""


class RodError(Exception):
    """Base class for all library errors."""


class AngleAtPi(RodError, ValueError):
    """Relative rotation angle reached the logarithm singularity at pi."""


class TangentSingular(RodError, ValueError):
    """Inverse tangent map evaluated at a rotation angle of 2*pi*k, k >= 1."""


class NotSkewSymmetric(RodError, ValueError):
    pass


class NoConvergence(RodError, RuntimeError):
    """Newton iterations exhausted without meeting the residual tolerance."""

    def __init__(self, step, iterations, residual_norm):
        self.step = step
        self.iterations = iterations
        self.residual_norm = residual_norm
        super().__init__(
            f"Newton method did not converge in load step {step} after "
            f"{iterations} iterations (max residual {residual_norm:.3e})"
        )


class StepSizeUnderflow(RodError, RuntimeError):
    pass


class ConfigError(RodError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending key."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
