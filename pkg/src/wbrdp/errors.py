"""Exception hierarchy shared by the solver, the source constructors and the CLI."""


class InvalidInputError(ValueError):
    """Shapes or values that violate a documented precondition."""


class InvalidParameterError(InvalidInputError):
    """A scalar parameter lies outside its admissible domain."""


class GridMismatchError(InvalidParameterError):
    """The grid spacing does not divide the truncation interval."""


class SourceFormatError(InvalidInputError):
    """A source, support or cost file could not be ingested."""


class DegenerateMarginalError(ValueError):
    """A marginal vanishes where the coupling carries positive mass."""


class InfiniteDivergenceError(ValueError):
    """KL divergence is infinite because the support condition fails."""


class InfeasibleProblemError(ValueError):
    """No channel satisfies the distortion and perception bounds together.

    Attributes
    ----------
    min_distortion : float
        Smallest average distortion reachable under the perception bound.
    """

    def __init__(self, message, min_distortion):
        super().__init__(message)
        self.min_distortion = min_distortion


class NumericalStabilityError(ArithmeticError):
    """Kernel or scaling values left the representable floating-point range.

    Usually cured by a larger regularization or looser thresholds.
    """


class DegenerateStateError(ArithmeticError):
    """An iteration produced a zero denominator or an empty support."""
