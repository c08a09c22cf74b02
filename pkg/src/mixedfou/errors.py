"""Error taxonomy shared across the package.

Precondition violations raise plain ValueError.  Failures of the numerics
themselves (singular solves, non-finite states, Laplace-transform blow-up)
raise subclasses of NumericalError so callers, and the command line driver
in particular, can tell the two apart.
"""


class NumericalError(RuntimeError):
    """A computation failed for numerical reasons, not bad arguments."""


class KernelSolveError(NumericalError):
    """The discretized kernel operator could not be inverted."""


class NonFiniteStateError(NumericalError):
    """A recursion produced NaN or infinity.

    Attributes
    ----------
    step : int
        Index of the grid step where the state first became non-finite.
    """

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class DeterminantError(NumericalError):
    """det Xi_1 dropped to zero or below along a Laplace integration."""


class SpectrumError(NumericalError):
    """An eigenvalue pattern violated what the calculation requires."""


class ExperimentError(NumericalError):
    """Too many replications failed for the summary to be trustworthy."""
