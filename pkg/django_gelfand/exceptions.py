"""
Numerical failures raised by the solvers.

Input problems (bad graphs, bad spec strings, out of range arguments) are
reported with django.core.exceptions.ValidationError instead; everything in
this module means the input was fine but the computation did not succeed.
"""


class GelfandError(Exception):
    """Base class for numerical failures."""


class Diverged(GelfandError):
    """The monotone iteration left every admissible bound: evidence that λ > λ*."""

    def __init__(self, lam: float, iterations: int, norm: float, reason: str = 'cap'):
        self.lam = lam
        self.iterations = iterations
        self.norm = norm
        self.reason = reason
        super().__init__(
            f"diverged: lambda exceeds lambda_star (lambda={lam:.12g}, "
            f"iterations={iterations}, norm={norm:.6g}, reason={reason})"
        )

    def __reduce__(self):
        return self.__class__, (self.lam, self.iterations, self.norm, self.reason)


class NoConvergence(GelfandError):
    """Newton did not reach the residual tolerance."""

    def __init__(self, message: str, fold: bool = False, residual: float = float('nan')):
        self.fold = fold
        self.residual = residual
        super().__init__(message)

    def __reduce__(self):
        return self.__class__, (str(self), self.fold, self.residual)


class EigenSolverError(GelfandError):
    pass


class SingularSystem(GelfandError):
    pass


class NonMonotonePredicate(GelfandError):
    """Solvability was observed above a λ where the iteration diverged."""
