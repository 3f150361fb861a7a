"""Exception hierarchy shared by every gwphase module."""


class GWPhaseError(Exception):
    """Base class for numerical failures raised by gwphase."""


class ContractViolation(GWPhaseError, ValueError):
    """Inputs do not satisfy an operation's preconditions."""


class SolverFailure(GWPhaseError):
    """Eigensolver did not reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BlowUpError(GWPhaseError):
    """ODE state became non-finite."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NearDegeneracyError(GWPhaseError):
    pass


class ExceptionalPointError(GWPhaseError):
    """Left and right eigenvectors are (numerically) self-orthogonal."""

    def __init__(self, message, overlap=None):
        super().__init__(message)
        self.overlap = overlap


class BranchCollisionError(GWPhaseError):
    pass


class NonCyclicBranchError(GWPhaseError):
    """A tracked eigenbranch does not return to its initial ray."""

    def __init__(self, message, overlap=None):
        super().__init__(message)
        self.overlap = overlap


class NonCyclicError(GWPhaseError):
    """An optical circuit does not close on its input polarization."""

    def __init__(self, message, overlaps=None):
        super().__init__(message)
        self.overlaps = overlaps
