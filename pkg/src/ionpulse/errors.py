"""Exception types shared across the library.

The CLI maps these onto process exit codes: configuration problems exit
with 2, infeasible gate designs with 3, numerical-convergence failures
with 4.
"""


class IonpulseError(Exception):
    """Base class for all library errors."""


class ConfigError(IonpulseError):
    """Invalid configuration document or physically inconsistent inputs.

    Collects every validation failure so a user can fix them in one pass.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ZigzagInstabilityError(ConfigError):
    """Transverse confinement too weak for a linear chain (zigzag onset)."""

    def __init__(self, message, critical_anisotropy):
        super().__init__(message)
        self.critical_anisotropy = critical_anisotropy


class InfeasibleDesignError(IonpulseError):
    """A pulse satisfying the requested constraints does not exist."""


class NullSpaceEmptyError(InfeasibleDesignError):
    """Closure constraint matrix has full column rank; no pulse closes all modes."""


class ZeroChiError(InfeasibleDesignError):
    """Candidate pulse accumulates no entangling phase, so it cannot be scaled."""


class DegenerateDetuningError(InfeasibleDesignError):
    """Drive detuning sits on (or too close to) a motional mode frequency."""


class ConvergenceError(IonpulseError):
    """An iterative numerical procedure failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
