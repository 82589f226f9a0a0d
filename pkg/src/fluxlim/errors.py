"""Exception types raised by the solver."""


class FluxlimError(Exception):
    """Base class for all solver errors."""


class NonFiniteError(FluxlimError, ValueError):
    pass


class PositivityError(FluxlimError):
    """A density dropped below ``-tol_pos``."""


class CFLError(FluxlimError, ValueError):
    """Requested time step exceeds a stability bound."""


class SolverError(FluxlimError):
    """An iterative linear solve failed to converge."""


class BlowUpError(FluxlimError):
    """``max|n|`` exceeded the configured guard."""


class ConfigError(FluxlimError, ValueError):
    """Invalid run configuration.  ``errors`` holds one message per problem."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
