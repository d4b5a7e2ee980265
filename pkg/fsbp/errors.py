"""Exception hierarchy shared by the fsbp package."""


class FsbpError(Exception):
    """Base class for every error raised by the fsbp package."""


class BasisError(FsbpError, ValueError):
    """Invalid interval, grid, function space or degenerate basis."""


class ParametrizationError(FsbpError, ValueError):
    """Parameter vector or skew matrix that does not fit the requested layout."""


class ConstructionError(FsbpError):
    """The operator construction pipeline could not produce an operator."""


class InfeasibleConstructionError(ConstructionError):
    """All restarts were exhausted with the objective above tolerance.

    ``operator`` and ``params`` hold the least-squares minimizer of the best start.
    """

    def __init__(self, message, report=None, operator=None, params=None):
        super().__init__(message)
        self.report = report
        self.operator = operator
        self.params = params


class VerificationError(FsbpError):
    """A diagnostic quantity could not be computed (e.g. power iteration stalled)."""


class IntegrationError(FsbpError, ValueError):
    """Invalid time step or a non-finite state during time integration."""


class ConfigError(FsbpError, ValueError):
    """Configuration document failed validation.

    ``path`` is the dotted location of the offending field, e.g.
    ``construct.grid.n``.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class OperatorFileError(FsbpError, ValueError):
    """Operator file is unreadable, has the wrong schema or violates an invariant."""
