"""Exception hierarchy shared by the library and the CLI."""


class IssCertifyError(Exception):
    """Base class for every fault raised by this package."""


class PreconditionError(IssCertifyError, ValueError):
    """An operation was called with arguments outside its contract."""


class InfeasibleError(IssCertifyError):
    """Splitting constants cannot satisfy the decay-rate inequalities."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class SolverError(IssCertifyError):
    """A time integration failed.

    ``kind`` is one of ``"instability"``, ``"singular_row"`` or ``"dt_guard"``.
    """

    def __init__(self, kind, message, step=None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.step = step


class ConfigError(IssCertifyError):
    """A configuration document failed to parse or validate.

    ``location`` is a JSON pointer (``/coefficients/a``) or a dotted field name.
    """

    def __init__(self, message, location=""):
        super().__init__(message)
        self.location = location
