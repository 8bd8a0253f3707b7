"""Exception hierarchy shared by all modules."""


class StratSpecError(Exception):
    """Base class for all errors raised by :mod:`stratspec`."""


class ArgumentError(StratSpecError, ValueError):
    """Raised when an argument violates an operation's precondition."""


class DimensionError(ArgumentError):
    """Raised when matrix shapes are inconsistent."""


class ConvergenceError(StratSpecError):
    """Raised when an iterative method did not converge.

    ``partial`` holds whatever the method managed to compute (for the QR
    eigensolver: the eigenvalues deflated before giving up).
    """

    def __init__(self, msg, partial=None, iterations=None):
        super().__init__(msg)
        self.partial = partial
        self.iterations = iterations


class AmbiguousClusterError(StratSpecError):
    """Raised when eigenvalue clusters are too close to separate reliably."""


class PartitionError(StratSpecError):
    """Raised when a computed residue fails the partition check."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class RefinementError(StratSpecError):
    """Raised when a requested stratum split is not interaction preserving."""


class ConditioningError(StratSpecError):
    """Raised when a similarity transform is too ill-conditioned to trust."""


class DiagnosticError(StratSpecError):
    """Raised by numerical probes whose own diagnostics reject the result."""

    def __init__(self, msg, details=None):
        super().__init__(msg)
        self.details = details or {}


class SchemaError(StratSpecError):
    """Raised when a system description violates the file schema.

    ``path`` is the JSON field path (``interfaces[0].tau``) of the offending
    value.
    """

    def __init__(self, msg, path=""):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path
