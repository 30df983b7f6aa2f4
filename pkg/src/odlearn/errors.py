"""Exception types shared across the package."""


class OdlearnError(Exception):
    """Base class for package-specific failures."""


class FactorizationError(OdlearnError):
    """A dense factorization failed; the message says which knob to turn."""


class SolverError(OdlearnError):
    """A PDE solve blew up or could not be completed."""


class DatasetFormatError(OdlearnError):
    """A dataset directory does not conform to the container format."""


class UsageError(OdlearnError):
    """Bad command-line or config usage (maps to exit code 2)."""
