class NahmError(Exception):
    """Base class; `code` is the CLI exit status for this family of failure."""

    code = 3


class ValidationError(NahmError, ValueError):
    code = 2


class DomainError(NahmError, ValueError):
    code = 3


class SolverError(NahmError, RuntimeError):
    code = 3


class ResourceError(NahmError, RuntimeError):
    code = 3


class NotPositiveDefiniteError(DomainError):
    pass


class VerificationError(NahmError):
    code = 4
