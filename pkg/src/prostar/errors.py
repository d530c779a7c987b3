"""Exception types shared across the package."""


class ProstarError(Exception):
    """Base class for all package errors."""


class StructuralError(ProstarError):
    """Objects that do not fit together (algebra/module/group mismatch, bad shapes)."""


class PreconditionError(ProstarError):
    """A documented precondition of an operation was violated."""


class NumericalError(ProstarError):
    """A numerical procedure failed to meet its accuracy contract."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = dict(diagnostics)
