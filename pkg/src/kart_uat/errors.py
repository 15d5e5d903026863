"""Error types shared by the library and mapped to CLI exit codes."""


class ValidationError(ValueError):
    """Bad input: malformed values, non-canonical data, version mismatch (exit 2)."""

    exit_code = 2


class CertificationError(RuntimeError):
    """A measured tolerance missed its target (exit 3).

    ``stage`` names the pipeline stage; ``achieved`` and ``required`` carry the
    two numbers so callers can report both.
    """

    exit_code = 3

    def __init__(self, message, stage=None, achieved=None, required=None, best=None):
        super().__init__(message)
        self.stage = stage
        self.achieved = achieved
        self.required = required
        self.best = best


class ConvergenceError(CertificationError):
    """An iterative construction failed to make progress (exit 3)."""

    def __init__(self, message, history=None, **kw):
        super().__init__(message, **kw)
        self.history = list(history or [])
