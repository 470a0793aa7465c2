"""Exception hierarchy. The CLI maps these onto its exit codes."""


class FormatError(ValueError):
    """Malformed or truncated archive / sidecar content."""


class DataError(ValueError):
    """Data violates a structural contract (shape, finiteness, dimension mismatch)."""


class PolicyError(ValueError):
    """Augmentation policy is invalid for the window geometry it is applied to."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NumericError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class SingularSystemError(NumericError):
    """Spline interpolation system is singular even after the ridge fallback."""
