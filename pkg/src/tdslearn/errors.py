"""Exception hierarchy shared by all modules."""


class TdsError(Exception):
    """Base class for every error raised by this package."""


class DegenerateInput(TdsError, ValueError):
    """Input violates a geometric precondition (zero vector, non-unit normal, k > d...)."""


class InsufficientData(TdsError, ValueError):
    """Too few samples (or too few positive samples) for the requested estimate."""


class BudgetExceeded(TdsError):
    """An enumeration would exceed its configured size cap.

    The offending size is kept on ``size`` so callers can report it.
    """

    def __init__(self, message: str, size: int | None = None, budget: int | None = None):
        super().__init__(message)
        self.size = size
        self.budget = budget


class RegionTooThin(TdsError):
    """Rejection sampling cannot reach a region of negligible Gaussian mass."""


class GenerationFailed(TdsError):
    """A randomized generator ran out of retries."""


class EmptyCandidateSet(TdsError):
    """No candidate hypothesis reaches the training-error threshold."""


class Infeasible(TdsError):
    """A linear program has no feasible point."""

    def __init__(self, message: str, certificate: str | None = None):
        super().__init__(message)
        self.certificate = certificate


class ConfigError(TdsError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
