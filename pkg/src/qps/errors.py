"""Exception types shared across the package."""


class QpsError(Exception):
    """Base class for all package errors."""


class ConfigError(QpsError):
    """Invalid experiment configuration (unknown key, bad type, bad value)."""


class HypothesisError(QpsError):
    """A validator's hypothesis gate failed; carries which condition and where.

    Raised when inputs do not satisfy the preconditions of a quantitative
    check (e.g. the avalanche pairwise-norm condition), as opposed to the
    check's conclusion failing.
    """

    def __init__(self, condition: str, index=None, detail: str = ""):
        self.condition = condition
        self.index = index
        msg = f"hypothesis violated: {condition}"
        if index is not None:
            msg += f" at index {index}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ResonanceError(QpsError):
    """A block expected to have a unique window eigenvalue did not."""


class DegenerateGapError(QpsError):
    """Eigenvalue gap below tolerance; derivative formulas not applicable."""


class ScaleTooAmbitiousError(QpsError):
    """A set construction exceeded the rectangle-complexity budget."""


class NoAdmissibleScaleError(QpsError):
    """Doubling search for a resonance-free annulus exhausted its cap."""


class AuditFailure(QpsError):
    """Strict-mode multiscale run aborted on a failed hypothesis audit."""

    def __init__(self, hypothesis: str, scale: int, detail: str = ""):
        self.hypothesis = hypothesis
        self.scale = scale
        msg = f"audit {hypothesis} failed at scale {scale}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
