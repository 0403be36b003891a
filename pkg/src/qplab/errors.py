"""Exception taxonomy shared by all qplab modules.

Every failure mode that a caller can meaningfully react to gets its own
class.  The CLI maps these onto exit codes (see qplab.cli).
"""


class QplabError(Exception):
    """Base class for all qplab-specific errors."""


class DomainError(QplabError):
    """A precondition on inputs was violated (bad width, bad range, ...)."""


class ResolutionError(QplabError):
    """A grid/truncation budget could not certify the requested accuracy."""


class SmallDivisorError(QplabError):
    """A retained Fourier mode hit a denominator below the divisor floor.

    Carries the offending mode ``k``, the divisor magnitude and the nearest
    continued-fraction denominator, so callers can report *why* the
    frequency is too well approximated by rationals.
    """

    def __init__(self, k: int, divisor: float, nearest_q: int, floor: float,
                 stage: str = ""):
        self.k = k
        self.divisor = divisor
        self.nearest_q = nearest_q
        self.floor = floor
        self.stage = stage
        prefix = f"{stage}: " if stage else ""
        super().__init__(
            f"{prefix}divisor |e^(2 pi i k w) - 1| = {divisor:.3e} at mode k={k} "
            f"below floor {floor:.1e} (nearest convergent denominator {nearest_q})"
        )


class InsufficientDataError(QplabError):
    """More continued-fraction coefficients were requested than are stored."""


class ResourceError(QplabError):
    """A computation would exceed an explicit precision or size budget."""


class ConvergenceError(QplabError):
    """An iterative solver stagnated before reaching its tolerance."""
