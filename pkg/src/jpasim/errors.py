"""Exception taxonomy shared across the toolkit."""


class JpasimError(Exception):
    """Base class for all toolkit errors."""


class ConfigInvalid(JpasimError):
    """Configuration failed validation; carries field-level messages."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class NumericalOverflow(JpasimError):
    """Cavity amplitude exceeded the configured photon bound."""

    def __init__(self, message, trajectory_index=None):
        super().__init__(message)
        self.trajectory_index = trajectory_index


class LayoutOverlap(JpasimError):
    """Spectral modes overlap in frequency."""


class BandwidthExceeded(JpasimError):
    """A mode band extends beyond the usable Nyquist range."""


class DegenerateSubspace(JpasimError):
    """A two-mode block is numerically zero; rotation angle undefined."""


class InsufficientData(JpasimError):
    """Not enough samples to estimate the requested statistic."""


class NonPositiveGain(JpasimError):
    """Gains must be strictly positive."""


class DimensionMismatch(JpasimError):
    """Matrix dimensions or orderings do not match."""


class NotPositiveDefinite(JpasimError):
    """Covariance matrix has a significantly negative eigenvalue."""


class InvalidModeSet(JpasimError):
    """Mode subset for partial transposition is empty or not proper."""


class ZeroDenominator(JpasimError):
    """The GME weight function f_N vanishes for the given weights."""


class UnmatchedPump(JpasimError):
    """A pump detuning maps no mode pair in the layout."""


class SingularAtThreshold(JpasimError):
    """Interaction matrix is singular; pump amplitude at/above threshold."""


class NonRealResidue(JpasimError):
    """Quadrature-basis matrix has a non-negligible imaginary part."""


class UnsupportedTarget(JpasimError):
    """Requested graph target is not available for this layout."""


class FitDiverged(JpasimError):
    """Least-squares fit failed to converge to a meaningful solution."""


class DegenerateSweep(JpasimError):
    """Sweep data lacks the variation required for fitting."""
