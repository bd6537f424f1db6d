"""Exception hierarchy shared by all modules."""


class LiouvilleError(Exception):
    """Base class for every error raised by the package."""


class InvalidDomain(LiouvilleError):
    """Boundary curves are not simple, intersect, or are not nested."""


class NumericsFailure(LiouvilleError):
    """A numerical sub-solve did not reach its tolerance."""


class GeometryError(LiouvilleError):
    """A geometric positivity requirement failed (e.g. Hopf sign)."""


class OutOfAsymptoticRange(LiouvilleError):
    """The small parameter is outside the range where the scalings make sense."""


class ModulationTooLarge(LiouvilleError):
    """The modulation makes ``1 + d f / d eta`` non-positive."""


class ResonantMode0(LiouvilleError):
    """The zero-mode matching system is singular."""


class ResonantModeN(LiouvilleError):
    """A nonzero-mode matching system is singular."""


class ResonanceRejected(LiouvilleError):
    """The matching scale is too close to the resonance set."""


class RequiresCompactSupport(LiouvilleError):
    """Mode frequency sits in the resonant weight band and data is not compact."""


class CalibrationFailed(LiouvilleError):
    """No decay parameter gives invertible projection matrices."""


class InnerRegionTooWide(LiouvilleError):
    """Cutoff supports exceed the width of the Fermi chart."""


class NoSolution(LiouvilleError):
    """The transcendental boundary system has no root."""


class NewtonFailed(LiouvilleError):
    """Newton iteration diverged or the line search failed.

    The last iterate is attached as ``last``.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last
