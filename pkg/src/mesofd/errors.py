"""Exception types raised across the package."""


class MesoFDError(Exception):
    """Base class for all package errors."""


# lattice
class UnknownLattice(MesoFDError, KeyError):
    pass


class WeightOutOfRange(MesoFDError, ValueError):
    pass


class AnisotropicSoundSpeed(MesoFDError, ValueError):
    pass


# edf
class DegenerateDenominator(MesoFDError, ZeroDivisionError):
    pass


class LengthMismatch(MesoFDError, ValueError):
    pass


# scheme
class UnknownPreset(MesoFDError, KeyError):
    pass


# stability
class NonlinearEDF(MesoFDError, ValueError):
    pass


class SingularDenominator(MesoFDError, ZeroDivisionError):
    pass


class WrongShape(MesoFDError, ValueError):
    pass


class ThetaOutOfRange(MesoFDError, ValueError):
    pass


# stepper
class TooCoarse(MesoFDError, ValueError):
    pass


class MissingInitialData(MesoFDError, ValueError):
    pass


class ImplicitSchemeUnsupported(MesoFDError, NotImplementedError):
    pass


class NonIntegerStepCount(MesoFDError, ValueError):
    pass


class NumericalBlowup(MesoFDError, FloatingPointError):
    """Raised only when a caller asks for blowups to be fatal."""


# harness
class ZeroReference(MesoFDError, ZeroDivisionError):
    pass


class UnknownExample(MesoFDError, KeyError):
    pass
