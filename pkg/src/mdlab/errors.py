"""Exception hierarchy shared by all mdlab modules."""


class MDLabError(Exception):
    """Base class for every error raised by mdlab."""


class InputError(MDLabError, ValueError):
    """Malformed or inconsistent input data."""


# probkit
class NegativeMass(InputError):
    pass


class NotNormalized(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class UnknownVariable(InputError, KeyError):
    pass


class OverlappingSets(InputError):
    pass


class OutOfRange(InputError):
    pass


# gf2code / schemes / distortion
class LengthMismatch(InputError):
    pass


class TooLargeForExhaustive(InputError):
    pass


class InvalidDimensions(InputError):
    pass


class DegenerateDelta(InputError):
    pass


# region
class LayoutMismatch(InputError):
    pass


class AlphabetTooLarge(InputError):
    pass


class MissingSumVariable(InputError):
    pass


class QTooSmall(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class Blowup(MDLabError, RuntimeError):
    """Fourier-Motzkin intermediate row count exceeded the configured cap."""
