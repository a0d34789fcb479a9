"""Exception hierarchy.

``InputError`` subclasses signal malformed or out-of-range input (CLI exit 2);
everything else under ``EnvarError`` is a math-domain or size failure (exit 3).
"""


class EnvarError(ValueError):
    pass


class InputError(EnvarError):
    pass


class StateFormatError(InputError):
    pass


class OutOfRange(InputError):
    pass


class DuplicateLabel(EnvarError):
    pass


class UnknownSubsystem(EnvarError):
    pass


class NotUnitary(EnvarError):
    pass


class BadPartition(EnvarError):
    pass


class LayoutMismatch(EnvarError):
    pass


class ZeroState(EnvarError):
    pass


class NotNormalized(EnvarError):
    pass


class ComplementTooSmall(EnvarError):
    pass


class NotEquiprobable(EnvarError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class DimensionCap(EnvarError):
    pass


class SpecMismatch(EnvarError):
    pass
