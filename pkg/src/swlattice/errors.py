"""Exception types shared across the package."""


class SwLatticeError(Exception):
    """Base class for all package errors."""


class InvalidDomainError(SwLatticeError):
    """Domain construction parameters are unusable (axis too short, bad spacing, ...)."""


class MismatchError(SwLatticeError):
    """Operands disagree in degree, value kind, domain, or shape."""


class ParameterError(SwLatticeError):
    """A parameter is outside its documented range or a required input is missing."""


class FieldFormatError(SwLatticeError):
    """A field file failed to parse.  Carries file name and line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class GaugeFixFailedError(SwLatticeError):
    """The gauge-fixing Poisson solve did not reach tolerance within its cap.

    The partial report is attached so callers can inspect how far it got.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OutOfSectorError(SwLatticeError):
    """Cubic bound requested outside the sector p < 0, q < 0 where it is proved."""


class AbortedRunError(SwLatticeError):
    """The descent produced a non-finite energy.  Carries the last finite iterate."""

    def __init__(self, message, last_iterate=None, iteration=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iteration = iteration
