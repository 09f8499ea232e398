"""Exception hierarchy shared by the analysis modules and the CLI."""


class DwdmThaError(Exception):
    """Base class for all package errors."""


class DomainError(DwdmThaError, ValueError):
    """A numeric argument lies outside the domain of an operation."""


class ParameterError(DomainError):
    """A parameter set violates its invariants.

    ``keys`` names the offending fields so callers (the CLI in particular)
    can point at the configuration entries that need fixing.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class DegenerateDecoyError(DomainError):
    """Signal and decoy intensities do not allow the decoy inversion."""


class SpectrumParseError(DwdmThaError, ValueError):
    """Malformed spectrum or profile CSV."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderingError(SpectrumParseError):
    """Wavelength samples are not strictly increasing."""


class CoverageError(DwdmThaError, ValueError):
    """A wavelength or window falls outside the available data."""


class NoOverlapError(CoverageError):
    """Two spectra share no wavelength range."""
