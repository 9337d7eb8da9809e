"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid simulation or CLI configuration."""


class UnsupportedModulationError(ValueError):
    """Requested constellation order is not a supported square QAM."""


class FramingError(ValueError):
    """Bit string length does not match the symbol vector layout."""


class MappingError(ValueError):
    """A symbol does not belong to the constellation."""


class OracleTooLargeError(ValueError):
    """Exhaustive search space exceeds the configured cap, or is empty."""


class InsufficientStatisticsError(ValueError):
    """Not enough error events to support a slope or interpolation estimate."""
