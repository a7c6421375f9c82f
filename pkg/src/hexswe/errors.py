"""Exception types shared across the package."""


class HexsweError(Exception):
    """Base class for all package errors."""


class ConfigError(HexsweError):
    """Invalid configuration, scenario file, or parameter combination."""


class GridFormatError(HexsweError):
    """Malformed raster or grid file."""


class NumericError(HexsweError):
    """Numerical failure during time stepping (non-finite values, bad dt)."""


class UnsupportedRegimeError(HexsweError):
    """Analytic solution requested outside its regime of validity."""
