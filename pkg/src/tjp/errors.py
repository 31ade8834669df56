"""Exception hierarchy shared across the package."""


class TjpError(Exception):
    """Base class for all package errors."""


class ConfigError(TjpError):
    """Invalid configuration value or malformed config file."""


class DomainError(TjpError):
    """Input outside an operation's documented domain."""


class WindowTooLargeError(DomainError):
    """Requested window exceeds the image extents."""


class EmptyCorpusError(TjpError):
    """No scale of the sampling plan can accommodate the window."""


class DegenerateMaskError(TjpError):
    """Dual-mask invariant unsatisfiable (no jointly hidden cell)."""


class DegenerateFieldError(TjpError):
    """Deformation field with no positive Jacobian determinants."""


class UndefinedMetricError(TjpError):
    """Metric undefined for the given inputs (e.g. empty label)."""


class FormatError(TjpError):
    """Malformed array container or manifest bytes."""


class UnsupportedError(FormatError):
    """Well-formed file using a feature this package does not read."""


class ManifestError(TjpError):
    """Manifest fails schema validation."""
