"""Exception hierarchy shared by all geoflow modules."""


class GeoflowError(Exception):
    """Base class for every error raised by geoflow."""

    kind = "error"


class DomainError(GeoflowError, ValueError):
    """A point or state lies outside the domain of an operation."""

    kind = "domain"


class DegenerateMetricError(GeoflowError, ArithmeticError):
    """The metric matrix is not positive definite at the queried point."""

    kind = "degenerate-metric"


class ToleranceError(GeoflowError, ArithmeticError):
    """A numerical step or tolerance cannot be honoured."""

    kind = "tolerance"


class DegeneratePlaneError(GeoflowError, ValueError):
    """Two tangent vectors do not span a plane."""

    kind = "degenerate-plane"


class NormalizationError(GeoflowError, ValueError):
    """An input required to be normalized is not."""

    kind = "normalization"


class ParameterError(GeoflowError, ValueError):
    """A parameter is outside its documented range."""

    kind = "parameter"


class DeformationTooLargeError(GeoflowError, ValueError):
    """The deformed metric fails to be positive definite on the tube."""

    kind = "deformation-too-large"


class IntegrationError(GeoflowError, RuntimeError):
    """The ODE integrator failed to advance."""

    kind = "integration"


class ConfigurationError(GeoflowError, ValueError):
    """Invalid configuration file or inconsistent experiment setup."""

    kind = "configuration"


class UsageError(GeoflowError, ValueError):
    """Invalid command-line usage, such as an unknown scenario name."""

    kind = "usage"


class ReportIOError(GeoflowError, OSError):
    """A report file cannot be written."""

    kind = "io"
