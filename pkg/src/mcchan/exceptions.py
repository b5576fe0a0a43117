"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for invalid configuration values (bad shapes, ranges, files)."""


class GenerationError(RuntimeError):
    """Raised when random generation cannot satisfy its constraints."""


class EstimatorError(RuntimeError):
    """Raised when an estimator breaks down on a single problem instance."""
