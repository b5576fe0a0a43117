"""Input validation helpers used by the estimator classes and library ops.

These mirror the small check_* utilities of scikit-learn style libraries:
each helper either returns a normalized value or raises ``ConfigError``
with a message naming the offending argument.
"""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ConfigError


def check_rng(seed) -> np.random.Generator:
    """Return a Generator from a seed, SeedSequence, Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise ConfigError(f"{name} must be >= 1, got {value}")
    return int(value)


def check_in_range(value, name: str, low=None, high=None,
                   low_open=False, high_open=False) -> float:
    if not isinstance(value, numbers.Real):
        raise ConfigError(f"{name} must be a real number, got {value!r}")
    v = float(value)
    if low is not None and (v <= low if low_open else v < low):
        op = ">" if low_open else ">="
        raise ConfigError(f"{name} must be {op} {low}, got {v}")
    if high is not None and (v >= high if high_open else v > high):
        op = "<" if high_open else "<="
        raise ConfigError(f"{name} must be {op} {high}, got {v}")
    return v


def check_complex_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D complex128 ndarray with finite entries."""
    A = np.asarray(X)
    if A.ndim != 2:
        raise ConfigError(f"{name} must be 2-D, got shape {A.shape}")
    if A.size == 0:
        raise ConfigError(f"{name} must be non-empty")
    A = A.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(A.real)) or not np.all(np.isfinite(A.imag)):
        raise ConfigError(f"{name} contains non-finite entries")
    return A


def check_mask(mask, shape, name: str = "mask") -> np.ndarray:
    """Coerce to a boolean sampling mask matching ``shape``, >= 1 entry set."""
    M = np.asarray(mask)
    if M.shape != tuple(shape):
        raise ConfigError(f"{name} shape {M.shape} does not match data shape {tuple(shape)}")
    if M.dtype != bool:
        uniq = np.unique(M)
        if not np.all(np.isin(uniq, (0, 1))):
            raise ConfigError(f"{name} must be boolean or 0/1")
        M = M.astype(bool)
    if not M.any():
        raise ConfigError(f"{name} selects no entries")
    return M
