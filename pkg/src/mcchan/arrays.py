"""Antenna array geometries and steering-vector evaluation.

Two geometries are supported: a uniform linear array (ULA) laid out on the
y axis, and a uniform square planar array (USPA) on the y-z plane.  Steering
vectors follow the half-wavelength convention with unit Frobenius norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError

ULA = "ula"
USPA = "uspa"


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna array description.

    Parameters
    ----------
    kind : str
        ``"ula"`` or ``"uspa"``.
    num_antennas : int
        Total element count; must be a perfect square for a USPA.
    spacing : float
        Element spacing in carrier wavelengths (default half wavelength).
    """

    kind: str
    num_antennas: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.kind not in (ULA, USPA):
            raise ConfigError(f"unknown array kind {self.kind!r}")
        if self.num_antennas < 1:
            raise ConfigError("num_antennas must be >= 1")
        if self.spacing <= 0:
            raise ConfigError("spacing must be positive")
        if self.kind == USPA:
            side = math.isqrt(self.num_antennas)
            if side * side != self.num_antennas:
                raise ConfigError(
                    f"uspa needs a square element count, got {self.num_antennas}")

    @property
    def side(self) -> int:
        """Elements per axis (USPA only)."""
        if self.kind != USPA:
            raise ConfigError("side is only defined for uspa geometries")
        return math.isqrt(self.num_antennas)


def ula_response(geom: ArrayGeometry, azimuth: float) -> np.ndarray:
    """Steering vector of a ULA at the given azimuth angle (radians).

    Entry n is exp(j*2*pi*spacing*n*sin(azimuth)) / sqrt(N), so the vector
    has unit norm for every angle.
    """
    if geom.kind != ULA:
        raise ConfigError("ula_response requires a ula geometry")
    n = np.arange(geom.num_antennas)
    phase = 2.0 * np.pi * geom.spacing * np.sin(azimuth)
    return np.exp(1j * phase * n) / math.sqrt(geom.num_antennas)


def uspa_axis_response(geom: ArrayGeometry, freq) -> np.ndarray:
    """Single-axis factor of a USPA steering vector for spatial frequency
    ``freq`` (the sin/cos direction term), normalized by N**0.25 so the
    Kronecker product of two factors has unit norm."""
    if geom.kind != USPA:
        raise ConfigError("uspa_axis_response requires a uspa geometry")
    n = np.arange(geom.side)
    phase = 2.0 * np.pi * geom.spacing * freq
    return np.exp(1j * phase * n) / geom.num_antennas ** 0.25


def uspa_response(geom: ArrayGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Steering vector of a square planar array.

    The y-axis factor uses spatial frequency sin(azimuth)*sin(elevation),
    the z-axis factor uses cos(elevation); the result is their Kronecker
    product (y factor varying slowest) and has unit norm.
    """
    ay = uspa_axis_response(geom, np.sin(azimuth) * np.sin(elevation))
    az = uspa_axis_response(geom, np.cos(elevation))
    return np.kron(ay, az)


def steering_vector(geom: ArrayGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Dispatch on geometry kind; a ULA ignores the elevation angle."""
    if geom.kind == ULA:
        return ula_response(geom, azimuth)
    return uspa_response(geom, azimuth, elevation)
