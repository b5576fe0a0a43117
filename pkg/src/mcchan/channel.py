"""Clustered multipath channel generation, array impairments, and
channel (de)serialization.

A realization is a sum of per-ray rank-one terms

    H = (1/sqrt(L)) * sum_k sum_l g_kl * a_r(aoa_kl) * a_t(aod_kl)^H

with L the total ray count, cluster count drawn from a floored Poisson law,
per-cluster ray counts uniform, and fractional cluster powers drawn from a
heavy-tailed surrogate (uniform^(tau-1) times a lognormal shadowing factor,
normalized to sum to one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .arrays import ArrayGeometry, steering_vector
from .exceptions import ConfigError, GenerationError
from .validation import check_complex_matrix, check_in_range, check_rng

DEG = np.pi / 180.0

CHANNEL_FORMAT = "mcchan-channel-v1"


@dataclass(frozen=True)
class ChannelParams:
    """Statistical parameters of the clustered channel model.

    Angles are radians.  Center angles of distinct clusters are re-drawn
    until they are separated by at least one angular spread in each angle
    family; rays then scatter uniformly within +-spread/2 of their center.
    """

    cluster_rate: float = 1.8
    max_rays: int = 20
    power_decay: float = 2.0      # exponent tau of the uniform factor
    shadow_scale: float = 0.6     # per-cluster lognormal shadowing (dB scale)
    spread_az_aoa: float = 15.5 * DEG
    spread_el_aoa: float = 6.0 * DEG
    spread_az_aod: float = 10.2 * DEG
    spread_el_aod: float = 0.0

    def __post_init__(self):
        check_in_range(self.cluster_rate, "cluster_rate", low=0, low_open=True)
        if self.max_rays < 1:
            raise ConfigError("max_rays must be >= 1")
        check_in_range(self.power_decay, "power_decay", low=1)
        check_in_range(self.shadow_scale, "shadow_scale", low=0)
        for name in ("spread_az_aoa", "spread_el_aoa", "spread_az_aod", "spread_el_aod"):
            check_in_range(getattr(self, name), name, low=0)


@dataclass
class ChannelRealization:
    """One channel draw: the matrix plus the per-ray parameters that
    reproduce it when re-assembled in stored order."""

    tx: ArrayGeometry
    rx: ArrayGeometry
    matrix: np.ndarray            # N_r x N_t
    cluster_powers: np.ndarray    # (K,) fractional powers, sum 1
    rays_per_cluster: np.ndarray  # (K,) ints
    cluster_of: np.ndarray        # (L,) cluster index per ray
    gains: np.ndarray             # (L,) complex
    aoa_az: np.ndarray
    aoa_el: np.ndarray
    aod_az: np.ndarray
    aod_el: np.ndarray
    seed: int | None = None

    @property
    def num_clusters(self) -> int:
        return len(self.cluster_powers)

    @property
    def num_rays(self) -> int:
        return len(self.gains)

    def rebuild_matrix(self) -> np.ndarray:
        """Re-assemble the matrix from the stored per-ray parameters.

        Summation order matches generation, so the result is bit-identical
        to ``matrix`` for an unmodified realization.
        """
        return assemble_matrix(self.tx, self.rx, self.gains,
                               self.aoa_az, self.aoa_el,
                               self.aod_az, self.aod_el)

    def to_json(self) -> str:
        payload = {
            "format": CHANNEL_FORMAT,
            "seed": self.seed,
            "tx": _geometry_dict(self.tx),
            "rx": _geometry_dict(self.rx),
            "cluster_powers": self.cluster_powers.tolist(),
            "rays_per_cluster": self.rays_per_cluster.tolist(),
            "cluster_of": self.cluster_of.tolist(),
            "gains": _interleave(self.gains),
            "aoa_az": self.aoa_az.tolist(),
            "aoa_el": self.aoa_el.tolist(),
            "aod_az": self.aod_az.tolist(),
            "aod_el": self.aod_el.tolist(),
            "matrix": {
                "shape": list(self.matrix.shape),
                "data": _interleave(self.matrix),
            },
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "ChannelRealization":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid channel JSON: {exc}") from exc
        if payload.get("format") != CHANNEL_FORMAT:
            raise ConfigError(f"unknown channel format {payload.get('format')!r}")
        shape = tuple(payload["matrix"]["shape"])
        return cls(
            tx=_geometry_from_dict(payload["tx"]),
            rx=_geometry_from_dict(payload["rx"]),
            matrix=_deinterleave(payload["matrix"]["data"]).reshape(shape),
            cluster_powers=np.asarray(payload["cluster_powers"], float),
            rays_per_cluster=np.asarray(payload["rays_per_cluster"], int),
            cluster_of=np.asarray(payload["cluster_of"], int),
            gains=_deinterleave(payload["gains"]),
            aoa_az=np.asarray(payload["aoa_az"], float),
            aoa_el=np.asarray(payload["aoa_el"], float),
            aod_az=np.asarray(payload["aod_az"], float),
            aod_el=np.asarray(payload["aod_el"], float),
            seed=payload.get("seed"),
        )


def _geometry_dict(geom: ArrayGeometry) -> dict:
    return {"kind": geom.kind, "num_antennas": geom.num_antennas,
            "spacing": geom.spacing}


def _geometry_from_dict(d: dict) -> ArrayGeometry:
    return ArrayGeometry(kind=d["kind"], num_antennas=d["num_antennas"],
                         spacing=d.get("spacing", 0.5))


def _interleave(arr: np.ndarray) -> list:
    """Row-major [re, im, re, im, ...] flattening of a complex array."""
    flat = np.asarray(arr, complex).ravel()
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out.tolist()


def _deinterleave(data: list) -> np.ndarray:
    a = np.asarray(data, float)
    if a.size % 2:
        raise ConfigError("interleaved complex payload has odd length")
    return a[0::2] + 1j * a[1::2]


def assemble_matrix(tx: ArrayGeometry, rx: ArrayGeometry, gains,
                    aoa_az, aoa_el, aod_az, aod_el) -> np.ndarray:
    """Sum per-ray outer products in order and scale by 1/sqrt(ray count)."""
    gains = np.asarray(gains, complex)
    L = len(gains)
    if L == 0:
        raise ConfigError("channel needs at least one ray")
    H = np.zeros((rx.num_antennas, tx.num_antennas), complex)
    for i in range(L):
        ar = steering_vector(rx, aoa_az[i], aoa_el[i])
        at = steering_vector(tx, aod_az[i], aod_el[i])
        H += gains[i] * np.outer(ar, at.conj())
    H /= np.sqrt(L)
    return H


def _draw_centers(num: int, spread: float, rng: np.random.Generator,
                  max_tries: int = 1000) -> np.ndarray:
    """Uniform center angles on [0, 2pi), re-drawn until every pair is at
    least one spread apart on the circle."""
    if num == 1 or spread == 0.0:
        return rng.uniform(0.0, 2.0 * np.pi, num)
    for _ in range(max_tries):
        c = rng.uniform(0.0, 2.0 * np.pi, num)
        d = np.abs(c[:, None] - c[None, :])
        d = np.minimum(d, 2.0 * np.pi - d)
        d[np.diag_indices(num)] = np.inf
        if d.min() >= spread:
            return c
    raise GenerationError(
        f"could not place {num} cluster centers with min separation "
        f"{spread:.4f} rad in {max_tries} attempts")


def generate_channel(params: ChannelParams, tx: ArrayGeometry,
                     rx: ArrayGeometry, seed=None) -> ChannelRealization:
    """Draw one clustered channel realization.

    Draw order (fixed for reproducibility): cluster count, rays per cluster,
    cluster power factors, center angles per family (az-AoA, el-AoA, az-AoD,
    el-AoD), per-ray angle offsets in the same family order, then ray gain
    real and imaginary parts.
    """
    rng = check_rng(seed)
    K = max(int(rng.poisson(params.cluster_rate)), 1)
    rays = rng.integers(1, params.max_rays + 1, K)
    u = rng.uniform(0.0, 1.0, K)
    shadow = rng.standard_normal(K)
    raw = u ** (params.power_decay - 1.0) * 10.0 ** (-params.shadow_scale * shadow / 10.0)
    powers = raw / raw.sum()

    c_aoa_az = _draw_centers(K, params.spread_az_aoa, rng)
    c_aoa_el = _draw_centers(K, params.spread_el_aoa, rng)
    c_aod_az = _draw_centers(K, params.spread_az_aod, rng)
    c_aod_el = _draw_centers(K, params.spread_el_aod, rng)

    cluster_of = np.repeat(np.arange(K), rays)
    L = int(rays.sum())

    def scatter(centers, spread):
        off = rng.uniform(-spread / 2.0, spread / 2.0, L)
        return centers[cluster_of] + off

    aoa_az = scatter(c_aoa_az, params.spread_az_aoa)
    aoa_el = scatter(c_aoa_el, params.spread_el_aoa)
    aod_az = scatter(c_aod_az, params.spread_az_aod)
    aod_el = scatter(c_aod_el, params.spread_el_aod)

    amp = np.sqrt(powers[cluster_of] / 2.0)
    gains = amp * rng.standard_normal(L) + 1j * amp * rng.standard_normal(L)

    H = assemble_matrix(tx, rx, gains, aoa_az, aoa_el, aod_az, aod_el)
    return ChannelRealization(
        tx=tx, rx=rx, matrix=H, cluster_powers=powers, rays_per_cluster=rays,
        cluster_of=cluster_of, gains=gains, aoa_az=aoa_az, aoa_el=aoa_el,
        aod_az=aod_az, aod_el=aod_el,
        seed=seed if isinstance(seed, (int, np.integer)) else None)


def normalize_entry_power(real: ChannelRealization) -> ChannelRealization:
    """Rescale ray gains so the matrix has unit average entry power
    (``||H||_F^2 = N_r * N_t``) and re-assemble.

    Keeps the per-ray parameterization self-consistent: the returned
    realization still rebuilds its own matrix bit-for-bit.
    """
    norm = np.linalg.norm(real.matrix)
    if norm == 0.0:
        raise ConfigError("cannot normalize an all-zero channel")
    c = np.sqrt(real.matrix.size) / norm
    gains = real.gains * c
    H = assemble_matrix(real.tx, real.rx, gains, real.aoa_az, real.aoa_el,
                        real.aod_az, real.aod_el)
    return replace(real, gains=gains, matrix=H)


@dataclass(frozen=True)
class ImpairmentProfile:
    """Per-antenna multiplicative gain/phase errors for both arrays.

    ``tx``/``rx`` hold complex multipliers rho * exp(j*kappa).  The effective
    channel is diag(rx) @ H @ diag(tx)^H; receiver noise is scaled entrywise
    by rx before combining.
    """

    tx: np.ndarray
    rx: np.ndarray
    phase_level: float = 0.0
    gain_level: float = 0.0
    seed: int | None = None

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.tx == 1.0) and np.all(self.rx == 1.0))


def identity_profile(num_tx: int, num_rx: int) -> ImpairmentProfile:
    return ImpairmentProfile(tx=np.ones(num_tx, complex),
                             rx=np.ones(num_rx, complex))


def impairment_profile(num_tx: int, num_rx: int, phase_level: float = 0.0,
                       gain_level: float = 0.0, seed=None,
                       phase_level_rx: float | None = None,
                       gain_level_rx: float | None = None) -> ImpairmentProfile:
    """Draw per-antenna errors: phases uniform on [-phase_level, phase_level],
    gains uniform on [1-gain_level, 1+gain_level].

    The receive array reuses the transmit levels unless the ``_rx`` values
    are given.  Draw order: tx phases, tx gains, rx phases, rx gains; the
    underlying uniforms do not depend on the levels, so profiles drawn from
    the same seed at different levels are scaled versions of each other.
    """
    if phase_level_rx is None:
        phase_level_rx = phase_level
    if gain_level_rx is None:
        gain_level_rx = gain_level
    for name, value in (("phase_level", phase_level),
                        ("phase_level_rx", phase_level_rx)):
        check_in_range(value, name, low=0)
    for name, value in (("gain_level", gain_level),
                        ("gain_level_rx", gain_level_rx)):
        check_in_range(value, name, low=0, high=1, high_open=True)
    rng = check_rng(seed)

    def draw(n, phase, gain):
        kappa = rng.uniform(-phase, phase, n)
        rho = rng.uniform(1.0 - gain, 1.0 + gain, n)
        return rho * np.exp(1j * kappa)

    tx = draw(num_tx, phase_level, gain_level)
    rx = draw(num_rx, phase_level_rx, gain_level_rx)
    return ImpairmentProfile(tx=tx, rx=rx, phase_level=phase_level,
                             gain_level=gain_level,
                             seed=seed if isinstance(seed, (int, np.integer)) else None)


def apply_impairments(H, profile: ImpairmentProfile) -> np.ndarray:
    """Effective channel diag(rx) @ H @ diag(tx)^H."""
    H = check_complex_matrix(H, "H")
    n_r, n_t = H.shape
    if len(profile.rx) != n_r or len(profile.tx) != n_t:
        raise ConfigError("impairment profile does not match channel shape")
    return profile.rx[:, None] * H * profile.tx[None, :].conj()


def energy_capture_rank(H, energy_fraction: float = 0.95) -> int:
    """Smallest r such that the top-r singular values capture at least the
    requested fraction of squared Frobenius energy."""
    check_in_range(energy_fraction, "energy_fraction", low=0, low_open=True, high=1)
    H = check_complex_matrix(H, "H")
    s = np.linalg.svd(H, compute_uv=False)
    total = np.sum(s ** 2)
    if total == 0.0:
        return 0
    frac = np.cumsum(s ** 2) / total
    return int(np.searchsorted(frac, energy_fraction - 1e-15) + 1)
