"""Estimation-quality and link-level metrics."""

from __future__ import annotations

import numpy as np

from .channel import energy_capture_rank
from .exceptions import ConfigError
from .validation import check_complex_matrix, check_in_range, check_positive_int


def nmse(estimate, reference) -> float:
    """Normalized mean squared error ||Hhat - H||_F^2 / ||H||_F^2."""
    estimate = np.asarray(estimate)
    reference = np.asarray(reference)
    if estimate.shape != reference.shape:
        raise ConfigError("estimate and reference shapes differ: "
                          f"{estimate.shape} vs {reference.shape}")
    denom = float(np.sum(np.abs(reference) ** 2))
    if denom == 0.0:
        raise ConfigError("reference matrix has zero energy")
    return float(np.sum(np.abs(estimate - reference) ** 2)) / denom


def nmse_db(estimate, reference) -> float:
    value = nmse(estimate, reference)
    if value == 0.0:
        return -np.inf
    return float(10.0 * np.log10(value))


def to_db(value: float) -> float:
    return -np.inf if value == 0 else float(10.0 * np.log10(value))


def subspace_rank(matrix, energy_fraction: float = 0.95) -> int:
    """Smallest r whose top-r singular values hold the given energy share."""
    return energy_capture_rank(matrix, energy_fraction)


def precoders_from_estimate(estimate, num_streams: int, power: float = 1.0):
    """Top singular subspace precoder/combiner pair for a channel estimate.

    F holds the leading right singular vectors scaled so ||F||_F^2 = power;
    W holds the leading left singular vectors unscaled.  When the estimate
    has rank below ``num_streams`` the trailing singular vectors pad the
    pair; ``deficient`` reports that condition.
    """
    estimate = check_complex_matrix(np.asarray(estimate, complex), "estimate")
    check_positive_int(num_streams, "num_streams")
    if num_streams > min(estimate.shape):
        raise ConfigError("num_streams exceeds channel dimensions")
    Uf, s, Vh = np.linalg.svd(estimate, full_matrices=False)
    F = Vh[:num_streams].conj().T * np.sqrt(power / num_streams)
    W = Uf[:, :num_streams]
    deficient = bool(np.sum(s > s[0] * 1e-12) < num_streams) if s[0] > 0 \
        else True
    return F, W, deficient


def spectral_efficiency(channel, F, W, noise_var: float = 1.0) -> float:
    """Achievable rate log2 det(I + (1/sigma^2) (W^H W)^-1 W^H H F F^H H^H W).

    The combiner Gram is inverted explicitly, so W only needs full column
    rank, not orthonormality.
    """
    channel = np.asarray(channel, complex)
    F = np.asarray(F, complex)
    W = np.asarray(W, complex)
    check_in_range(noise_var, "noise_var", low=0, low_open=True)
    eff = W.conj().T @ channel @ F
    gram = W.conj().T @ W
    try:
        inv_gram = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise ConfigError("combiner is rank deficient") from exc
    ns = F.shape[1]
    mat = np.eye(ns) + inv_gram @ eff @ eff.conj().T / noise_var
    sign, logdet = np.linalg.slogdet(mat)
    if sign == 0:
        raise ConfigError("rate matrix is singular")
    return float(logdet / np.log(2.0))


def spectral_efficiency_from_estimate(channel, estimate, num_streams: int,
                                      noise_var: float = 1.0,
                                      power: float = 1.0) -> float:
    """Rate when precoders are designed on ``estimate`` but applied to ``channel``."""
    F, W, _ = precoders_from_estimate(estimate, num_streams, power=power)
    return spectral_efficiency(channel, F, W, noise_var=noise_var)


def se_at_snr(channel, estimate, num_streams: int, snr_db: float):
    """Spectral efficiency at an SNR in dB (unit noise variance, total
    transmit power 10^(snr/10) split equally over the streams).

    Returns (rate, deficient) where ``deficient`` flags an estimate whose
    rank fell below the stream count (precoders padded with trailing
    singular vectors).
    """
    power = 10.0 ** (float(snr_db) / 10.0)
    F, W, deficient = precoders_from_estimate(estimate, num_streams,
                                              power=power)
    return spectral_efficiency(channel, F, W, noise_var=1.0), deficient
