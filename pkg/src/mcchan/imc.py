"""Inductive variant: completion in a unitary feature domain.

Instead of sounding canonical basis vectors, training applies dense unitary
feature columns on both link ends, so every antenna transmits during every
step.  The sampled matrix is C = X_L^H H X_R, which shares the singular
values (hence rank and condition number) of H; the channel returns via
H_hat = X_L C_hat X_R^H.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigError
from .training import (ObservationMatrix, SamplingPattern, TrainingPlan,
                       pnr_to_noise_var, stage_target_column)
from .channel import ImpairmentProfile
from .validation import check_complex_matrix, check_positive_int, check_rng

FEATURE_FORMAT = "mcchan-features-v1"


@dataclass(frozen=True)
class FeaturePair:
    """Unitary feature matrices applied at the receiver and transmitter."""

    X_L: np.ndarray
    X_R: np.ndarray
    seed: object = None

    def __post_init__(self):
        for name in ("X_L", "X_R"):
            mat = getattr(self, name)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ConfigError(f"{name} must be square")

    @property
    def shape(self) -> tuple:
        return (self.X_L.shape[0], self.X_R.shape[0])

    def unitarity_error(self) -> float:
        """Largest deviation of X^H X from the identity, over both factors."""
        errs = [np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
                for m in (self.X_L, self.X_R)]
        return float(max(errs))

    def to_json(self, include_matrices: bool = False) -> str:
        doc = {"format": FEATURE_FORMAT, "seed": self.seed,
               "num_rx": self.X_L.shape[0], "num_tx": self.X_R.shape[0]}
        if include_matrices:
            for name in ("X_L", "X_R"):
                m = getattr(self, name)
                doc[name] = np.stack([m.real, m.imag], -1).ravel().tolist()
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "FeaturePair":
        doc = json.loads(text)
        if doc.get("format") != FEATURE_FORMAT:
            raise ConfigError("unrecognized feature document format")
        if "X_L" in doc:
            mats = {}
            for name, n in (("X_L", doc["num_rx"]), ("X_R", doc["num_tx"])):
                flat = np.asarray(doc[name]).reshape(n, n, 2)
                mats[name] = flat[..., 0] + 1j * flat[..., 1]
            return cls(X_L=mats["X_L"], X_R=mats["X_R"], seed=doc["seed"])
        if doc.get("seed") is None:
            raise ConfigError("feature document has neither matrices nor seed")
        return generate_features(doc["num_rx"], doc["num_tx"], doc["seed"])


def generate_features(num_rx: int, num_tx: int, seed=None) -> FeaturePair:
    """Draw unitary features as left singular factors of unit-modulus seeds.

    A and B get i.i.d. entries exp(j*2*pi*u) with uniform u; their left
    singular-vector matrices are returned.  Unit-modulus seeds spread pilot
    power across all antennas while the SVD enforces orthonormal columns.
    """
    check_positive_int(num_rx, "num_rx")
    check_positive_int(num_tx, "num_tx")
    rng = check_rng(seed)
    A = np.exp(2j * np.pi * rng.random((num_rx, num_rx)))
    B = np.exp(2j * np.pi * rng.random((num_tx, num_tx)))
    X_L = np.linalg.svd(A, full_matrices=False)[0]
    X_R = np.linalg.svd(B, full_matrices=False)[0]
    return FeaturePair(X_L=X_L, X_R=X_R, seed=seed)


def identity_features(num_rx: int, num_tx: int) -> FeaturePair:
    """Identity features, under which the pipeline reduces to direct sampling."""
    return FeaturePair(X_L=np.eye(num_rx, dtype=complex),
                       X_R=np.eye(num_tx, dtype=complex), seed=None)


def transform_channel(H, features: FeaturePair) -> np.ndarray:
    """Feature-domain matrix C = X_L^H H X_R."""
    H = check_complex_matrix(H, "H")
    if H.shape != features.shape:
        raise ConfigError("channel shape does not match the features")
    return features.X_L.conj().T @ H @ features.X_R


def recover_channel(C_hat, features: FeaturePair) -> np.ndarray:
    """Back-transform a feature-domain estimate: X_L C_hat X_R^H."""
    C_hat = check_complex_matrix(C_hat, "C_hat")
    if C_hat.shape != features.shape:
        raise ConfigError("estimate shape does not match the features")
    return features.X_L @ C_hat @ features.X_R.conj().T


def simulate_imc_training(H_eff, features: FeaturePair,
                          pattern: SamplingPattern,
                          pnr_db: float | None = None, seed=None,
                          plan: TrainingPlan | None = None,
                          impairments: ImpairmentProfile | None = None,
                          pilot_power: float = 1.0) -> ObservationMatrix:
    """Sample C = X_L^H H_eff X_R on the pattern with combiner-projected noise.

    Entry (i, j) observes x_L_i^H H_eff x_R_j * sqrt(P) plus
    x_L_i^H (E_r n) with n drawn fresh per training step, so the realized
    noise variance under receive impairments is sum_m |rx_m x_L[m,i]|^2
    sigma^2 exactly.  When ``plan`` is given the stage/step schedule (and
    hence the noise draw order) matches the direct-sampling simulator; with
    identity features the two produce bit-identical observations for the
    same seed.  Without a plan each column is sampled in a single step,
    stage m sounding column (m+1) mod N_t.
    """
    H_eff = check_complex_matrix(H_eff, "H_eff")
    n_r, n_t = H_eff.shape
    if (n_r, n_t) != features.shape:
        raise ConfigError("channel shape does not match the features")
    if (n_r, n_t) != (pattern.num_rows, pattern.num_cols):
        raise ConfigError("channel shape does not match the sampling pattern")
    if plan is not None and not np.array_equal(plan.pattern.rows_by_column,
                                               pattern.rows_by_column):
        raise ConfigError("plan was built for a different sampling pattern")

    rng = check_rng(seed)
    sigma2 = pnr_to_noise_var(pnr_db, pilot_power)
    amp = np.sqrt(pilot_power)
    rx_err = None
    if impairments is not None and not np.all(impairments.rx == 1.0):
        rx_err = impairments.rx
    C_eff = features.X_L.conj().T @ H_eff @ features.X_R

    if plan is not None:
        schedule = [(st.transmit.column, np.array(s.rows, int))
                    for st in plan.stages for s in st.steps]
    else:
        schedule = []
        for m in range(n_t):
            col = stage_target_column(m, n_t)
            rows = np.array(pattern.rows_by_column[col], int)
            if len(rows):
                schedule.append((col, rows))

    out = np.zeros((n_r, n_t), complex)
    mask = np.zeros((n_r, n_t), bool)
    for col, rows in schedule:
        if sigma2 > 0.0:
            raw = rng.standard_normal(2 * n_r) * np.sqrt(sigma2 / 2.0)
            noise = raw[0::2] + 1j * raw[1::2]
            if rx_err is not None:
                noise = rx_err * noise
            vals = C_eff[rows, col] + (features.X_L.conj().T @ noise)[rows] / amp
        else:
            vals = C_eff[rows, col]
        out[rows, col] = vals
        mask[rows, col] = True

    return ObservationMatrix(matrix=out, mask=mask, noise_var=sigma2 / pilot_power,
                             pnr_db=pnr_db, mode="imc")


class IncoherenceReport(NamedTuple):
    left_subspace: float    # max_i ||U^H x_L_i||
    right_subspace: float   # max_j ||V^H x_R_j||
    cross: float            # max_ij |x_L_i^H U V^H x_R_j|
    max_column_norm: float  # over both feature matrices


def incoherence_report(features: FeaturePair, H) -> IncoherenceReport:
    """Coherence maxima of the feature columns against the channel subspaces.

    H = U S V^H is the thin SVD restricted to nonzero singular values; the
    maxima feed standard completion bounds of the form sqrt(mu0 r / N).
    """
    H = check_complex_matrix(H, "H")
    if H.shape != features.shape:
        raise ConfigError("channel shape does not match the features")
    Uf, s, Vh = np.linalg.svd(H, full_matrices=False)
    keep = s > s[0] * 1e-12 if s[0] > 0 else np.zeros_like(s, bool)
    if not np.any(keep):
        raise ConfigError("channel matrix has zero energy")
    U = Uf[:, keep]
    V = Vh[keep].conj().T
    left = np.linalg.norm(U.conj().T @ features.X_L, axis=0)
    right = np.linalg.norm(V.conj().T @ features.X_R, axis=0)
    cross = np.abs(features.X_L.conj().T @ (U @ V.conj().T) @ features.X_R)
    col_norm = max(np.linalg.norm(features.X_L, axis=0).max(),
                   np.linalg.norm(features.X_R, axis=0).max())
    return IncoherenceReport(left_subspace=float(left.max()),
                             right_subspace=float(right.max()),
                             cross=float(cross.max()),
                             max_column_norm=float(col_norm))
