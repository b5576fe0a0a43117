"""Dictionary-based greedy baseline estimator.

The channel is modeled on a virtual angular grid, H ~ A_r H_v A_t^H with
sparse H_v, and recovered by orthogonal matching pursuit from beamformed
observations.  Sounding uses M_t quantized-phase transmit beams; for every
transmit beam the receiver applies the same bank of M_r quantized-phase
combining beams, so each observation is w^H H f and the full operator
factors as Y = W^H H F.  Correlations are therefore computed in factored
form (never materializing the N x G_t*G_r sensing-dictionary product).

Estimation quality is grid-limited by design: off-grid path angles are not
snapped, and any basis-mismatch floor (from angle quantization or from
phase/gain errors distorting the array manifold) is part of the measured
behavior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arrays import ULA, USPA, ArrayGeometry, uspa_axis_response
from .channel import ImpairmentProfile
from .exceptions import ConfigError, EstimatorError
from .training import PhaseShifterSet, pnr_to_noise_var
from .validation import check_positive_int, check_rng

# Residual-power stopping thresholds (multiples of the per-sample noise
# variance) tuned per operating PNR in dB; lookups snap to the nearest key.
EPS_TABLE = {0.0: 0.025, 5.0: 0.05, 10.0: 0.1, 15.0: 0.2, 20.0: 0.4}


@dataclass(frozen=True)
class Dictionary:
    """Angular-grid response dictionaries for both link ends.

    ``freq_rx``/``freq_tx`` record the spatial frequency of every column:
    a length-G vector of sine values for a ULA, or a (G, 2) array of
    (sin(az)*sin(el), cos(el)) axis-frequency pairs for a USPA.
    """

    A_r: np.ndarray
    A_t: np.ndarray
    freq_rx: np.ndarray
    freq_tx: np.ndarray

    @property
    def grid_rx(self) -> int:
        return self.A_r.shape[1]

    @property
    def grid_tx(self) -> int:
        return self.A_t.shape[1]

    @property
    def is_unitary(self) -> bool:
        return (self.A_r.shape[0] == self.A_r.shape[1]
                and self.A_t.shape[0] == self.A_t.shape[1])


def _axis_grid(size: int) -> np.ndarray:
    # uniform in the frequency (sine) domain over [-1, 1)
    return -1.0 + 2.0 * np.arange(size) / size


def _ula_grid_matrix(geom: ArrayGeometry, grid_size: int):
    freqs = _axis_grid(grid_size)
    n = np.arange(geom.num_antennas)[:, None]
    A = np.exp(2j * np.pi * geom.spacing * n * freqs[None, :])
    return A / np.sqrt(geom.num_antennas), freqs


def _uspa_grid_matrix(geom: ArrayGeometry, grid_size: int):
    side = int(round(np.sqrt(grid_size)))
    if side * side != grid_size:
        raise ConfigError("uspa grid size must be a perfect square")
    if side < geom.side:
        raise ConfigError("uspa grid side smaller than the array side")
    ug = _axis_grid(side)
    vg = _axis_grid(side)
    ay = np.stack([uspa_axis_response(geom, u) for u in ug], axis=1)
    az = np.stack([uspa_axis_response(geom, v) for v in vg], axis=1)
    A = np.kron(ay, az)
    freqs = np.array([(u, v) for u in ug for v in vg])
    return A, freqs


def build_dictionary(tx: ArrayGeometry, rx: ArrayGeometry,
                     grid_tx: int, grid_rx: int) -> Dictionary:
    """Response dictionaries on sine-uniform angle grids.

    Grid sizes must be at least the array sizes; at equality with
    half-wavelength ULA spacing the dictionary is unitary (DFT columns).
    USPA grids factor into equal per-axis grids, so the grid size must be a
    perfect square.
    """
    check_positive_int(grid_tx, "grid_tx")
    check_positive_int(grid_rx, "grid_rx")
    if grid_tx < tx.num_antennas:
        raise ConfigError("grid_tx smaller than the transmit array")
    if grid_rx < rx.num_antennas:
        raise ConfigError("grid_rx smaller than the receive array")
    builders = {ULA: _ula_grid_matrix, USPA: _uspa_grid_matrix}
    A_t, freq_tx = builders[tx.kind](tx, grid_tx)
    A_r, freq_rx = builders[rx.kind](rx, grid_rx)
    return Dictionary(A_r=A_r, A_t=A_t, freq_rx=freq_rx, freq_tx=freq_tx)


@dataclass(frozen=True)
class SoundingOperator:
    """Beam-pair sounding map: observation (b, m) is W[:, b]^H H F[:, m].

    Receive beams are applied in banks of at most ``bank_size`` columns per
    training step (one fresh receiver noise vector per step).  Flattened
    measurement n = m * M_r + b corresponds to the sensing row
    (F[:, m] kron conj(W[:, b]))^T acting on column-major vec(H).
    """

    F: np.ndarray
    W: np.ndarray
    bank_size: int
    seed: object = None
    # F * sqrt(N_t) and W * sqrt(N_r) in exact arithmetic: the unit-modulus
    # phase-set draws before beam normalization (multiplying the scaled
    # entries back by an irrational sqrt would round).
    F_scaled: np.ndarray = None
    W_scaled: np.ndarray = None

    @property
    def num_transmit(self) -> int:
        return self.F.shape[1]

    @property
    def num_receive(self) -> int:
        return self.W.shape[1]

    @property
    def num_measurements(self) -> int:
        return self.num_transmit * self.num_receive

    def apply(self, H) -> np.ndarray:
        """Noiseless observation matrix Y = W^H H F, shape (M_r, M_t)."""
        return self.W.conj().T @ np.asarray(H, complex) @ self.F

    def apply_vec(self, h_vec) -> np.ndarray:
        """Flattened sensing map on column-major vec(H)."""
        n_r = self.W.shape[0]
        H = np.asarray(h_vec, complex).reshape((-1, n_r)).T
        return self.apply(H).T.ravel()

    def sensing_matrix(self) -> np.ndarray:
        """Dense Phi (num_measurements x N_r*N_t); small cases only."""
        rows = [np.kron(self.F[:, m], self.W[:, b].conj())
                for m in range(self.num_transmit)
                for b in range(self.num_receive)]
        return np.array(rows)


def build_sounding(num_tx: int, num_rx: int, tx_chains: int, rx_chains: int,
                   num_measurements: int, shifter: PhaseShifterSet,
                   seed=None, num_transmit_beams: int | None = None
                   ) -> SoundingOperator:
    """Random quantized-phase beams arranged as a transmit/receive product.

    All beam entries are drawn i.i.d. uniform from the shifter's phase set
    and scaled to unit beam norm.  ``num_transmit_beams`` defaults to the
    transmit array size; ``num_measurements`` must split evenly across the
    transmit beams.  Receive beams are shared across transmit beams and
    applied ``rx_chains`` at a time.
    """
    check_positive_int(num_tx, "num_tx")
    check_positive_int(num_rx, "num_rx")
    check_positive_int(tx_chains, "tx_chains")
    check_positive_int(rx_chains, "rx_chains")
    check_positive_int(num_measurements, "num_measurements")
    m_t = num_transmit_beams if num_transmit_beams is not None \
        else min(num_tx, num_measurements)
    check_positive_int(m_t, "num_transmit_beams")
    if num_measurements % m_t:
        raise ConfigError("num_measurements must divide evenly across "
                          f"{m_t} transmit beams")
    m_r = num_measurements // m_t
    rng = check_rng(seed)
    F_raw = shifter.values[rng.integers(0, shifter.size, (num_tx, m_t))]
    W_raw = shifter.values[rng.integers(0, shifter.size, (num_rx, m_r))]
    return SoundingOperator(F=F_raw / np.sqrt(num_tx), W=W_raw / np.sqrt(num_rx),
                            bank_size=rx_chains, seed=seed,
                            F_scaled=F_raw, W_scaled=W_raw)


@dataclass
class SoundingObservation:
    """Beamformed training outputs with their noise level."""

    Y: np.ndarray            # (M_r, M_t)
    noise_var: float
    pnr_db: float | None

    @property
    def vector(self) -> np.ndarray:
        return self.Y.T.ravel()


def observe(H_eff, sounding: SoundingOperator, pnr_db: float | None = None,
            seed=None, impairments: ImpairmentProfile | None = None,
            pilot_power: float = 1.0) -> SoundingObservation:
    """Sound the channel: per step y = W_bank^H (H_eff f sqrt(P) + E_r n).

    One receiver noise vector is drawn per (transmit beam, receive bank)
    step, mirroring the per-step timing of the selection-based trainer.
    Outputs are divided by sqrt(P) so the stored noise variance is
    sigma^2 / P per combined sample (scaled further by the receive error
    magnitudes when impairments are active).
    """
    H_eff = np.asarray(H_eff, complex)
    n_r = H_eff.shape[0]
    if sounding.W.shape[0] != n_r or sounding.F.shape[0] != H_eff.shape[1]:
        raise ConfigError("sounding operator does not match the channel shape")
    rng = check_rng(seed)
    sigma2 = pnr_to_noise_var(pnr_db, pilot_power)
    amp = np.sqrt(pilot_power)
    rx_err = None
    if impairments is not None and not np.all(impairments.rx == 1.0):
        rx_err = impairments.rx

    Y = sounding.apply(H_eff)
    if sigma2 > 0.0:
        m_r = sounding.num_receive
        for m in range(sounding.num_transmit):
            for start in range(0, m_r, sounding.bank_size):
                stop = min(start + sounding.bank_size, m_r)
                raw = rng.standard_normal(2 * n_r) * np.sqrt(sigma2 / 2.0)
                noise = raw[0::2] + 1j * raw[1::2]
                if rx_err is not None:
                    noise = rx_err * noise
                Y[start:stop, m] += sounding.W[:, start:stop].conj().T @ noise / amp
    return SoundingObservation(Y=Y, noise_var=sigma2 / pilot_power,
                               pnr_db=pnr_db)


def eps_for_pnr(pnr_db: float, noise_var: float) -> float:
    """Residual-power stop threshold: tabulated multiplier times sigma^2.

    The multiplier is looked up at the nearest tabulated PNR (clamping
    outside the 0..20 dB range).
    """
    keys = np.array(sorted(EPS_TABLE))
    nearest = keys[np.argmin(np.abs(keys - float(pnr_db)))]
    return EPS_TABLE[float(nearest)] * noise_var


@dataclass
class OmpEstimate:
    """Greedy estimate with its support and search diagnostics."""

    matrix: np.ndarray
    support: list                  # (rx grid index, tx grid index) pairs
    rank: int                      # number of selected paths
    residuals: list = field(default_factory=list)  # mean |r|^2 per iteration
    corr_evals: int = 0            # correlation evaluations tallied
    flops: float = 0.0


def omp_estimate(observation, sounding: SoundingOperator, dictionary: Dictionary,
                 eps_stop: float, max_paths: int = 64) -> OmpEstimate:
    """Orthogonal matching pursuit over the angular grid.

    Each iteration correlates the residual with all G_r*G_t beam-domain
    atoms in factored form, C = (W^H A_r)^H R (A_t^H F)^H, adds the
    strongest pair to the support, and projects the observation onto the
    enlarged support (an incrementally orthonormalized basis, so the
    residual equals the full least-squares re-fit).  Stops when the
    residual mean square drops to ``eps_stop`` or ``max_paths`` is hit; a
    residual that stops decreasing aborts with a diagnostic.
    """
    if isinstance(observation, SoundingObservation):
        Y = observation.Y
    else:
        Y = np.asarray(observation, complex)
        if Y.ndim == 1:
            Y = Y.reshape((sounding.num_transmit, sounding.num_receive)).T
    if Y.size == 0:
        raise ConfigError("empty observation")
    if Y.shape != (sounding.num_receive, sounding.num_transmit):
        raise ConfigError("observation shape does not match the sounding")
    if eps_stop < 0:
        raise ConfigError("eps_stop must be >= 0")
    check_positive_int(max_paths, "max_paths")

    WA = sounding.W.conj().T @ dictionary.A_r      # (M_r, G_r)
    AF = dictionary.A_t.conj().T @ sounding.F      # (G_t, M_t)
    n_r, g_r = dictionary.A_r.shape
    n_t, g_t = dictionary.A_t.shape
    num = Y.size
    density = num / (n_r * n_t)

    support: list = []
    basis: list = []
    coef = np.zeros(0, complex)
    y = Y.ravel()
    r_vec = y.copy()
    Q = np.empty((num, max_paths), complex)
    k = 0
    prev_rss = float(np.sum(np.abs(r_vec) ** 2))
    residuals = [prev_rss / num]
    corr_evals = 0

    while len(support) < max_paths and residuals[-1] > eps_stop:
        corr = WA.conj().T @ r_vec.reshape(Y.shape) @ AF.conj().T
        corr_evals += g_r * g_t
        flat = int(np.argmax(np.abs(corr)))
        i, j = np.unravel_index(flat, corr.shape)
        if abs(corr[i, j]) <= 1e-14 * np.sqrt(prev_rss):
            break
        support.append((int(i), int(j)))
        atom = np.outer(WA[:, i], AF[j]).ravel()
        basis.append(atom)
        # Gram-Schmidt with one reorthogonalization pass keeps Q numerically
        # orthonormal, so deflating r along q reproduces the least-squares
        # residual on the full support
        w = atom - Q[:, :k] @ (Q[:, :k].conj().T @ atom)
        w -= Q[:, :k] @ (Q[:, :k].conj().T @ w)
        nrm = float(np.linalg.norm(w))
        if nrm > 1e-12 * np.linalg.norm(atom):
            Q[:, k] = w / nrm
            r_vec = r_vec - Q[:, k] * np.vdot(Q[:, k], r_vec)
            k += 1
        rss = float(np.sum(np.abs(r_vec) ** 2))
        if rss >= prev_rss * (1.0 + 1e-10):
            raise EstimatorError(
                "residual stopped decreasing at path "
                f"{len(support)} (rss {prev_rss:.6e} -> {rss:.6e})")
        prev_rss = rss
        residuals.append(rss / num)

    if support:
        B = np.array(basis).T
        coef = np.linalg.lstsq(B, y, rcond=None)[0]

    H_v = np.zeros((g_r, g_t), complex)
    for (i, j), c in zip(support, coef):
        H_v[i, j] += c
    H_hat = dictionary.A_r @ H_v @ dictionary.A_t.conj().T
    rank = len(support)
    flops = 8.0 * density * rank * n_t * n_r * g_t * g_r
    return OmpEstimate(matrix=H_hat, support=support, rank=rank,
                       residuals=residuals, corr_evals=corr_evals, flops=flops)


class OmpChannelEstimator:
    """Scikit-learn style wrapper around the greedy grid estimator.

    Construct with a sounding operator and dictionary, then ``fit`` on an
    observation (a SoundingObservation, the (M_r, M_t) output matrix, or
    the flattened measurement vector).  The fitted channel is available
    from ``predict``/``transform`` and the ``matrix_`` attribute.
    """

    def __init__(self, sounding=None, dictionary=None, eps_stop=0.0,
                 max_paths=64):
        self.sounding = sounding
        self.dictionary = dictionary
        self.eps_stop = eps_stop
        self.max_paths = max_paths

    _param_names = ("sounding", "dictionary", "eps_stop", "max_paths")

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in self._param_names:
                raise ConfigError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def fit(self, X, y=None):
        if self.sounding is None or self.dictionary is None:
            raise ConfigError("sounding and dictionary must be set before fit")
        result = omp_estimate(X, self.sounding, self.dictionary,
                              eps_stop=self.eps_stop, max_paths=self.max_paths)
        self.matrix_ = result.matrix
        self.support_ = result.support
        self.rank_ = result.rank
        self.estimate_ = result
        return self

    def predict(self, X=None):
        if not hasattr(self, "estimate_"):
            raise EstimatorError("estimator is not fitted yet; call fit first")
        return self.matrix_

    def transform(self, X=None):
        return self.predict(X)
