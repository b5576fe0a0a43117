"""Hybrid training design and simulation for entrywise channel sampling.

Transmit side: each training stage m sounds exactly one channel column with
f_m = G_m @ b_m = e_j, where the analog matrix G_m has quantized-phase
entries (scaled by 1/sqrt(K_t)) and b_m compensates.  Receive side: each
step applies W = Q @ D, a 0/1 column-selection matrix realized by a
quantized-phase analog combiner Q and a digital combiner D, picking up to
K_r - 1 channel rows per step.

Together the stages and steps observe a uniform spatial sampling (USS)
pattern of the channel matrix, one noisy entry per (row, column) sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channel import ImpairmentProfile
from .exceptions import ConfigError
from .validation import check_complex_matrix, check_positive_int, check_rng


@dataclass(frozen=True)
class PhaseShifterSet:
    """The 2^bits quantized phase values exp(j*2*pi*k/2^bits)."""

    bits: int

    def __post_init__(self):
        check_positive_int(self.bits, "bits")

    @property
    def size(self) -> int:
        return 1 << self.bits

    @cached_property
    def values(self) -> np.ndarray:
        k = np.arange(self.size)
        out = np.exp(2j * np.pi * k / self.size)
        out.flags.writeable = False
        return out

    def power(self, exponent: int, power: int) -> complex:
        """Exact table value of (omega_exponent)**power.

        Computed by reducing the phase index modulo 2^bits so repeated
        products never accumulate rounding error.
        """
        return self.values[(exponent * power) % self.size]

    def contains(self, z: np.ndarray, tol: float = 0.0) -> bool:
        """True when every entry of z is (exactly, by default) a member."""
        vals = self.values
        flat = np.asarray(z, complex).ravel()
        if tol == 0.0:
            return bool(np.all(np.isin(flat, vals)))
        d = np.min(np.abs(flat[:, None] - vals[None, :]), axis=1)
        return bool(np.all(d <= tol))


def stage_target_column(stage: int, num_columns: int) -> int:
    """Column sounded by 0-based stage index; cycles through all columns
    starting at column 1 so that num_columns stages cover each once."""
    return (stage + 1) % num_columns


@dataclass(frozen=True)
class TransmitStage:
    """Analog/digital factor pair with G @ b = e_column."""

    analog: np.ndarray    # N_t x K_t, entries are phase-set values / sqrt(K_t)
    digital: np.ndarray   # (K_t,)
    column: int
    # analog * sqrt(K_t) in exact arithmetic: the unit-modulus phase-set
    # members before normalization.  Kept verbatim because multiplying the
    # scaled entries back by an irrational sqrt(K_t) would round.
    analog_scaled: np.ndarray = None

    @property
    def beam(self) -> np.ndarray:
        return self.analog @ self.digital


def design_transmit_stage(column: int, num_tx: int, num_chains: int,
                          shifter: PhaseShifterSet,
                          exponents: tuple[int, int] = (0, 1)) -> TransmitStage:
    """Design (G, b) realizing the column-selecting beam e_column.

    The two generator rows are geometric sequences omega_{n_i}^(l-1) scaled
    by 1/sqrt(K_t); b solves the wide system so the first generator row maps
    to 1 and the second to 0.  Every other antenna row repeats the second
    generator row, and the target antenna row carries the first.
    """
    check_positive_int(num_tx, "num_tx")
    if num_chains < 2:
        raise ConfigError("transmit design needs at least 2 RF chains")
    if not 0 <= column < num_tx:
        raise ConfigError(f"column {column} out of range for {num_tx} antennas")
    n1, n2 = exponents
    if (n1 - n2) % shifter.size == 0:
        raise ConfigError("generator exponents must differ modulo the phase-set size")

    scale = 1.0 / np.sqrt(num_chains)
    powers = np.arange(num_chains)
    raw_sel = shifter.values[(n1 * powers) % shifter.size]
    raw_null = shifter.values[(n2 * powers) % shifter.size]

    G1 = np.vstack([raw_sel, raw_null]) * scale
    gram = G1 @ G1.conj().T
    b = G1.conj().T @ np.linalg.solve(gram, np.array([1.0, 0.0], complex))

    G_raw = np.tile(raw_null, (num_tx, 1))
    G_raw[column] = raw_sel
    return TransmitStage(analog=G_raw * scale, digital=b, column=column,
                         analog_scaled=G_raw)


@dataclass(frozen=True)
class ReceiveStep:
    """Analog/digital factor pair with Q @ D a 0/1 row-selection matrix."""

    analog: np.ndarray    # N_r x K_r, entries are phase-set values / sqrt(K_r)
    digital: np.ndarray   # K_r x n_selected
    rows: tuple           # selected channel rows, one per output column
    # analog * sqrt(K_r) in exact arithmetic, see TransmitStage.analog_scaled.
    analog_scaled: np.ndarray = None

    @property
    def combiner(self) -> np.ndarray:
        return self.analog @ self.digital


def design_receive_step(rows, num_rx: int, num_chains: int,
                        shifter: PhaseShifterSet,
                        exponents=None) -> ReceiveStep:
    """Design (Q, D) whose product selects the given channel rows.

    Q stacks K_r geometric-sequence rows omega_{n_k}^(l-1) / sqrt(K_r) with
    distinct exponents; D = Q1^-1 @ [I; 0] so the product reproduces an
    identity on the first len(rows) generator rows.  The generator rows are
    then permuted so the selecting rows land at the requested antenna
    positions, and all remaining antenna rows repeat the last generator row
    (which the digital combiner nulls).
    """
    rows = tuple(int(r) for r in rows)
    check_positive_int(num_rx, "num_rx")
    if num_chains < 2:
        raise ConfigError("receive design needs at least 2 RF chains")
    if num_rx < num_chains:
        raise ConfigError("receive design needs num_rx >= num_chains")
    n_sel = len(rows)
    if n_sel == 0:
        raise ConfigError("receive step must select at least one row")
    if n_sel > num_chains - 1:
        raise ConfigError(
            f"receive step selects {n_sel} rows; limit is num_chains - 1 = {num_chains - 1}")
    if len(set(rows)) != n_sel:
        raise ConfigError("selected rows must be distinct")
    if not all(0 <= r < num_rx for r in rows):
        raise ConfigError("selected row out of range")

    if exponents is None:
        exponents = tuple(range(num_chains))
    if len(exponents) != num_chains:
        raise ConfigError("need one generator exponent per RF chain")
    if len({e % shifter.size for e in exponents}) != num_chains:
        raise ConfigError(
            f"phase set with {shifter.size} points cannot supply "
            f"{num_chains} distinct generator exponents")

    scale = 1.0 / np.sqrt(num_chains)
    exp_grid = np.multiply.outer(np.asarray(exponents, int),
                                 np.arange(num_chains))
    Q1_raw = shifter.values[exp_grid % shifter.size]
    Q1 = Q1_raw * scale
    W1 = np.zeros((num_chains, n_sel), complex)
    W1[:n_sel, :n_sel] = np.eye(n_sel)
    D = np.linalg.solve(Q1, W1)

    Q_raw = np.tile(Q1_raw[num_chains - 1], (num_rx, 1))
    for q, r in enumerate(rows):
        Q_raw[r] = Q1_raw[q]
    spare = [r for r in range(num_rx) if r not in rows]
    for i, q in enumerate(range(n_sel, num_chains - 1)):
        Q_raw[spare[i]] = Q1_raw[q]
    return ReceiveStep(analog=Q_raw * scale, digital=D, rows=rows,
                       analog_scaled=Q_raw)


@dataclass(frozen=True)
class SamplingPattern:
    """Uniform spatial sampling: the same number of distinct rows drawn
    per column, without replacement, stored sorted ascending."""

    num_rows: int
    num_cols: int
    rows_by_column: np.ndarray   # (num_cols, per_column) ints, sorted
    seed: int | None = None

    @property
    def per_column(self) -> int:
        return self.rows_by_column.shape[1]

    @property
    def density(self) -> float:
        return self.per_column / self.num_rows

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros((self.num_rows, self.num_cols), bool)
        for t in range(self.num_cols):
            m[self.rows_by_column[t], t] = True
        return m


def build_sampling_pattern(num_rows: int, num_cols: int, density: float,
                           seed=None) -> SamplingPattern:
    """Sample density*num_rows distinct rows per column.

    density*num_rows must be an integer (to within 1e-9) in [1, num_rows].
    """
    check_positive_int(num_rows, "num_rows")
    check_positive_int(num_cols, "num_cols")
    per_col_f = density * num_rows
    per_col = int(round(per_col_f))
    if abs(per_col_f - per_col) > 1e-9:
        raise ConfigError(
            f"density {density} gives a non-integer per-column count {per_col_f}")
    if not 1 <= per_col <= num_rows:
        raise ConfigError(f"per-column sample count {per_col} out of range")
    rng = check_rng(seed)
    rows = np.empty((num_cols, per_col), int)
    for t in range(num_cols):
        rows[t] = np.sort(rng.choice(num_rows, per_col, replace=False))
    return SamplingPattern(num_rows=num_rows, num_cols=num_cols,
                           rows_by_column=rows,
                           seed=seed if isinstance(seed, (int, np.integer)) else None)


@dataclass(frozen=True)
class TrainingStage:
    transmit: TransmitStage
    steps: tuple            # ReceiveStep per active step


@dataclass(frozen=True)
class TrainingPlan:
    """Complete schedule of stages and steps realizing a sampling pattern."""

    pattern: SamplingPattern
    stages: tuple
    shifter: PhaseShifterSet
    tx_chains: int
    rx_chains: int
    steps_per_stage: int

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    def observation_layout(self):
        """Index map between stacked per-stage outputs and channel entries.

        Returns (rows, cols, y_row, y_col): channel coordinates of each
        sample and its position in the stacked observation matrix whose
        column j collects stage j's outputs in step order.
        """
        rows, cols, yr, yc = [], [], [], []
        for j, stage in enumerate(self.stages):
            i = 0
            for step in stage.steps:
                for r in step.rows:
                    rows.append(r)
                    cols.append(stage.transmit.column)
                    yr.append(i)
                    yc.append(j)
                    i += 1
        return (np.array(rows), np.array(cols), np.array(yr), np.array(yc))


def assemble_training_plan(pattern: SamplingPattern, tx_chains: int,
                           rx_chains: int, shifter: PhaseShifterSet,
                           num_stages: int | None = None,
                           steps_per_stage: int | None = None) -> TrainingPlan:
    """Schedule stages/steps realizing the pattern.

    Stage m sounds column (m+1) mod num_cols; that column's sampled rows are
    chunked in ascending order into steps of at most rx_chains - 1 rows (a
    smaller final chunk is allowed).  When a column is visited several times
    (num_stages > num_cols) its chunks are dealt to the visits in order.
    """
    if num_stages is None:
        num_stages = pattern.num_cols
    if num_stages < pattern.num_cols:
        raise ConfigError("need at least one stage per sampled column")
    cap = rx_chains - 1
    if cap < 1:
        raise ConfigError("rx_chains must be >= 2")

    chunks = {}
    for col in range(pattern.num_cols):
        r = pattern.rows_by_column[col]
        chunks[col] = [tuple(r[i:i + cap]) for i in range(0, len(r), cap)]
    max_chunks = max(len(c) for c in chunks.values())

    visits = {}
    for m in range(num_stages):
        visits.setdefault(stage_target_column(m, pattern.num_cols), []).append(m)
    min_visits = min(len(v) for v in visits.values())

    if steps_per_stage is None:
        steps_per_stage = -(-max_chunks // min_visits)  # ceil
    for col, ch in chunks.items():
        capacity = steps_per_stage * len(visits[col])
        if len(ch) > capacity:
            raise ConfigError(
                f"column {col} needs {len(ch)} steps but the plan provides "
                f"{capacity} (steps_per_stage={steps_per_stage})")

    stage_steps = {m: [] for m in range(num_stages)}
    for col, ch in chunks.items():
        for i, chunk in enumerate(ch):
            stage_steps[visits[col][i // steps_per_stage]].append(chunk)

    stages = []
    for m in range(num_stages):
        col = stage_target_column(m, pattern.num_cols)
        tx = design_transmit_stage(col, pattern.num_cols, tx_chains, shifter)
        steps = tuple(design_receive_step(rows, pattern.num_rows, rx_chains, shifter)
                      for rows in stage_steps[m])
        stages.append(TrainingStage(transmit=tx, steps=steps))
    return TrainingPlan(pattern=pattern, stages=tuple(stages), shifter=shifter,
                        tx_chains=tx_chains, rx_chains=rx_chains,
                        steps_per_stage=steps_per_stage)


@dataclass
class ObservationMatrix:
    """Sampled noisy channel entries scattered onto the channel grid."""

    matrix: np.ndarray        # N_r x N_t with zeros off the mask
    mask: np.ndarray          # bool
    noise_var: float
    pnr_db: float | None
    mode: str = "mc"          # "mc" (direct entries) or "imc" (feature domain)
    stacked: np.ndarray | None = None   # per-stage stacked outputs
    layout: tuple | None = None

    @property
    def num_samples(self) -> int:
        return int(self.mask.sum())


def pnr_to_noise_var(pnr_db: float | None, pilot_power: float = 1.0) -> float:
    """Per-sample complex noise variance for a pilot-to-noise ratio in dB."""
    if pnr_db is None:
        return 0.0
    return pilot_power * 10.0 ** (-float(pnr_db) / 10.0)


def simulate_training(H_eff, plan: TrainingPlan, pnr_db: float | None = None,
                      seed=None, impairments: ImpairmentProfile | None = None,
                      pilot_power: float = 1.0) -> ObservationMatrix:
    """Run the training schedule against an (effective) channel matrix.

    Per step the combiner output is W^H (H_eff f sqrt(P) + E_r n) with W the
    exact row selection the step realizes and f the exact sounded column;
    samples are divided by sqrt(P) so the stored values estimate channel
    entries directly.  A full receiver noise vector is drawn per step (one
    ``standard_normal(2*N_r)`` call) and entries are scaled by the receive
    error multipliers before selection, so row i samples carry noise
    variance |rx_i|^2 sigma^2.
    """
    H_eff = check_complex_matrix(H_eff, "H_eff")
    n_r, n_t = H_eff.shape
    if (n_r, n_t) != (plan.pattern.num_rows, plan.pattern.num_cols):
        raise ConfigError("channel shape does not match the training plan")
    rng = check_rng(seed)
    sigma2 = pnr_to_noise_var(pnr_db, pilot_power)
    amp = np.sqrt(pilot_power)
    rx_err = None
    if impairments is not None and not np.all(impairments.rx == 1.0):
        rx_err = impairments.rx

    out = np.zeros((n_r, n_t), complex)
    mask = np.zeros((n_r, n_t), bool)
    max_rows = max((sum(len(s.rows) for s in st.steps) for st in plan.stages),
                   default=0)
    stacked = np.zeros((max_rows, plan.num_stages), complex)

    for j, stage in enumerate(plan.stages):
        col = stage.transmit.column
        i = 0
        for step in stage.steps:
            rows = np.array(step.rows, int)
            if sigma2 > 0.0:
                raw = rng.standard_normal(2 * n_r) * np.sqrt(sigma2 / 2.0)
                noise = raw[0::2] + 1j * raw[1::2]
                if rx_err is not None:
                    noise = rx_err * noise
                vals = H_eff[rows, col] + noise[rows] / amp
            else:
                vals = H_eff[rows, col]
            out[rows, col] = vals
            mask[rows, col] = True
            stacked[i:i + len(rows), j] = vals
            i += len(rows)

    return ObservationMatrix(matrix=out, mask=mask,
                             noise_var=sigma2 / pilot_power,
                             pnr_db=pnr_db, stacked=stacked,
                             layout=plan.observation_layout())
