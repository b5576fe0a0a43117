"""Experiment orchestration: configs, deterministic sweeps, CSV records.

A sweep runs (points x trials x estimators) and emits one record per
estimator run.  Seeding is keyed by trial only, so every sweep point reuses
the same channel, impairment draw (scaled to the point's level), sampling
pattern, and noise stream; estimator comparisons across points are paired.
Estimator-internal randomness (solver sketches, sounding beams, feature
seeds) comes from per-estimator child streams keyed by canonical estimator
order, so enabling or disabling one estimator never shifts another's seeds.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import gcg
from .arrays import ULA, ArrayGeometry
from .channel import (ChannelParams, apply_impairments, generate_channel,
                      impairment_profile, normalize_entry_power)
from .exceptions import ConfigError, EstimatorError
from .imc import generate_features, recover_channel, simulate_imc_training
from .metrics import nmse, se_at_snr, subspace_rank, to_db
from .omp import (build_dictionary, build_sounding, eps_for_pnr, observe,
                  omp_estimate)
from .training import (PhaseShifterSet, assemble_training_plan,
                       build_sampling_pattern, simulate_training)

DEG = np.pi / 180.0

ESTIMATOR_ORDER = ("gcg", "omp", "imc", "perfect")
SWEEP_AXES = ("steps_per_stage", "pnr_db", "phase_level_deg", "gain_level",
              "density", "point")


@dataclass(frozen=True)
class SystemConfig:
    num_tx: int = 128
    num_rx: int = 32
    tx_chains: int = 16
    rx_chains: int = 4
    shifter_bits: int = 6
    tx_kind: str = ULA
    rx_kind: str = ULA
    spacing: float = 0.5

    def tx_geometry(self) -> ArrayGeometry:
        return ArrayGeometry(kind=self.tx_kind, num_antennas=self.num_tx,
                             spacing=self.spacing)

    def rx_geometry(self) -> ArrayGeometry:
        return ArrayGeometry(kind=self.rx_kind, num_antennas=self.num_rx,
                             spacing=self.spacing)

    def shifter(self) -> PhaseShifterSet:
        return PhaseShifterSet(bits=self.shifter_bits)


@dataclass(frozen=True)
class ChannelSettings:
    cluster_rate: float = 1.8
    max_rays: int = 20
    power_decay: float = 2.0
    shadow_scale: float = 0.6
    spread_az_aoa_deg: float = 15.5
    spread_el_aoa_deg: float = 6.0
    spread_az_aod_deg: float = 10.2
    spread_el_aod_deg: float = 0.0
    normalize: bool = True

    def params(self) -> ChannelParams:
        return ChannelParams(
            cluster_rate=self.cluster_rate, max_rays=self.max_rays,
            power_decay=self.power_decay, shadow_scale=self.shadow_scale,
            spread_az_aoa=self.spread_az_aoa_deg * DEG,
            spread_el_aoa=self.spread_el_aoa_deg * DEG,
            spread_az_aod=self.spread_az_aod_deg * DEG,
            spread_el_aod=self.spread_el_aod_deg * DEG)


@dataclass(frozen=True)
class ImpairmentSettings:
    phase_tx_deg: float = 0.0
    phase_rx_deg: float = 0.0
    gain_tx: float = 0.0
    gain_rx: float = 0.0


@dataclass(frozen=True)
class TrainingSettings:
    steps_per_stage: int = 4
    num_stages: int | None = None      # defaults to the transmit array size
    pnr_db: float | None = 20.0
    density: float | None = None       # defaults to S*(K_r-1)/N_r
    pilot_power: float = 1.0


@dataclass(frozen=True)
class OmpSettings:
    grid_factor: int = 2
    max_paths: int = 64
    eps_stop: float | None = None      # defaults to the PNR-tuned table


@dataclass(frozen=True)
class EvalSettings:
    num_streams: int = 4
    se_snrs_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0)
    energy_fraction: float = 0.95


@dataclass(frozen=True)
class SweepSettings:
    axis: str = "point"
    values: tuple = (0,)


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    impairments: ImpairmentSettings = field(default_factory=ImpairmentSettings)
    training: TrainingSettings = field(default_factory=TrainingSettings)
    estimators: tuple = ("gcg", "omp")
    solver: dict = field(default_factory=dict)
    omp: OmpSettings = field(default_factory=OmpSettings)
    evaluation: EvalSettings = field(default_factory=EvalSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    trials: int = 200
    master_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for name in self.estimators:
            if name not in ESTIMATOR_ORDER:
                raise ConfigError(f"unknown estimator {name!r}; expected a "
                                  f"subset of {ESTIMATOR_ORDER}")
        if not self.estimators:
            raise ConfigError("at least one estimator must be selected")
        if self.sweep.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.sweep.axis!r}; "
                              f"expected one of {SWEEP_AXES}")
        if not self.sweep.values:
            raise ConfigError("sweep values must be non-empty")


def _build_section(cls, doc: dict, section: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown {section} fields: {sorted(unknown)}")
    converted = {}
    for key, value in doc.items():
        if isinstance(value, list):
            value = tuple(value)
        converted[key] = value
    try:
        return cls(**converted)
    except TypeError as exc:
        raise ConfigError(f"bad {section} section: {exc}") from exc


def load_config(source) -> ExperimentConfig:
    """Build an ExperimentConfig from a dict, JSON text, or JSON file path."""
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, (str, bytes)):
        text = str(source)
        if not text.lstrip().startswith("{"):
            try:
                with open(text, "r", encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    elif isinstance(source, dict):
        doc = dict(source)
    else:
        raise ConfigError("config must be a dict, JSON text, or file path")

    sections = {"system": SystemConfig, "channel": ChannelSettings,
                "impairments": ImpairmentSettings, "training": TrainingSettings,
                "omp": OmpSettings, "evaluation": EvalSettings,
                "sweep": SweepSettings}
    known = set(sections) | {"estimators", "solver", "trials", "master_seed"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")

    kwargs = {}
    for name, cls in sections.items():
        if name in doc:
            if not isinstance(doc[name], dict):
                raise ConfigError(f"config section {name!r} must be an object")
            kwargs[name] = _build_section(cls, doc[name], name)
    if "estimators" in doc:
        kwargs["estimators"] = tuple(doc["estimators"])
    if "solver" in doc:
        if not isinstance(doc["solver"], dict):
            raise ConfigError("config section 'solver' must be an object")
        allowed = {"mu", "eps_outer", "eps_inner", "max_rank", "max_inner",
                   "power_iters", "oversample", "refine_tol", "max_refine"}
        unknown = set(doc["solver"]) - allowed
        if unknown:
            raise ConfigError(f"unknown solver fields: {sorted(unknown)}")
        kwargs["solver"] = dict(doc["solver"])
    for name in ("trials", "master_seed"):
        if name in doc:
            kwargs[name] = doc[name]
    return ExperimentConfig(**kwargs)


@dataclass
class ResultRecord:
    """One estimator run at one (sweep point, trial)."""

    axis: str
    point: float
    trial: int
    estimator: str
    nmse_lin: float
    nmse_db: float
    se: dict
    r_hat: int
    r_sub: int
    flops: float
    seed: int
    wall_ms: float
    se_deficient: bool = False
    error: str = ""


def _point_config(config: ExperimentConfig, value):
    axis = config.sweep.axis
    if axis == "point":
        return config
    if axis == "steps_per_stage":
        return replace(config,
                       training=replace(config.training, steps_per_stage=int(value)))
    if axis == "pnr_db":
        return replace(config, training=replace(config.training, pnr_db=float(value)))
    if axis == "phase_level_deg":
        return replace(config, impairments=replace(
            config.impairments, phase_tx_deg=float(value), phase_rx_deg=float(value)))
    if axis == "gain_level":
        return replace(config, impairments=replace(
            config.impairments, gain_tx=float(value), gain_rx=float(value)))
    if axis == "density":
        return replace(config, training=replace(config.training, density=float(value)))
    raise ConfigError(f"unknown sweep axis {axis!r}")


def _derived(config: ExperimentConfig):
    sys = config.system
    tr = config.training
    num_stages = tr.num_stages if tr.num_stages is not None else sys.num_tx
    if tr.density is not None:
        density = tr.density
    else:
        density = tr.steps_per_stage * (sys.rx_chains - 1) / sys.num_rx
    if not 0 < density <= 1:
        raise ConfigError(f"training density {density} outside (0, 1]")
    num_measurements = num_stages * tr.steps_per_stage * sys.rx_chains
    return num_stages, density, num_measurements


def _safe_se(H_eff, H_hat, num_streams, snr_db):
    if not np.any(H_hat):
        return 0.0, True
    return se_at_snr(H_eff, H_hat, num_streams, snr_db)


_dictionary_cache: dict = {}


def _cached_dictionary(tx_geom, rx_geom, grid_tx, grid_rx):
    key = (tx_geom, rx_geom, grid_tx, grid_rx)
    if key not in _dictionary_cache:
        _dictionary_cache[key] = build_dictionary(tx_geom, rx_geom,
                                                  grid_tx, grid_rx)
    return _dictionary_cache[key]


def run_trial(config: ExperimentConfig, trial: int, point_value=None):
    """Run all configured estimators for one trial; returns ResultRecords.

    ``point_value`` positions the trial on the sweep axis (None uses the
    configured scalar settings unchanged).
    """
    cfg = _point_config(config, point_value) if point_value is not None \
        else config
    sys = cfg.system
    num_stages, density, num_measurements = _derived(cfg)
    shifter = sys.shifter()
    tx_geom, rx_geom = sys.tx_geometry(), sys.rx_geometry()

    ss = np.random.SeedSequence(config.master_seed, spawn_key=(trial,))
    s_chan, s_imp, s_pat, s_noise, s_est = ss.spawn(5)
    est_children = dict(zip(ESTIMATOR_ORDER, s_est.spawn(len(ESTIMATOR_ORDER))))

    realization = generate_channel(cfg.channel.params(), tx_geom, rx_geom,
                                   seed=s_chan)
    if cfg.channel.normalize:
        realization = normalize_entry_power(realization)
    imp = impairment_profile(
        sys.num_tx, sys.num_rx, phase_level=cfg.impairments.phase_tx_deg * DEG,
        gain_level=cfg.impairments.gain_tx, seed=s_imp,
        phase_level_rx=cfg.impairments.phase_rx_deg * DEG,
        gain_level_rx=cfg.impairments.gain_rx)
    H_eff = apply_impairments(realization.matrix, imp)
    imp_arg = None if imp.is_identity else imp

    pattern = build_sampling_pattern(sys.num_rx, sys.num_tx, density,
                                     seed=s_pat)
    plan = assemble_training_plan(pattern, sys.tx_chains, sys.rx_chains,
                                  shifter, num_stages=num_stages,
                                  steps_per_stage=cfg.training.steps_per_stage)
    r_sub = subspace_rank(H_eff, cfg.evaluation.energy_fraction)
    axis = config.sweep.axis
    point = point_value if point_value is not None else config.sweep.values[0]

    records = []
    for name in cfg.estimators:
        child = est_children[name]
        start = time.perf_counter()
        error = ""
        H_hat = np.zeros_like(H_eff)
        r_hat, flops = 0, 0.0
        try:
            if name == "gcg":
                obs = simulate_training(H_eff, plan, cfg.training.pnr_db,
                                        seed=np.random.default_rng(s_noise),
                                        impairments=imp_arg,
                                        pilot_power=cfg.training.pilot_power)
                solver = gcg.SolverConfig(noise_var=obs.noise_var, seed=child,
                                          **cfg.solver)
                result = gcg.estimate(obs, solver)
                H_hat, r_hat, flops = result.matrix, result.rank, result.flops
            elif name == "imc":
                feat_seed, solver_seed = child.spawn(2)
                features = generate_features(sys.num_rx, sys.num_tx,
                                             seed=feat_seed)
                obs = simulate_imc_training(
                    H_eff, features, pattern, cfg.training.pnr_db,
                    seed=np.random.default_rng(s_noise), plan=plan,
                    impairments=imp_arg, pilot_power=cfg.training.pilot_power)
                solver = gcg.SolverConfig(noise_var=obs.noise_var,
                                          seed=solver_seed, **cfg.solver)
                result = gcg.estimate(obs, solver)
                H_hat = recover_channel(result.matrix, features)
                r_hat, flops = result.rank, result.flops
            elif name == "omp":
                sounding = build_sounding(
                    sys.num_tx, sys.num_rx, sys.tx_chains, sys.rx_chains,
                    num_measurements, shifter, seed=child,
                    num_transmit_beams=num_stages)
                dictionary = _cached_dictionary(
                    tx_geom, rx_geom, cfg.omp.grid_factor * sys.num_tx,
                    cfg.omp.grid_factor * sys.num_rx)
                obs = observe(H_eff, sounding, cfg.training.pnr_db,
                              seed=np.random.default_rng(s_noise),
                              impairments=imp_arg,
                              pilot_power=cfg.training.pilot_power)
                if cfg.omp.eps_stop is not None:
                    eps = cfg.omp.eps_stop
                elif cfg.training.pnr_db is None:
                    eps = 0.0
                else:
                    eps = eps_for_pnr(cfg.training.pnr_db, obs.noise_var)
                result = omp_estimate(obs, sounding, dictionary, eps,
                                      max_paths=cfg.omp.max_paths)
                H_hat, r_hat, flops = result.matrix, result.rank, result.flops
            elif name == "perfect":
                H_hat, r_hat, flops = H_eff.copy(), r_sub, 0.0
        except EstimatorError as exc:
            error = str(exc)

        wall_ms = (time.perf_counter() - start) * 1e3
        if error:
            records.append(ResultRecord(
                axis=axis, point=point, trial=trial, estimator=name,
                nmse_lin=float("nan"), nmse_db=float("nan"),
                se={snr: float("nan") for snr in cfg.evaluation.se_snrs_db},
                r_hat=r_hat, r_sub=r_sub, flops=flops,
                seed=config.master_seed, wall_ms=wall_ms, error=error))
            continue
        value = nmse(H_hat, H_eff)
        se, deficient = {}, False
        for snr in cfg.evaluation.se_snrs_db:
            rate, flagged = _safe_se(H_eff, H_hat,
                                     cfg.evaluation.num_streams, snr)
            se[snr] = rate
            deficient = deficient or flagged
        records.append(ResultRecord(
            axis=axis, point=point, trial=trial, estimator=name,
            nmse_lin=value, nmse_db=to_db(value), se=se, r_hat=r_hat,
            r_sub=r_sub, flops=flops, seed=config.master_seed,
            wall_ms=wall_ms, se_deficient=deficient))
    return records


def run_sweep(config: ExperimentConfig, progress=None):
    """Generate records for every (sweep point, trial) in deterministic order."""
    config = load_config(config)
    total = len(config.sweep.values) * config.trials
    done = 0
    for value in config.sweep.values:
        for trial in range(config.trials):
            yield from run_trial(config, trial, point_value=value)
            done += 1
            if progress is not None:
                progress(done, total)


def csv_header(config: ExperimentConfig) -> list:
    se_cols = [f"se_at_snr_{snr:g}" for snr in config.evaluation.se_snrs_db]
    return ([config.sweep.axis, "trial", "estimator", "nmse_db"] + se_cols
            + ["r_hat", "r_sub", "flops", "seed", "nmse_lin", "se_deficient",
               "error", "wall_ms"])


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_records_csv(records, config: ExperimentConfig, fh) -> int:
    """Write records in the fixed column order; returns the row count."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(csv_header(config))
    count = 0
    for rec in records:
        row = [_fmt(rec.point), rec.trial, rec.estimator, _fmt(rec.nmse_db)]
        row += [_fmt(rec.se[snr]) for snr in config.evaluation.se_snrs_db]
        row += [rec.r_hat, rec.r_sub, _fmt(rec.flops), rec.seed,
                _fmt(rec.nmse_lin), int(rec.se_deficient), rec.error,
                _fmt(rec.wall_ms)]
        writer.writerow(row)
        count += 1
    return count


def read_records_csv(fh):
    """Read a results CSV back into a list of plain dicts (values as strings
    except the numeric fields needed by the post-processing commands)."""
    reader = csv.DictReader(fh)
    rows = []
    for raw in reader:
        row = dict(raw)
        for key in ("r_hat", "r_sub", "trial"):
            if key in row and row[key] != "":
                row[key] = int(row[key])
        for key in ("nmse_db", "nmse_lin", "flops", "wall_ms"):
            if key in row and row[key] != "":
                row[key] = float(row[key])
        rows.append(row)
    return rows


@dataclass
class RankHistogram:
    """Normalized rank histograms on shared integer bin edges."""

    edges: np.ndarray
    series: dict      # name -> normalized counts (sum 1)


def rank_distribution(records) -> RankHistogram:
    """Histogram r_sub next to every estimator's r_hat on matching bins.

    ``records`` may be ResultRecords or dicts from read_records_csv.  r_sub
    is deduplicated per (point, trial) since all estimators share it.
    """
    records = list(records)
    if not records:
        raise ConfigError("no records to histogram")

    def get(rec, name):
        return rec[name] if isinstance(rec, dict) else getattr(rec, name)

    def point_of(rec):
        # dict rows name the point column after the sweep axis, so it is
        # simply the first CSV column
        if isinstance(rec, dict):
            return next(iter(rec.values()))
        return rec.point

    r_sub = {}
    per_est = {}
    for rec in records:
        key = (point_of(rec), get(rec, "trial"))
        r_sub[key] = int(get(rec, "r_sub"))
        name = get(rec, "estimator")
        if name != "perfect":
            per_est.setdefault(name, []).append(int(get(rec, "r_hat")))

    values = {"r_sub": list(r_sub.values())}
    values.update({f"r_hat_{name}": v for name, v in per_est.items()})
    top = max(max(v) for v in values.values() if v)
    edges = np.arange(0, top + 2) - 0.5
    series = {}
    for name, v in values.items():
        counts, _ = np.histogram(v, bins=edges)
        series[name] = counts / len(v)
    return RankHistogram(edges=edges, series=series)
