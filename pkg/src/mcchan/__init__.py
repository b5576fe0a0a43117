"""Matrix-completion channel estimation for hybrid mmWave MIMO arrays.

Simulation library and experiment harness: clustered channel synthesis,
phase-shifter-constrained training that yields entrywise channel samples,
a greedy low-rank completion solver with alternating refinement, an
inductive (feature-domain) variant, a dictionary-based greedy baseline,
and metrics/sweep plumbing behind a CLI.
"""

from .arrays import ULA, USPA, ArrayGeometry, steering_vector, ula_response, \
    uspa_response
from .channel import (ChannelParams, ChannelRealization, ImpairmentProfile,
                      apply_impairments, assemble_matrix, energy_capture_rank,
                      generate_channel, identity_profile, impairment_profile,
                      normalize_entry_power)
from .exceptions import ConfigError, EstimatorError, GenerationError
from .gcg import (FactorEstimate, GCGAltEstimator, SolverConfig, altmin_refine,
                  descent_atom, estimate, line_search_theta, top_singular_pair)
from .harness import (ExperimentConfig, ResultRecord, load_config,
                      rank_distribution, run_sweep, run_trial,
                      write_records_csv)
from .imc import (FeaturePair, generate_features, identity_features,
                  incoherence_report, recover_channel, simulate_imc_training,
                  transform_channel)
from .metrics import (nmse, nmse_db, se_at_snr, spectral_efficiency,
                      spectral_efficiency_from_estimate, subspace_rank)
from .omp import (Dictionary, OmpChannelEstimator, OmpEstimate,
                  SoundingOperator, build_dictionary, build_sounding,
                  eps_for_pnr, observe, omp_estimate)
from .training import (ObservationMatrix, PhaseShifterSet, SamplingPattern,
                       TrainingPlan, assemble_training_plan,
                       build_sampling_pattern, design_receive_step,
                       design_transmit_stage, pnr_to_noise_var,
                       simulate_training)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
