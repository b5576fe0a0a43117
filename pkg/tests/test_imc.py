"""Feature-domain (inductive) training variant tests."""

import numpy as np
import pytest

from mcchan import (ArrayGeometry, ChannelParams, FeaturePair, PhaseShifterSet,
                    assemble_training_plan, build_sampling_pattern,
                    generate_channel, generate_features, identity_features,
                    impairment_profile, apply_impairments, recover_channel,
                    simulate_imc_training, simulate_training, transform_channel)
from mcchan.exceptions import ConfigError
from mcchan.imc import incoherence_report

TX = ArrayGeometry("ula", 64)
RX = ArrayGeometry("ula", 16)


def random_channel(seed):
    return generate_channel(ChannelParams(), TX, RX, seed=seed).matrix


def test_features_are_unitary_and_deterministic():
    feat = generate_features(16, 64, seed=0)
    assert feat.unitarity_error() < 1e-10
    assert abs(abs(np.linalg.det(feat.X_L)) - 1.0) < 1e-8
    again = generate_features(16, 64, seed=0)
    assert np.array_equal(feat.X_L, again.X_L)


def test_condition_number_is_preserved():
    rng = np.random.default_rng(1)
    feat = generate_features(16, 64, seed=2)
    U = rng.standard_normal((16, 4)) + 1j * rng.standard_normal((16, 4))
    V = rng.standard_normal((64, 4)) + 1j * rng.standard_normal((64, 4))
    H = U @ V.conj().T
    s_h = np.linalg.svd(H, compute_uv=False)
    s_c = np.linalg.svd(transform_channel(H, feat), compute_uv=False)
    cond_h = s_h[0] / s_h[3]
    cond_c = s_c[0] / s_c[3]
    assert abs(cond_c - cond_h) / cond_h < 1e-8
    assert np.allclose(s_h, s_c, atol=1e-10 * s_h[0])


def test_round_trip_identity():
    H = random_channel(3)
    feat = generate_features(16, 64, seed=4)
    C = transform_channel(H, feat)
    back = recover_channel(C, feat)
    assert np.max(np.abs(back - H)) < 1e-10
    assert not np.any(recover_channel(np.zeros_like(C), feat))
    # frobenius error is unitarily invariant
    C_hat = C + 0.01 * np.ones_like(C)
    err_c = np.linalg.norm(C_hat - C)
    err_h = np.linalg.norm(recover_channel(C_hat, feat) - H)
    assert err_c == pytest.approx(err_h, rel=1e-10)


def test_noiseless_full_sampling_gives_exact_transform():
    H = random_channel(5)
    feat = generate_features(16, 64, seed=6)
    pat = build_sampling_pattern(16, 64, 1.0, seed=7)
    obs = simulate_imc_training(H, feat, pat)
    assert obs.mode == "imc"
    assert np.max(np.abs(obs.matrix - transform_channel(H, feat))) < 1e-12


def test_identity_features_reduce_to_direct_sampling_bitwise():
    H = random_channel(8)
    imp = impairment_profile(64, 16, phase_level=0.2, gain_level=0.1, seed=10)
    H_eff = apply_impairments(H, imp)
    pat = build_sampling_pattern(16, 64, 0.375, seed=9)
    plan = assemble_training_plan(pat, 4, 4, PhaseShifterSet(6),
                                  steps_per_stage=2)
    mc = simulate_training(H_eff, plan, 15.0, seed=np.random.default_rng(33),
                           impairments=imp)
    im = simulate_imc_training(H_eff, identity_features(16, 64), pat, 15.0,
                               seed=np.random.default_rng(33), plan=plan,
                               impairments=imp)
    assert np.array_equal(mc.matrix, im.matrix)
    assert np.array_equal(mc.mask, im.mask)
    assert mc.noise_var == im.noise_var


def test_imc_noise_variance_is_preserved_by_unit_columns():
    feat = generate_features(16, 64, seed=11)
    pat = build_sampling_pattern(16, 64, 1.0, seed=12)
    H = np.zeros((16, 64), complex)
    rng = np.random.default_rng(13)
    samples = []
    for _ in range(120):
        obs = simulate_imc_training(H, feat, pat, pnr_db=0.0, seed=rng)
        samples.append(obs.matrix.ravel())
    var = np.var(np.concatenate(samples))   # ~120k samples
    assert var == pytest.approx(1.0, rel=0.03)


def test_dft_features_diagonalize_on_grid_channel():
    # on-grid single path: unitary DFT features concentrate C on one entry
    n_r, n_t = 16, 16
    F_r = np.exp(2j * np.pi * np.outer(np.arange(n_r), np.arange(n_r)) / n_r)
    F_t = np.exp(2j * np.pi * np.outer(np.arange(n_t), np.arange(n_t)) / n_t)
    feat = FeaturePair(X_L=F_r / np.sqrt(n_r), X_R=F_t / np.sqrt(n_t))
    # path whose spatial frequency sits exactly on DFT bin 3 resp. 5
    a_r = np.exp(2j * np.pi * 3 * np.arange(n_r) / n_r) / np.sqrt(n_r)
    a_t = np.exp(2j * np.pi * 5 * np.arange(n_t) / n_t) / np.sqrt(n_t)
    H = np.outer(a_r, a_t.conj())
    C = transform_channel(H, feat)
    mass = np.abs(C) ** 2
    peak = np.unravel_index(np.argmax(mass), mass.shape)
    off_peak = mass.sum() - mass[peak]
    assert off_peak < 1e-10 * mass[peak]


def test_incoherence_report_spike_versus_random():
    n_r, n_t = 16, 32
    spike = np.zeros((n_r, n_t), complex)
    spike[1, 2] = 1.0
    ident = identity_features(n_r, n_t)
    rep = incoherence_report(ident, spike)
    assert rep.left_subspace == pytest.approx(1.0)
    assert rep.right_subspace == pytest.approx(1.0)
    assert rep.cross == pytest.approx(1.0)
    assert rep.max_column_norm == pytest.approx(1.0)

    rng = np.random.default_rng(14)
    feat = generate_features(n_r, n_t, seed=15)
    worst = 0.0
    for seed in range(20):
        U = rng.standard_normal((n_r, 2)) + 1j * rng.standard_normal((n_r, 2))
        V = rng.standard_normal((n_t, 2)) + 1j * rng.standard_normal((n_t, 2))
        rep = incoherence_report(feat, U @ V.conj().T)
        worst = max(worst, rep.cross)
    # dense unitary features stay well below the maximally coherent case
    assert worst < 0.6
    assert rep.max_column_norm == pytest.approx(1.0)


def test_shape_and_format_validation():
    feat = generate_features(8, 8, seed=0)
    with pytest.raises(ConfigError):
        transform_channel(np.zeros((4, 8), complex), feat)
    with pytest.raises(ConfigError):
        recover_channel(np.zeros((8, 4), complex), feat)
    with pytest.raises(ConfigError):
        incoherence_report(feat, np.zeros((8, 8), complex))
    with pytest.raises(ConfigError):
        FeaturePair(X_L=np.zeros((3, 4), complex), X_R=np.eye(4, dtype=complex))


def test_feature_json_round_trips():
    feat = generate_features(8, 12, seed=42)
    by_seed = FeaturePair.from_json(feat.to_json())
    assert np.array_equal(by_seed.X_L, feat.X_L)
    full = FeaturePair.from_json(feat.to_json(include_matrices=True))
    assert np.array_equal(full.X_R, feat.X_R)
    with pytest.raises(ConfigError):
        FeaturePair.from_json('{"format": "other"}')
