import math

import numpy as np
import pytest

from optotomo import states
from optotomo.phase_space import PhaseSpaceGrid, order_shift, quadrature_distribution, quasi_distribution
from optotomo.protocol import (
    NoiseChannel,
    ReadoutConfig,
    apply_noise_channel,
    chi_jitter_sweep,
    classical_kernel_variance,
    classical_readout_tomogram,
    extract_mech_tomogram,
    full_tomography,
    naive_deconvolution,
    order_budget,
    readout_coupling,
    simulate_output_wigner,
    smoothed_marginal,
)
from optotomo.tomography import radon

from conftest import interaction_params, random_psd


@pytest.mark.parametrize("chi_u, eps", [(1.0, 0.0), (3.0, 0.5)])
@pytest.mark.parametrize("make", [lambda: states.fock(1, 8), lambda: states.squeezed_vacuum(0.5, 30)])
def test_extraction_equals_order_shifted_radon(grid, chi_u, eps, make):
    rho = make()
    cfg = ReadoutConfig(interaction_params(chi_u, eps), rho, grid, phi_d=0.4, interaction_only=True)
    t = extract_mech_tomogram(cfg)
    assert t.s == pytest.approx(-cfg.s_star, rel=1e-12)
    oracle = radon(order_shift(quasi_distribution(rho, grid, 0.0), t.s), t.phi, t.x_values)
    assert np.abs(t.w_values - oracle.w_values).max() <= 1e-3


def test_readout_angle_follows_delay(pulse, small_grid):
    rho = states.fock(0, 2)
    a0 = readout_coupling(ReadoutConfig(pulse, rho, small_grid, 0.0)).angle
    a1 = readout_coupling(ReadoutConfig(pulse, rho, small_grid, 0.9)).angle
    assert math.remainder(a1 - a0 - 0.9, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)
    assert math.remainder(a0 - (pulse.phi + 1.5 * math.pi), 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


def test_output_wigner_momentum_marginal_matches(pulse):
    g = PhaseSpaceGrid.square(6, 96)
    cfg = ReadoutConfig(pulse, states.fock(1, 6), g)
    w = simulate_output_wigner(cfg)
    assert w.integral() == pytest.approx(1.0, abs=1e-6)
    gain = w.meta["gain"]
    t = extract_mech_tomogram(cfg, x=w.grid.p / gain)
    assert np.abs(w.marginal_p() * gain - t.w_values).max() < 1e-6


def test_wigner_regime_tagging(pulse, small_grid):
    rho = states.fock(1, 6)
    t = extract_mech_tomogram(ReadoutConfig(interaction_params(40.0), rho, small_grid, wigner_regime=True,
                                            interaction_only=True))
    assert t.s == 0.0
    assert 0 < t.meta["order_budget"] <= 1e-3
    with pytest.raises(ValueError, match="Wigner regime"):
        ReadoutConfig(pulse, rho, small_grid, wigner_regime=True)


def test_order_budget_small_at_chi_three(pulse, grid):
    assert order_budget(ReadoutConfig(pulse, states.figure_one_state(30), grid)) <= 1e-2


def test_pulse_conditions_required(grid):
    with pytest.raises(ValueError, match="pulse conditions"):
        ReadoutConfig(interaction_params(2.0), states.fock(0, 2), grid)


def test_zero_coupling_is_an_error(small_grid):
    cfg = ReadoutConfig(interaction_params(0.0), states.fock(0, 2), small_grid, interaction_only=True)
    with pytest.raises(ValueError, match="no mechanical signal"):
        extract_mech_tomogram(cfg)


def test_noise_before_and_after_interaction_commute(small_grid):
    rng = np.random.default_rng(11)
    params = interaction_params(2.0, 0.2)
    rho = states.fock(1, 6)
    clean = ReadoutConfig(params, rho, small_grid, 0.3, interaction_only=True)
    optical = readout_coupling(clean).optical_map
    for _ in range(5):
        sigma = random_psd(rng)
        before = ReadoutConfig(params, rho, small_grid, 0.3, NoiseChannel(sigma), interaction_only=True,
                               noise_before_interaction=True)
        after = ReadoutConfig(params, rho, small_grid, 0.3, NoiseChannel(optical.T @ sigma @ optical),
                              interaction_only=True)
        tb, ta = extract_mech_tomogram(before), extract_mech_tomogram(after)
        assert np.abs(tb.w_values - ta.w_values).max() <= 1e-6
        assert tb.s == pytest.approx(ta.s, abs=1e-12)


def test_noise_channel_commutes_with_order_shift(small_grid):
    rng = np.random.default_rng(5)
    w = quasi_distribution(states.figure_one_state(30), small_grid, 0.0)
    for _ in range(5):
        nc = NoiseChannel(random_psd(rng, 0.2))
        a = order_shift(apply_noise_channel(w, nc), -0.3)
        b = apply_noise_channel(order_shift(w, -0.3), nc)
        assert np.abs(a.values - b.values).max() <= 1e-6


def test_characterized_noise_lowers_the_order(small_grid):
    params = interaction_params(2.0)
    rho = states.fock(1, 6)
    nc = NoiseChannel(np.diag([0.0, 0.3]), loss=0.9)
    cfg = ReadoutConfig(params, rho, small_grid, noise=nc, interaction_only=True)
    t = extract_mech_tomogram(cfg)
    assert t.s < -cfg.s_star
    oracle = smoothed_marginal(rho, t.x_values, t.phi, -t.s / 2)
    assert np.abs(t.w_values - oracle).max() < 1e-6
    with pytest.raises(ValueError, match="loss"):
        extract_mech_tomogram(ReadoutConfig(params, rho, small_grid, noise=nc, interaction_only=True,
                                            noise_before_interaction=True))


def test_noise_channel_validation():
    with pytest.raises(ValueError):
        NoiseChannel(np.array([[1.0, 0.0], [0.0, -0.1]]))
    with pytest.raises(ValueError):
        NoiseChannel(np.zeros((2, 2)), loss=0.0)


def test_full_tomography_thread_count_does_not_change_results(pulse, small_grid):
    cfg = ReadoutConfig(pulse, states.fock(1, 6), small_grid)
    angles = np.pi * np.arange(32) / 32
    ts1, w1 = full_tomography(cfg, angles)
    ts4, w4 = full_tomography(cfg, angles, n_jobs=4)
    assert np.array_equal(ts1.matrix(), ts4.matrix())
    assert np.array_equal(w1.values, w4.values)
    assert np.allclose(ts1.angles, angles)
    with pytest.raises(ValueError):
        full_tomography(cfg, angles[:4])


def test_classical_readout_kernel():
    assert classical_kernel_variance(1.0, 0.0) == 0.5
    assert classical_kernel_variance(0.5, 1.0) == pytest.approx(6.0)
    x = np.linspace(-8, 8, 161)
    t = classical_readout_tomogram(states.fock(0, 2), 1.0, 0.0, 0.0, x=x)
    # vacuum marginal (variance 1/2) smoothed by 1/2 is the Q-function marginal
    assert np.abs(t.w_values - np.exp(-x * x / 2) / math.sqrt(2 * math.pi)).max() < 1e-10


def test_naive_deconvolution_amplifies_noise():
    x = np.linspace(-6, 6, 32)
    rho = states.fock(1, 6)
    t = classical_readout_tomogram(rho, 1.0, 0.0, 0.0, x=x)
    _, clean = naive_deconvolution(t, 1.0, 0.0)
    assert clean.output_rel_error == 0.0
    out, noisy = naive_deconvolution(t, 1.0, 0.01, seed=1)
    assert noisy.error_ratio > 1
    _, again = naive_deconvolution(t, 1.0, 0.01, seed=1)
    assert again == noisy
    _, damped = naive_deconvolution(t, 1.0, 0.01, seed=1, floor=1e-2)
    assert damped.output_rel_error < noisy.output_rel_error


def test_chi_jitter_sweep(pulse, small_grid):
    cfg = ReadoutConfig(pulse, states.fock(1, 6), small_grid)
    recs = chi_jitter_sweep(cfg, [0.0, 0.01])
    assert recs[0]["sup_distance"] < 1e-12
    assert recs[1]["sup_distance"] > 0
    assert recs[1]["s_star"] < recs[0]["s_star"]
