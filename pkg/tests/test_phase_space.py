import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import eval_laguerre

from optotomo import states
from optotomo._validation import GridMismatchError, InvalidStateError, OrderMismatchError, TruncationWarning
from optotomo.phase_space import (
    DensityOperator,
    PhaseSpaceGrid,
    QuasiDistribution,
    Tomogram,
    fock_kernel,
    incomplete_hermite_2d,
    order_shift,
    overlap,
    quadrature_distribution,
    quasi_distribution,
    trace_pairing,
)


def laguerre_wigner(n, q, p):
    r2 = q * q + p * p
    return (-1) ** n / math.pi * np.exp(-r2) * eval_laguerre(n, 2 * r2)


@pytest.mark.parametrize("n", range(5))
def test_fock_wigner_matches_laguerre(grid, n):
    w = quasi_distribution(states.fock(n, 10), grid, 0.0)
    q, p = grid.mesh()
    assert np.abs(w.values - laguerre_wigner(n, q, p)).max() <= 1e-5


def test_single_photon_origin_value():
    g = PhaseSpaceGrid.square(6.0, 257)  # odd count puts a node on the origin
    w = quasi_distribution(states.fock(1, 4), g, 0.0)
    assert w.values[128, 128] == pytest.approx(-1 / math.pi, abs=1e-6)


def test_vacuum_kernel_at_origin():
    for s in (0.0, -0.5, -1.0, 0.5):
        assert fock_kernel(0, 0, 0.0, s) == pytest.approx(2 / (1 - s), rel=1e-14)


def test_kernel_hermitian_symmetry():
    alpha = 0.3 - 0.7j
    for n, m in [(0, 1), (2, 5), (3, 3)]:
        assert fock_kernel(n, m, alpha, -0.2) == pytest.approx(np.conj(fock_kernel(m, n, alpha, -0.2)))


def test_incomplete_hermite_small_case():
    # h_{1,1}(x, y | eps) = x y + eps
    assert incomplete_hermite_2d(1, 1, 2.0, 3.0, 0.5) == pytest.approx(6.5)
    with pytest.raises(OverflowError):
        incomplete_hermite_2d(31, 0, 1.0, 1.0, 0.0)


def test_q_function_of_vacuum_is_gaussian(grid):
    w = quasi_distribution(states.fock(0, 4), grid, -1.0)
    q, p = grid.mesh()
    assert np.abs(w.values - np.exp(-(q * q + p * p) / 2) / (2 * math.pi)).max() < 1e-12


@settings(max_examples=15, deadline=None)
@given(
    re=st.floats(-1.5, 1.5), im=st.floats(-1.5, 1.5), s=st.floats(-1.0, 0.5),
)
def test_coherent_distribution_normalised(re, im, s):
    wide = PhaseSpaceGrid.square(10.0, 160)  # Q-function tails must stay on the grid
    w = quasi_distribution(states.coherent(complex(re, im), 30), wide, s)
    assert w.integral() == pytest.approx(1.0, abs=1e-6)


def test_marginal_matches_quadrature_distribution(grid):
    rho = states.figure_one_state(30)
    w = quasi_distribution(rho, grid, 0.0)
    assert np.abs(w.marginal_q() - quadrature_distribution(rho, grid.q, 0.0)).max() < 1e-6
    assert np.abs(w.marginal_p() - quadrature_distribution(rho, grid.p, math.pi / 2)).max() < 1e-6


def test_trace_pairing_gives_purity(grid):
    rho = states.fock(1, 6)
    wp = quasi_distribution(rho, grid, 0.3)
    wm = quasi_distribution(rho, grid, -0.3)
    assert trace_pairing(wp, wm) == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(OrderMismatchError):
        trace_pairing(wp, wp)


def test_order_shift_matches_direct_evaluation(grid):
    rho = states.fock(2, 8)
    shifted = order_shift(quasi_distribution(rho, grid, 0.0), -0.4)
    direct = quasi_distribution(rho, grid, -0.4)
    assert shifted.s == -0.4
    assert np.abs(shifted.values - direct.values).max() < 1e-8
    with pytest.raises(ValueError):
        order_shift(direct, 0.0)


def test_order_shift_overlap_invariance(small_grid):
    # <A, B> computed at (s, -s) is unchanged after smoothing A and sharpening B
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = states.coherent(complex(*rng.normal(size=2)) * 0.8, 30)
        b = states.displaced_thermal(0.3, complex(*rng.normal(size=2)) * 0.8, 30)
        wa = quasi_distribution(a, small_grid, 0.2)
        wb = quasi_distribution(b, small_grid, -0.2)
        wa2 = order_shift(wa, -0.1)
        wb2 = quasi_distribution(b, small_grid, 0.1)
        assert abs(trace_pairing(wa, wb) - trace_pairing(wa2, wb2)) <= 1e-4


def test_grid_mismatch_rejected(grid, small_grid):
    rho = states.fock(0, 2)
    with pytest.raises(GridMismatchError):
        overlap(quasi_distribution(rho, grid, 0.0), quasi_distribution(rho, small_grid, 0.0))


def test_invalid_states_rejected():
    with pytest.raises(InvalidStateError):
        DensityOperator(np.diag([0.5, 0.6]))
    with pytest.raises(InvalidStateError):
        DensityOperator(np.array([[0.5, 0.6], [0.6, 0.5]]))
    with pytest.raises(InvalidStateError):
        DensityOperator(np.array([[1.0, 0.1], [0.0, 0.0]]))


def test_truncation_warning(small_grid):
    with pytest.warns(TruncationWarning):
        quasi_distribution(states.coherent(2.0, 8), small_grid, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        quasi_distribution(states.coherent(0.5, 30), small_grid, 0.0)


def test_order_outside_range_rejected(small_grid):
    with pytest.raises(ValueError):
        quasi_distribution(states.fock(0, 2), small_grid, 1.0)
    with pytest.raises(ValueError):
        quasi_distribution(states.fock(0, 2), small_grid, -1.5)


def test_tomogram_validation():
    x = np.linspace(-1, 1, 5)
    with pytest.raises(ValueError):
        Tomogram(x[::-1], np.ones(5), 0.0, 0.0)
    t = Tomogram(x, np.ones(5), 7.0, 0.0)
    assert 0 <= t.phi < 2 * math.pi
    assert t.normalized().integral() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        QuasiDistribution(PhaseSpaceGrid.square(1, 16), np.zeros((3, 3)), 0.0)
