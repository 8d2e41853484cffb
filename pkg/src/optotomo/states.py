"""Constructors for the Fock-truncated test states used throughout the package."""

import math

import numpy as np
from scipy.linalg import expm

from .phase_space import DensityOperator

__all__ = [
    "fock",
    "superposition",
    "coherent",
    "thermal",
    "squeezed_vacuum",
    "displaced_thermal",
    "figure_one_state",
    "annihilation",
]

# Extra levels used when building operators by matrix exponentials, cropped afterwards.
_PAD = 40


def annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def _crop(rho, dim):
    rho = rho[:dim, :dim]
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho / np.trace(rho).real)


def fock(n, dim=30):
    amps = np.zeros(dim)
    amps[n] = 1.0
    return DensityOperator.from_ket(amps)


def superposition(amplitudes, dim=30):
    return DensityOperator.from_ket(amplitudes, dim=dim)


def figure_one_state(dim=30):
    """``(|0> + 2|1> + |2> + 2|3>) / sqrt(10)``."""
    return superposition([1.0, 2.0, 1.0, 2.0], dim=dim)


def coherent(alpha, dim=30):
    n = np.arange(dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    amps = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact) * complex(alpha) ** n
    return DensityOperator.from_ket(amps)


def thermal(nbar, dim=30):
    n = np.arange(dim)
    pops = nbar**n / (1.0 + nbar) ** (n + 1)
    return DensityOperator(np.diag(pops / pops.sum()))


def squeezed_vacuum(r, dim=30, angle=0.0):
    """``S(xi)|0>`` with ``xi = r e^{i angle}``; angle 0 squeezes the q quadrature."""
    big = dim + _PAD
    a = annihilation(big)
    xi = r * np.exp(1j * angle)
    gen = 0.5 * (np.conj(xi) * a @ a - xi * a.conj().T @ a.conj().T)
    ket = expm(gen)[:, 0]
    return _crop(np.outer(ket, ket.conj()), dim)


def displaced_thermal(nbar, alpha, dim=30):
    big = dim + _PAD
    a = annihilation(big)
    disp = expm(alpha * a.conj().T - np.conj(alpha) * a)
    n = np.arange(big)
    pops = nbar**n / (1.0 + nbar) ** (n + 1) if nbar > 0 else (n == 0).astype(float)
    rho = disp @ np.diag(pops) @ disp.conj().T
    return _crop(rho, dim)
