"""Fock-space states and the s-parameterized Weyl-Wigner calculus.

Conventions
-----------
hbar = 1 and the quadratures are ``x(phi) = (a e^{-i phi} + a^dag e^{i phi}) / sqrt(2)``,
so a phase-space point is ``alpha = (q + i p) / sqrt(2)``.  Complex-plane ("alpha-form")
distributions are normalised against the measure ``d^2 alpha / pi``; the real
(q, p) form used on grids is ``W(q, p; s) = W(alpha; s) / (2 pi)`` and integrates
to one with ``dq dp``.  With these conventions the trace of a product of two
operators reads ``Tr(A B) = 2 pi * int dq dp W_A(q, p; s) W_B(q, p; -s)``.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import fft as sp_fft
from scipy.integrate import trapezoid

from ._validation import (
    GridMismatchError,
    InvalidStateError,
    OrderMismatchError,
    TruncationWarning,
    check_index,
    check_order,
    readonly,
)

__all__ = [
    "DensityOperator",
    "PhaseSpaceGrid",
    "QuasiDistribution",
    "Tomogram",
    "incomplete_hermite_2d",
    "fock_kernel",
    "quasi_distribution",
    "hermite_functions",
    "quadrature_distribution",
    "overlap",
    "trace_pairing",
    "order_shift",
    "gaussian_blur",
    "integrate",
]

# Exact integer factorials below this index, log-gamma above.
_EXACT_FACTORIAL_MAX = 20
_HERMITE_MAX_INDEX = 30


@dataclass(frozen=True)
class DensityOperator:
    """Fock-truncated density matrix.

    ``elements[n, m] = <n| rho |m>``.  Construction validates hermiticity, unit
    trace and positivity (up to ``-1e-9``), so every instance is a valid state.
    """

    elements: np.ndarray

    def __post_init__(self):
        rho = np.array(self.elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise InvalidStateError("density matrix must be square and non-empty")
        if not np.all(np.isfinite(rho)):
            raise InvalidStateError("density matrix has non-finite entries")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-10:
            raise InvalidStateError(f"density matrix trace is {tr!r}, expected 1")
        rho = 0.5 * (rho + rho.conj().T)
        if np.linalg.eigvalsh(rho).min() < -1e-9:
            raise InvalidStateError("density matrix is not positive semidefinite")
        object.__setattr__(self, "elements", readonly(rho, complex))

    @property
    def dim(self):
        return self.elements.shape[0]

    @property
    def populations(self):
        return self.elements.diagonal().real.copy()

    @classmethod
    def from_ket(cls, amplitudes, dim=None):
        """Pure state from (unnormalised) Fock amplitudes, zero-padded to ``dim``."""
        psi = np.asarray(amplitudes, dtype=complex).ravel()
        dim = psi.size if dim is None else int(dim)
        if dim < psi.size:
            raise ValueError("dim smaller than the number of amplitudes")
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise InvalidStateError("zero state vector")
        ket = np.zeros(dim, dtype=complex)
        ket[: psi.size] = psi / norm
        return cls(np.outer(ket, ket.conj()))

    def mix(self, other, weight):
        """Convex combination ``weight * self + (1 - weight) * other``."""
        if other.dim != self.dim:
            raise ValueError("cannot mix states of different dimension")
        return DensityOperator(weight * self.elements + (1.0 - weight) * other.elements)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform rectangular grid over (q, p)."""

    q_min: float = -6.0
    q_max: float = 6.0
    p_min: float = -6.0
    p_max: float = 6.0
    n_q: int = 256
    n_p: int = 256

    def __post_init__(self):
        if not (self.q_max > self.q_min and self.p_max > self.p_min):
            raise ValueError("grid bounds must satisfy max > min on both axes")
        if self.n_q < 16 or self.n_p < 16:
            raise ValueError("grid needs at least 16 points per axis")
        object.__setattr__(self, "n_q", int(self.n_q))
        object.__setattr__(self, "n_p", int(self.n_p))

    @classmethod
    def square(cls, half_width=6.0, n=256):
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def q(self):
        return np.linspace(self.q_min, self.q_max, self.n_q)

    @property
    def p(self):
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def dq(self):
        return (self.q_max - self.q_min) / (self.n_q - 1)

    @property
    def dp(self):
        return (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def shape(self):
        return (self.n_q, self.n_p)

    def mesh(self):
        """``(Q, P)`` arrays of shape ``(n_q, n_p)``."""
        return np.meshgrid(self.q, self.p, indexing="ij")

    def alpha(self):
        q, p = self.mesh()
        return (q + 1j * p) / np.sqrt(2.0)

    @property
    def is_symmetric(self):
        return np.isclose(self.q_min, -self.q_max) and np.isclose(self.p_min, -self.p_max)


@dataclass(frozen=True)
class QuasiDistribution:
    """Real s-parameterized distribution sampled on a :class:`PhaseSpaceGrid`.

    ``values[i, j]`` is ``W(q_i, p_j; s)`` in the (q, p) normalisation.
    """

    grid: PhaseSpaceGrid
    values: np.ndarray
    s: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", readonly(vals))
        object.__setattr__(self, "s", check_order(self.s, allow_one=True))

    def integral(self):
        return integrate(self.values, self.grid)

    def marginal_q(self):
        """Integrate over p; returns the q-marginal on ``grid.q``."""
        return trapezoid(self.values, dx=self.grid.dp, axis=1)

    def marginal_p(self):
        return trapezoid(self.values, dx=self.grid.dq, axis=0)

    def with_values(self, values, s=None, **meta):
        merged = {**self.meta, **meta}
        return QuasiDistribution(self.grid, values, self.s if s is None else s, merged)


@dataclass(frozen=True)
class Tomogram:
    """Marginal density ``w(x, phi; s)`` on a uniform x grid."""

    x_values: np.ndarray
    w_values: np.ndarray
    phi: float
    s: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x_values, dtype=float)
        w = np.asarray(self.w_values, dtype=float)
        if x.ndim != 1 or x.shape != w.shape or x.size < 2:
            raise ValueError("x_values and w_values must be 1-D arrays of equal length")
        dx = np.diff(x)
        if np.any(dx <= 0) or not np.allclose(dx, dx[0], rtol=1e-9):
            raise ValueError("tomogram x grid must be uniform and increasing")
        object.__setattr__(self, "x_values", readonly(x))
        object.__setattr__(self, "w_values", readonly(w))
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2 * np.pi)))
        object.__setattr__(self, "s", float(self.s))

    @property
    def dx(self):
        return self.x_values[1] - self.x_values[0]

    def integral(self):
        return trapezoid(self.w_values, dx=self.dx)

    def normalized(self):
        total = self.integral()
        if not np.isfinite(total) or total <= 0:
            raise ValueError("tomogram cannot be normalised (non-positive integral)")
        return Tomogram(self.x_values, self.w_values / total, self.phi, self.s, dict(self.meta))

    def with_values(self, w_values, **meta):
        return Tomogram(self.x_values, w_values, self.phi, self.s, {**self.meta, **meta})


def integrate(values, grid):
    """2-D trapezoid integral of ``values`` over ``grid``."""
    inner = trapezoid(values, dx=grid.dp, axis=1)
    return float(trapezoid(inner, dx=grid.dq))


def _log_factorial(n):
    if n <= _EXACT_FACTORIAL_MAX:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1)


def incomplete_hermite_2d(n, m, x, y, eps):
    """Incomplete two-variable Hermite polynomial ``h_{n,m}(x, y | eps)``.

    ``sum_i C(n, i) C(m, i) i! eps^i x^(n-i) y^(m-i)`` for ``i = 0..min(n, m)``,
    with exact integer coefficients.

    Raises
    ------
    OverflowError
        For ``n`` or ``m`` above 30, where the coefficients stop being
        representable without loss.
    """
    n = check_index(n, "n")
    m = check_index(m, "m")
    if n > _HERMITE_MAX_INDEX or m > _HERMITE_MAX_INDEX:
        raise OverflowError(f"h_{{n,m}} limited to n, m <= {_HERMITE_MAX_INDEX}")
    x, y, eps = complex(x), complex(y), complex(eps)
    total = 0j
    for i in range(min(n, m) + 1):
        coeff = math.comb(n, i) * math.comb(m, i) * math.factorial(i)
        total += coeff * eps**i * x ** (n - i) * y ** (m - i)
    return total


def fock_kernel(n, m, alpha, s):
    """Alpha-form s-distribution of the operator ``|n><m|`` at ``alpha``.

    Equals ``<m| T(alpha; s) |n>``; the (0, 0) value at the origin is ``2/(1-s)``.
    """
    n = check_index(n, "n")
    m = check_index(m, "m")
    s = check_order(s)
    alpha = complex(alpha)
    c = 2.0 / (1.0 - s)
    h = incomplete_hermite_2d(n, m, alpha.conjugate(), alpha, (s * s - 1.0) / 4.0)
    log_norm = (m + n + 1) * math.log(c) - 0.5 * (_log_factorial(n) + _log_factorial(m))
    return math.exp(log_norm) * h * math.exp(-c * abs(alpha) ** 2)


def _kernel_rows(alpha, s, dim):
    """Yield ``(n, K_n)`` with ``K_n[m] = fock_kernel(n, m, alpha, s)`` for all points.

    Uses the three-term recursion of the incomplete Hermite polynomials on
    prefactor-normalised values, which stays finite for large indices.
    """
    c = 2.0 / (1.0 - s)
    ce = c * (s * s - 1.0) / 4.0
    xs = np.conj(alpha).ravel()
    ys = np.asarray(alpha).ravel()
    row = np.empty((dim, xs.size), dtype=complex)
    row[0] = c * np.exp(-c * np.abs(ys) ** 2)
    for m in range(1, dim):
        row[m] = (c / math.sqrt(m)) * ys * row[m - 1]
    yield 0, row
    sqrt_m = np.sqrt(np.arange(dim))[:, None]
    for n in range(dim - 1):
        nxt = np.empty_like(row)
        nxt[:] = xs * row
        nxt[1:] += ce * sqrt_m[1:] * row[:-1]
        nxt *= c / math.sqrt(n + 1)
        row = nxt
        yield n + 1, row


def _trim(elements):
    # drop trailing Fock levels that carry exactly zero weight
    support = np.flatnonzero(np.any(elements != 0, axis=0) | np.any(elements != 0, axis=1))
    size = int(support[-1]) + 1 if support.size else 1
    return elements[:size, :size]


def _truncation_tail(rho):
    pops = rho.populations
    start = int(math.floor(0.9 * rho.dim))
    start = min(start, rho.dim - 1)
    return float(pops[start:].sum())


def quasi_distribution(rho, grid, s):
    """Evaluate the s-parameterized quasiprobability distribution of ``rho``.

    Parameters
    ----------
    rho : DensityOperator
    grid : PhaseSpaceGrid
    s : float
        Order parameter in [-1, 1).  ``s = 0`` is the Wigner function,
        ``s = -1`` the Husimi Q-function.

    Returns
    -------
    QuasiDistribution
        Values in the (q, p) normalisation.

    Warns
    -----
    TruncationWarning
        If the top 10% of Fock levels hold more than 1e-6 of the population.
    """
    s = check_order(s)
    tail = _truncation_tail(rho)
    if tail > 1e-6:
        warnings.warn(
            f"Fock truncation not converged: top-level population {tail:.2e} > 1e-6",
            TruncationWarning,
            stacklevel=2,
        )
    alpha = grid.alpha()
    acc = np.zeros(alpha.size, dtype=complex)
    elements = _trim(rho.elements)
    for n, row in _kernel_rows(alpha, s, elements.shape[0]):
        acc += elements[n] @ row
    values = acc.real.reshape(grid.shape) / (2.0 * np.pi)
    return QuasiDistribution(grid, values, s, {"truncation_tail": tail})


def hermite_functions(x, dim):
    """Rows ``psi_n(x) = <x|n>`` for ``n < dim`` (harmonic-oscillator eigenfunctions)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((dim,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if dim > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, dim - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_distribution(rho, x, phi):
    """Exact marginal ``<x_phi| rho |x_phi>`` of ``x(phi) = q cos(phi) + p sin(phi)``.

    Computed in the Fock basis, so it is independent of any phase-space grid.
    """
    x = np.asarray(x, dtype=float)
    elements = _trim(rho.elements)
    dim = elements.shape[0]
    n = np.arange(dim)
    phases = np.exp(-1j * n * phi)
    rotated = phases[:, None] * elements * phases.conj()[None, :]
    psi = hermite_functions(x.ravel(), dim)
    vals = np.einsum("ni,nm,mi->i", psi, rotated, psi).real
    return vals.reshape(x.shape)


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError("distributions are sampled on different grids")


def overlap(wa, wb):
    """Phase-space overlap ``2 pi int W_a W_b dq dp`` with no order constraint."""
    _check_same_grid(wa, wb)
    return 2.0 * np.pi * integrate(wa.values * wb.values, wa.grid)


def trace_pairing(wa, wb):
    """``Tr(A B)`` from distributions of A and B at opposite orders ``s`` and ``-s``."""
    _check_same_grid(wa, wb)
    if abs(wa.s + wb.s) > 1e-12:
        raise OrderMismatchError(f"orders must be opposite, got {wa.s} and {wb.s}")
    return overlap(wa, wb)


def gaussian_blur(values, grid, cov):
    """Convolve grid values with a normalised Gaussian of covariance ``cov``.

    The convolution is done in Fourier space on a zero-padded grid, so the
    function is treated as vanishing outside the grid rather than periodic.
    ``cov`` is a 2x2 covariance in (q, p) units; it must be PSD.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.any(cov):
        return np.array(values, dtype=float, copy=True)
    n_q, n_p = grid.shape
    shape = (sp_fft.next_fast_len(2 * n_q, real=True), sp_fft.next_fast_len(2 * n_p, real=True))
    spec = sp_fft.rfft2(values, s=shape)
    kq = 2 * np.pi * sp_fft.fftfreq(shape[0], d=grid.dq)[:, None]
    kp = 2 * np.pi * sp_fft.rfftfreq(shape[1], d=grid.dp)[None, :]
    quad = cov[0, 0] * kq**2 + 2 * cov[0, 1] * kq * kp + cov[1, 1] * kp**2
    spec *= np.exp(-0.5 * quad)
    return sp_fft.irfft2(spec, s=shape)[:n_q, :n_p]


def order_shift(w, s_target):
    """Smooth ``w`` from order ``w.s`` down to ``s_target <= w.s``.

    A shift by ``delta = s_target - w.s < 0`` is an isotropic Gaussian
    convolution of variance ``-delta / 2`` per quadrature.  Sharpening
    (``s_target > w.s``) is an unstable deconvolution and is refused.
    """
    s_target = check_order(s_target, name="s_target", allow_one=True)
    delta = s_target - w.s
    if delta > 1e-15:
        raise ValueError(
            f"order_shift only smooths: s_target={s_target} exceeds current order {w.s}"
        )
    if delta > -1e-15:
        return QuasiDistribution(w.grid, w.values, s_target, dict(w.meta))
    var = -delta / 2.0
    blurred = gaussian_blur(w.values, w.grid, var * np.eye(2))
    return QuasiDistribution(w.grid, blurred, s_target, dict(w.meta))
