"""Radon transforms between phase-space distributions and tomograms."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import fft as sp_fft
from scipy.ndimage import map_coordinates, spline_filter
from scipy.interpolate import CubicSpline

from ._validation import SparseAngleWarning, check_positive
from .phase_space import PhaseSpaceGrid, QuasiDistribution, Tomogram

__all__ = [
    "TomogramSet",
    "default_x_grid",
    "radon",
    "radon_many",
    "radon_s",
    "inverse_radon",
    "gaussian_smooth_1d",
]

MIN_RADON_POINTS = 32
MIN_ANGLES = 8
GOOD_ANGLES = 32
_UPSAMPLE = 4


@dataclass(frozen=True)
class TomogramSet:
    """Tomograms of one distribution at several angles, sharing an x grid and order."""

    tomograms: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        toms = tuple(self.tomograms)
        if len(toms) < 2:
            raise ValueError("a tomogram set needs at least two tomograms")
        x0, s0 = toms[0].x_values, toms[0].s
        for t in toms[1:]:
            if t.x_values.shape != x0.shape or not np.allclose(t.x_values, x0, rtol=0, atol=1e-12):
                raise ValueError("all tomograms must share one x grid")
            if t.s != s0:
                raise ValueError("all tomograms must share one order parameter")
        angles = np.array([t.phi for t in toms])
        if np.any(np.diff(angles) <= 0):
            raise ValueError("tomogram angles must be strictly increasing")
        for t in toms:
            total = t.integral()
            if abs(total - 1.0) > 1e-5:
                raise ValueError(f"tomogram at phi={t.phi:.4f} integrates to {total:.8f}, not 1")
        object.__setattr__(self, "tomograms", toms)

    @property
    def angles(self):
        return np.array([t.phi for t in self.tomograms])

    @property
    def x_values(self):
        return self.tomograms[0].x_values

    @property
    def s(self):
        return self.tomograms[0].s

    def __len__(self):
        return len(self.tomograms)

    def __iter__(self):
        return iter(self.tomograms)

    def matrix(self):
        """Tomogram values stacked as ``(n_angles, n_x)``."""
        return np.stack([t.w_values for t in self.tomograms])


def default_x_grid(grid):
    """Quadrature grid matching the phase-space grid resolution and extent."""
    half = max(abs(grid.q_min), abs(grid.q_max), abs(grid.p_min), abs(grid.p_max))
    return np.linspace(-half, half, max(grid.n_q, grid.n_p))


def _projection(coeffs, grid, phi, x):
    # line integral along t at fixed x of the spline interpolant
    half = max(abs(grid.q_min), abs(grid.q_max), abs(grid.p_min), abs(grid.p_max))
    step = min(grid.dq, grid.dp)
    n_t = int(math.ceil(2 * math.sqrt(2.0) * half / step)) | 1
    t = np.linspace(-math.sqrt(2.0) * half, math.sqrt(2.0) * half, n_t)
    c, s = math.cos(phi), math.sin(phi)
    q = x[:, None] * c - t[None, :] * s
    p = x[:, None] * s + t[None, :] * c
    iq = (q - grid.q_min) / grid.dq
    ip = (p - grid.p_min) / grid.dp
    vals = map_coordinates(coeffs, [iq.ravel(), ip.ravel()], order=3, mode="constant", cval=0.0, prefilter=False)
    vals = vals.reshape(q.shape)
    inside = (iq >= 0) & (iq <= grid.n_q - 1) & (ip >= 0) & (ip <= grid.n_p - 1)
    vals = np.where(inside, vals, 0.0)
    return np.trapezoid(vals, t, axis=1)


def _check_radon_grid(grid):
    if grid.n_q < MIN_RADON_POINTS or grid.n_p < MIN_RADON_POINTS:
        raise ValueError(f"grid too coarse for a Radon transform (need >= {MIN_RADON_POINTS} points per axis)")


def radon(w, phi, x=None):
    """Marginal of ``w`` along the quadrature ``x = q cos(phi) + p sin(phi)``.

    Line integrals use cubic-spline interpolation of the grid values, which
    are taken as zero outside the grid.  The returned tomogram keeps ``w.s``.
    """
    _check_radon_grid(w.grid)
    x = default_x_grid(w.grid) if x is None else np.asarray(x, dtype=float)
    coeffs = spline_filter(w.values, order=3, mode="constant")
    vals = _projection(coeffs, w.grid, float(phi), x)
    return Tomogram(x, vals, phi, w.s, {"source": "radon"})


def radon_many(w, angles, x=None):
    """:func:`radon` for several angles, reusing one spline fit."""
    _check_radon_grid(w.grid)
    x = default_x_grid(w.grid) if x is None else np.asarray(x, dtype=float)
    coeffs = spline_filter(w.values, order=3, mode="constant")
    toms = [Tomogram(x, _projection(coeffs, w.grid, float(a), x), a, w.s, {"source": "radon"}) for a in angles]
    return TomogramSet(tuple(sorted(toms, key=lambda t: t.phi)))


def gaussian_smooth_1d(x, values, variance):
    """Convolve samples on a uniform grid with a normalised Gaussian (zero-padded FFT)."""
    values = np.asarray(values, dtype=float)
    if variance == 0:
        return values.copy()
    dx = x[1] - x[0]
    n = sp_fft.next_fast_len(2 * values.size, real=True)
    k = 2 * np.pi * sp_fft.rfftfreq(n, d=dx)
    spec = sp_fft.rfft(values, n=n) * np.exp(-0.5 * variance * k * k)
    return sp_fft.irfft(spec, n=n)[: values.size]


def radon_s(w, phi, s, x=None):
    """Tomogram sampled with a Gaussian string of width ``s`` instead of a line.

    Equivalent to the line integral followed by a convolution with
    ``exp(-(x - x0)^2 / s) / sqrt(pi s)``.  Orders ``s <= 0`` are not handled
    here; use :func:`radon`.
    """
    if not (isinstance(s, (int, float)) and s > 0):
        raise ValueError("radon_s needs s > 0; use radon() for the sharp line integral")
    check_positive(float(s), "s")
    line = radon(w, phi, x)
    smoothed = gaussian_smooth_1d(line.x_values, line.w_values, s / 2.0)
    return Tomogram(line.x_values, smoothed, phi, w.s, {"source": "radon_s", "string_width": float(s)})


def _ramp_response(n_pad, dx):
    # band-limited ramp filter from its spatial samples, avoids the DC bias of |k|
    idx = np.arange(n_pad)
    idx = np.where(idx > n_pad // 2, idx - n_pad, idx)
    h = np.zeros(n_pad)
    h[0] = 1.0 / (4.0 * dx * dx)
    odd = idx % 2 == 1
    h[odd] = -1.0 / (np.pi * idx[odd] * dx) ** 2
    return sp_fft.rfft(h).real * dx


def _rolloff(n_pad, cutoff):
    freq = sp_fft.rfftfreq(n_pad) / 0.5  # fraction of Nyquist
    win = np.ones_like(freq)
    taper = freq > cutoff
    if cutoff < 1:
        win[taper] = 0.5 * (1 + np.cos(np.pi * (freq[taper] - cutoff) / (1 - cutoff)))
    return win


def inverse_radon(ts, grid=None, cutoff=0.9):
    """Filtered back-projection of a tomogram set.

    Parameters
    ----------
    ts : TomogramSet
        Angles assumed uniform over ``[0, pi)`` or ``[0, 2 pi)``.
    grid : PhaseSpaceGrid, optional
        Output grid; defaults to a square grid matching the tomogram x grid.
    cutoff : float
        Fraction of the Nyquist frequency where the raised-cosine roll-off starts.

    Returns
    -------
    QuasiDistribution
        Tagged with the set's order and renormalised to unit integral.
    """
    n_ang = len(ts)
    if n_ang < MIN_ANGLES:
        raise ValueError(f"inverse_radon needs at least {MIN_ANGLES} angles, got {n_ang}")
    if not 0 < cutoff <= 1:
        raise ValueError("cutoff must lie in (0, 1]")
    x = ts.x_values
    dx = x[1] - x[0]
    if grid is None:
        grid = PhaseSpaceGrid(x[0], x[-1], x[0], x[-1], x.size, x.size)
    data = ts.matrix()
    if not np.any(data):
        raise ValueError("all tomograms are zero; nothing to reconstruct")
    meta = {"angles": n_ang, "cutoff": cutoff}
    if n_ang < GOOD_ANGLES:
        warnings.warn(f"only {n_ang} angles; reconstruction will show streaks", SparseAngleWarning, stacklevel=2)
        meta["sparse_angles"] = True

    # Filtered projections are not compactly supported, so keep them on an
    # extended grid reaching every output point, not just the tomogram range.
    reach = max(abs(grid.q_min), abs(grid.q_max)) + max(abs(grid.p_min), abs(grid.p_max))
    margin = max(0, int(math.ceil((reach - min(-x[0], x[-1])) / dx)) + 2)
    n_ext = x.size + 2 * margin
    n_pad = sp_fft.next_fast_len(2 * n_ext, real=True)
    padded = np.zeros((n_ang, n_ext))
    padded[:, margin : margin + x.size] = data
    filt = _ramp_response(n_pad, dx) * _rolloff(n_pad, cutoff)
    filtered = sp_fft.irfft(sp_fft.rfft(padded, n=n_pad, axis=1) * filt, n=n_pad, axis=1)[:, :n_ext]
    x_ext = x[0] + dx * (np.arange(n_ext) - margin)
    fine_x = np.linspace(x_ext[0], x_ext[-1], _UPSAMPLE * (n_ext - 1) + 1)
    fine_filtered = CubicSpline(x_ext, filtered, axis=1)(fine_x)

    angles = ts.angles
    # pi/M per angle both for [0, pi) and for [0, 2 pi), where every line is seen twice
    weight = np.pi / n_ang
    Q, P = grid.mesh()
    out = np.zeros(grid.shape)
    for phi, row in zip(angles, fine_filtered):
        proj = Q * math.cos(phi) + P * math.sin(phi)
        out += np.interp(proj, fine_x, row, left=0.0, right=0.0)
    out *= weight
    recon = QuasiDistribution(grid, out, ts.s, meta)
    total = recon.integral()
    if not np.isfinite(total) or abs(total) < 1e-12:
        raise ValueError("reconstruction has zero integral")
    meta["raw_integral"] = total
    return QuasiDistribution(grid, out / total, ts.s, meta)
