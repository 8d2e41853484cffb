"""P-nonclassicality witnesses built from a single s-parameterized tomogram.

A tomogram ``w(x; s)`` is turned into a separable fictitious distribution,
either ``w(x; s) w0(p; s)`` with the vacuum tomogram or ``w(x; s) w(p; s)``.
For a P-classical source both are distributions of P-classical states, so a
negative eigenvalue of the fictitious density matrix proves nonclassicality.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from scipy.special import eval_genlaguerre, gammaln

from ._validation import check_order
from .phase_space import PhaseSpaceGrid, QuasiDistribution, Tomogram
from .protocol import extract_mech_tomogram

__all__ = [
    "FictitiousDistribution",
    "LegitimacyReport",
    "WitnessResult",
    "vacuum_tomogram",
    "demarginalize_first",
    "demarginalize_second",
    "reconstruct_fictitious_operator",
    "witness_from_protocol",
    "witness_tomogram",
]

EIG_TOL = 1e-6
TRUNCATION_TOL = 1e-6
DEFAULT_DIMS = (10, 20, 30)
COVERAGE_SIGMAS = 6.0

LEGITIMATE = "legitimate"
ILLEGITIMATE = "illegitimate"
INCONCLUSIVE = "inconclusive"


def vacuum_tomogram(x, s):
    """Vacuum marginal at order ``s``: ``exp(-x^2 / (1 - s)) / sqrt(pi (1 - s))``."""
    s = check_order(s)
    width = 1.0 - s
    return np.exp(-np.asarray(x) ** 2 / width) / math.sqrt(math.pi * width)


@dataclass(frozen=True)
class FictitiousDistribution:
    """Product distribution ``x_factor(q) * p_factor(p)`` at order ``dist.s``."""

    dist: QuasiDistribution
    provenance: str
    x_factor: np.ndarray
    p_factor: np.ndarray
    source_tomogram_id: str = ""

    @property
    def s(self):
        return self.dist.s


def _square_grid(x):
    return PhaseSpaceGrid(x[0], x[-1], x[0], x[-1], x.size, x.size)


def _fictitious(t, p_factor, provenance, source_id, extra):
    x = t.x_values
    grid = _square_grid(x)
    w1 = np.array(t.w_values, dtype=float)
    vals = np.outer(w1, p_factor)
    meta = {"provenance": provenance, "source_angle": t.phi, **extra}
    dist = QuasiDistribution(grid, vals, t.s, meta)
    return FictitiousDistribution(dist, provenance, w1, np.array(p_factor, dtype=float), source_id)


def demarginalize_first(t, *, vacuum_order=None, source_id=""):
    """Pair the tomogram with the vacuum tomogram on the momentum axis.

    ``vacuum_order`` defaults to ``t.s``.  A lower value (an overestimate of
    the noise) gives a wider reference, which keeps the test sound when the
    true order of ``t`` is uncertain.
    """
    s = check_order(t.s, name="tomogram order")
    s_vac = s if vacuum_order is None else check_order(vacuum_order, name="vacuum_order")
    if s_vac > s + 1e-15:
        raise ValueError("the vacuum reference order must not exceed the tomogram order")
    extra = {"vacuum_order": s_vac}
    return _fictitious(t, vacuum_tomogram(t.x_values, s_vac), "first", source_id, extra)


def demarginalize_second(t, *, source_id=""):
    """Use the tomogram for both quadratures."""
    check_order(t.s, name="tomogram order")
    return _fictitious(t, t.w_values, "second", source_id, {})


def _factor_transform(x, values, k, block=16):
    """``int f(x) exp(i k x) dx`` by the trapezoid rule on a uniform grid.

    Within blocks of ``block`` samples the sum is a polynomial in
    ``exp(i k dx)`` evaluated by Horner's scheme; block phases are computed
    directly, which keeps the accumulated phase error small.
    """
    dx = x[1] - x[0]
    fw = np.asarray(values, dtype=float) * dx
    fw[[0, -1]] *= 0.5
    k = np.asarray(k, dtype=float)
    n_blocks = -(-fw.size // block)
    coeffs = np.zeros(n_blocks * block)
    coeffs[: fw.size] = fw
    coeffs = coeffs.reshape(n_blocks, block)
    z = np.exp(1j * k * dx)
    acc = np.repeat(coeffs[:, -1:], k.size, axis=1).astype(complex)
    for j in range(block - 2, -1, -1):
        acc *= z
        acc += coeffs[:, j : j + 1]
    starts = x[0] + dx * block * np.arange(n_blocks)
    return np.einsum("bk,bk->k", acc, np.exp(1j * starts[:, None] * k[None, :]))


def _edge_error(x, values, window=16):
    # truncating f at the grid edges shifts its transform by about this much;
    # the local mean stands in for the edge sample when noise dominates it
    left = min(abs(values[0]), abs(values[:window].mean()))
    right = min(abs(values[-1]), abs(values[-window:].mean()))
    return (left + right) * 0.5 * (x[-1] - x[0])


def _roundoff_scale(x, values, k, window=25):
    """Transform on the increasing grid ``k`` and a roundoff estimate per ``k``.

    Summing in the opposite order rounds differently; the spread, maximised
    over a sliding window and doubled, measures the roundoff.
    """
    fwd = _factor_transform(x, values, k)
    rev = np.conj(_factor_transform(-x[::-1], values[::-1], k))
    spread = np.abs(fwd - rev)
    padded = np.pad(spread, window, mode="edge")
    local = np.lib.stride_tricks.sliding_window_view(padded, 2 * window + 1).max(axis=1)
    return fwd, 2.0 * local + 1e-18 * np.trapezoid(np.abs(values), x)


def _displacement_radial(dim, r):
    """``A[n, m](r)`` with ``<n|D(-r e^{i t})|m> = A[n, m](r) exp(i (n - m) t)``."""
    r2 = r * r
    logr = np.log(r)
    out = np.zeros((dim, dim, r.size))
    for n in range(dim):
        for m in range(n + 1):
            d = n - m
            lag = eval_genlaguerre(m, d, r2)
            pref = np.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)) + d * logr - 0.5 * r2)
            out[n, m] = (-1) ** d * pref * lag
            out[m, n] = pref * lag
    return out


def _decay_radius(k, mag, threshold):
    # beyond this |k| the transform stays below threshold
    above = np.nonzero(mag > threshold)[0]
    return k[-1] if above.size == 0 or above[-1] == k.size - 1 else k[above[-1] + 1]


def _bandwidth_extent(x, values):
    mean, sd = _moments(x, values)
    return abs(mean) + 8.0 * sd if np.isfinite(sd) else max(abs(x[0]), abs(x[-1]))


def fock_elements(x, f_values, g_values, s, dim, *, n_radial=200, n_angle=None, floor=1e-15):
    """``<n| rho |m>`` for the operator with order-``s`` distribution ``f(q) g(p)``.

    Uses the symmetric characteristic function, which factorises into the
    one-dimensional transforms of ``f`` and ``g``, and the bounded Fock
    matrix elements of the displacement operator on a polar grid.

    Returns ``(rho, err)``.  ``err`` estimates the elementwise error from
    truncating ``f`` and ``g`` at the grid edges and from roundoff in their
    transforms.  For ``s < 0`` both are amplified by ``exp(|s| r^2 / 2)``,
    which is what limits the usable dimension.
    """
    x = np.asarray(x, dtype=float)
    f_values = np.asarray(f_values, dtype=float)
    g_values = np.asarray(g_values, dtype=float)
    radius = math.sqrt(2 * dim + 1) + 6.0 + 2.0 * math.sqrt(dim)
    # |chi| <= |F(k_q)| |G(k_p)| and max(|k_q|, |k_p|) >= r, so chi is negligible
    # once both one-dimensional transforms are
    scan = np.linspace(0.0, radius * math.sqrt(2), 801)
    f_scan, ef_rnd = _roundoff_scale(x, f_values, scan)
    g_scan, eg_rnd = _roundoff_scale(x, g_values, scan)
    ef_sys, eg_sys = _edge_error(x, f_values), _edge_error(x, g_values)
    ef_min = floor * abs(f_scan[0])
    eg_min = floor * abs(g_scan[0])
    radius = min(radius, max(_decay_radius(scan, np.abs(f_scan), np.maximum(ef_sys + ef_rnd, ef_min)),
                             _decay_radius(scan, np.abs(g_scan), np.maximum(eg_sys + eg_rnd, eg_min))))
    extent = max(_bandwidth_extent(x, f_values), _bandwidth_extent(x, g_values))
    if n_angle is None:
        n_angle = int(4 * math.ceil((math.sqrt(2) * radius * extent + 2 * dim + 16) / 2))
        n_angle = min(max(n_angle, 64), 1024)
    elif n_angle % 4:
        raise ValueError("n_angle must be a multiple of 4")
    nodes, wts = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * radius * (nodes + 1)
    wr = 0.5 * radius * wts

    # sin and cos of the polar angles share one set of magnitudes, and
    # F(-k) = conj(F(k)) for real f, so each factor is evaluated once per |k|
    quarter = n_angle // 4
    base = np.sin(2 * np.pi * np.arange(quarter + 1) / n_angle)
    j = np.arange(n_angle)
    half_idx = j % (n_angle // 2)
    sin_idx = np.minimum(half_idx, n_angle // 2 - half_idx)
    sin_sign = np.where(j < n_angle // 2, 1, -1)
    jc = (j + quarter) % n_angle
    hc = jc % (n_angle // 2)
    cos_idx = np.minimum(hc, n_angle // 2 - hc)
    cos_sign = np.where(jc < n_angle // 2, 1, -1)
    kmag = (math.sqrt(2.0) * r[:, None] * base[None, :]).ravel()
    F = _factor_transform(x, f_values, kmag).reshape(r.size, quarter + 1)
    G = _factor_transform(x, g_values, kmag).reshape(r.size, quarter + 1)
    Fq = F[:, sin_idx]
    Fq = np.where(sin_sign > 0, Fq, Fq.conj())
    # k_p = -sqrt(2) r cos(theta)
    Gp = G[:, cos_idx]
    Gp = np.where(cos_sign > 0, Gp.conj(), Gp)
    kq_abs = np.abs(math.sqrt(2.0) * r[:, None] * np.sin(2 * np.pi * j / n_angle)[None, :])
    kp_abs = np.abs(math.sqrt(2.0) * r[:, None] * np.cos(2 * np.pi * j / n_angle)[None, :])
    rF = np.interp(kq_abs, scan, ef_rnd)
    rG = np.interp(kp_abs, scan, eg_rnd)
    ef = np.maximum(ef_sys + rF, ef_min)
    eg = np.maximum(eg_sys + rG, eg_min)
    # transform values below their error estimate carry no information
    Fq[np.abs(Fq) < ef] = 0.0
    Gp[np.abs(Gp) < eg] = 0.0
    chi = Fq * Gp
    growth = np.exp(-0.5 * s * r * r)
    chi *= growth[:, None]  # to the symmetric ordering

    aF, aG = np.abs(Fq), np.abs(Gp)
    # zeroed values were below their error estimate, so they count in full
    aF = np.where(aF == 0, ef, aF)
    aG = np.where(aG == 0, eg, aG)
    sys_err = (ef_sys * aG + eg_sys * aF + ef * eg).mean(axis=1) * growth
    # roundoff is correlated across angles at small r, so no 1/sqrt(n_angle) gain
    rnd_err = np.sqrt(((rF * aG) ** 2 + (rG * aF) ** 2).mean(axis=1)) * growth

    modes = np.fft.ifft(chi, axis=1)
    radial = _displacement_radial(dim, r) * (r * wr)[None, None, :]
    n = np.arange(dim)
    lidx = (n[:, None] - n[None, :]) % n_angle
    rho = 2.0 * np.einsum("nmr,nmr->nm", radial, modes[:, lidx].transpose(1, 2, 0))
    err = 2.0 * (np.abs(radial) @ sys_err + np.sqrt(radial**2 @ rnd_err**2))
    return rho, err


@dataclass(frozen=True)
class LegitimacyReport:
    """Fock-basis test of a fictitious distribution.

    ``min_eigenvalues`` maps each swept dimension to the smallest eigenvalue
    of the trace-normalised principal block and ``error_bounds`` to a bound
    on how far numerical error can move it.  ``fock_matrix`` is the largest block.
    """

    fock_matrix: np.ndarray
    min_eigenvalue: float
    trace: float
    verdict: str
    min_eigenvalues: dict = field(default_factory=dict)
    error_bounds: dict = field(default_factory=dict)
    top_population: float = 0.0
    stable: bool = True
    reason: str = ""

    @property
    def resolved_dims(self):
        return tuple(d for d, e in self.error_bounds.items() if e <= EIG_TOL)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "min_eigenvalue": self.min_eigenvalue,
            "trace": self.trace,
            "min_eigenvalues": {str(k): v for k, v in self.min_eigenvalues.items()},
            "error_bounds": {str(k): v for k, v in self.error_bounds.items()},
            "top_population": self.top_population,
            "stable": self.stable,
            "reason": self.reason,
        }


def _moments(x, w):
    total = np.trapezoid(w, x)
    if not total > 0:
        return 0.0, math.inf
    mean = np.trapezoid(x * w, x) / total
    var = np.trapezoid((x - mean) ** 2 * w, x) / total
    return mean, math.sqrt(max(var, 0.0))


def _coverage_ok(f):
    x = f.dist.grid.q
    for factor in (f.x_factor, f.p_factor):
        mean, sd = _moments(x, factor)
        if not np.isfinite(sd) or mean - COVERAGE_SIGMAS * sd < x[0] or mean + COVERAGE_SIGMAS * sd > x[-1]:
            return False
    return True


def reconstruct_fictitious_operator(f, dims=DEFAULT_DIMS, tol=EIG_TOL):
    """Fock matrix of the fictitious state and its legitimacy verdict.

    Each principal block of size ``d`` in ``dims`` is trace-normalised and
    diagonalised.  A minimum eigenvalue below ``-tol`` minus the block's
    error bound is conclusive: blocks of a positive operator are positive.
    Blocks whose error bound exceeds ``tol`` are unresolved (strongly negative
    orders amplify data error).  ``legitimate`` needs the smallest block
    resolved, every resolved block non-negative, converged populations at
    the top of the largest resolved block (<= 1e-6) and a grid covering 6
    standard deviations of both factors.  Anything else is ``inconclusive``.
    """
    dims = tuple(sorted(int(d) for d in dims))
    if not dims or dims[0] < 1:
        raise ValueError("dims must be positive integers")
    if not (-1.0 < f.s < 1.0):
        raise ValueError("fictitious order must lie in (-1, 1)")
    dim_max = dims[-1]
    if not _coverage_ok(f):
        empty = np.zeros((0, 0), dtype=complex)
        return LegitimacyReport(empty, math.nan, math.nan, INCONCLUSIVE, {}, {}, math.nan, False,
                                "grid does not cover 6 standard deviations of both factors")
    rho, err = fock_elements(f.dist.grid.q, f.x_factor, f.p_factor, f.s, dim_max)
    rho = 0.5 * (rho + rho.conj().T)
    mins, bounds = {}, {}
    for d in dims:
        block = rho[:d, :d]
        tr = np.trace(block).real
        if not tr > 0:
            mins[d], bounds[d] = -math.inf, math.inf
            continue
        mins[d] = float(np.linalg.eigvalsh(block / tr).min())
        bounds[d] = float(np.linalg.norm(err[:d, :d]) / tr)
    negative = [d for d in dims if mins[d] < -tol - bounds[d]]
    resolved = [d for d in dims if bounds[d] <= tol]
    unresolved = [d for d in dims if bounds[d] > tol]
    stable = len(negative) in (0, len(dims))
    top = math.nan
    if resolved:
        d_top = resolved[-1]
        top = float(np.abs(rho.diagonal().real[max(1, int(0.9 * d_top)) : d_top]).max())
    note = f"; error bound above {tol:g} at dims {unresolved}" if unresolved and not negative else ""
    if negative:
        verdict, reason = ILLEGITIMATE, f"negative eigenvalue at dims {negative}"
    elif not resolved or resolved[0] != dims[0]:
        verdict, reason = INCONCLUSIVE, f"numerical error bound exceeds {tol:g} at dims {unresolved}"
    elif any(mins[d] < -tol for d in resolved):
        verdict, reason = INCONCLUSIVE, "eigenvalue below tolerance but within the error bound"
    elif top > TRUNCATION_TOL:
        verdict, reason = INCONCLUSIVE, f"Fock truncation not converged at dim {resolved[-1]} (top population {top:.2e})"
    else:
        verdict, reason = LEGITIMATE, note.lstrip("; ")
    return LegitimacyReport(rho, min(mins.values()), float(np.trace(rho).real), verdict, mins, bounds,
                            top, stable, reason)


@dataclass(frozen=True)
class WitnessResult:
    verdict: str
    first: LegitimacyReport
    second: LegitimacyReport
    tomogram: Tomogram
    notes: tuple = ()

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "first_map": None if self.first is None else self.first.to_dict(),
            "second_map": self.second.to_dict(),
            "tomogram_order": self.tomogram.s,
            "tomogram_angle": self.tomogram.phi,
            "notes": list(self.notes),
        }


def _combine(first, second):
    reports = [r for r in (first, second) if r is not None]
    if any(r.verdict == ILLEGITIMATE for r in reports):
        return "nonclassical"
    if all(r.verdict == LEGITIMATE for r in reports):
        return "classical"
    return INCONCLUSIVE


def _widen(t, cfg):
    # extend the tomogram axis until it covers 6 sigma, keeping the spacing
    mean, sd = _moments(t.x_values, t.w_values)
    half = max(abs(mean) + COVERAGE_SIGMAS * sd, 6.0 * math.sqrt(0.5 * (1 - t.s))) + 0.5
    cur = t.x_values[-1]
    if half <= cur and -half >= t.x_values[0]:
        return t
    n = int(math.ceil(half / t.dx))
    x = t.dx * np.arange(-n, n + 1)
    return extract_mech_tomogram(cfg, x=x)


def witness_from_protocol(cfg, *, dims=DEFAULT_DIMS, tol=EIG_TOL, vacuum_order=None):
    """Run the readout once and apply both demarginalization maps.

    With a configured noise channel that is not characterized, the tomogram
    is tagged with the noise-free order and the first map is skipped, since
    its vacuum reference would be mismatched.  ``vacuum_order`` selects the
    conservative first-map reference (see :func:`demarginalize_first`).
    """
    notes = []
    t = _widen(extract_mech_tomogram(cfg), cfg)
    uncharacterized = cfg.noise is not None and not cfg.noise.characterized
    if uncharacterized:
        nominal = -cfg.s_star if not cfg.wigner_regime else 0.0
        t = Tomogram(t.x_values, t.w_values, t.phi, nominal, {**t.meta, "order_assumed": True})
        notes.append("noise channel not characterized: first map suppressed, order taken as noise-free")
    result = witness_tomogram(t, dims=dims, tol=tol, vacuum_order=vacuum_order, first_map=not uncharacterized)
    return WitnessResult(result.verdict, result.first, result.second, result.tomogram, tuple(notes))


def witness_tomogram(t, *, dims=DEFAULT_DIMS, tol=EIG_TOL, vacuum_order=None, first_map=True):
    """Apply both demarginalization maps to one tomogram (the first only if ``first_map``)."""
    t = t.normalized()
    first = None
    if first_map:
        first = reconstruct_fictitious_operator(demarginalize_first(t, vacuum_order=vacuum_order), dims, tol)
    second = reconstruct_fictitious_operator(demarginalize_second(t), dims, tol)
    return WitnessResult(_combine(first, second), first, second, t, ())
