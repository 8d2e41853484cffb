"""Simulation of the pulsed optomechanical readout and its classical comparison.

The optical output is computed from the composed mode transform: every
mechanical phase-space point shifts the optical probe along one direction by
an amount proportional to one mechanical quadrature.  Integrating the exact
mechanical marginal of that quadrature against the (possibly noisy) probe
Gaussian gives the optical distribution without any phase-space interpolation.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import fft as sp_fft
from scipy.ndimage import map_coordinates

from ._validation import check_positive, check_psd
from .mode_transform import (
    compose,
    general_om_symplectic,
    mechanical_rotation_symplectic,
    protocol_transform,
)
from .phase_space import (
    DensityOperator,
    PhaseSpaceGrid,
    QuasiDistribution,
    Tomogram,
    gaussian_blur,
    quadrature_distribution,
)
from .tomography import TomogramSet, default_x_grid, inverse_radon

__all__ = [
    "NoiseChannel",
    "ReadoutConfig",
    "Coupling",
    "DeconvolutionReport",
    "probe_covariance",
    "probe_wigner",
    "readout_coupling",
    "simulate_output_wigner",
    "output_momentum_marginal",
    "extract_mech_tomogram",
    "full_tomography",
    "classical_readout_tomogram",
    "classical_kernel_variance",
    "naive_deconvolution",
    "apply_noise_channel",
    "smoothed_marginal",
    "order_budget",
    "chi_jitter_sweep",
]

WIGNER_REGIME_MAX_S = 1e-3


@dataclass(frozen=True)
class NoiseChannel:
    """Gaussian noise on the optical output: loss ``eta_loss`` then added covariance.

    ``characterized`` marks whether the channel is known well enough to
    correct the vacuum reference of the first demarginalization map.
    """

    covariance: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    loss: float = 1.0
    characterized: bool = True

    def __post_init__(self):
        cov = check_psd(self.covariance, "noise covariance")
        if cov.shape != (2, 2):
            raise ValueError("noise covariance must be 2x2")
        if not (0 < self.loss <= 1):
            raise ValueError("loss transmissivity must lie in (0, 1]")
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "loss", float(self.loss))

    def apply_to_covariance(self, cov):
        eta = self.loss
        return eta * np.asarray(cov) + 0.5 * (1 - eta) * np.eye(2) + self.covariance


@dataclass(frozen=True)
class ReadoutConfig:
    """Everything needed to simulate one readout pulse.

    ``phi_d`` is the free mechanical rotation before the pulse and replaces
    any delay stored in ``params``.  With ``interaction_only`` the Kerr and
    optical-rotation blocks are left out, which allows arbitrary parameters;
    otherwise the pulse conditions must hold.
    """

    params: object
    mech_state: DensityOperator
    grid: PhaseSpaceGrid = field(default_factory=PhaseSpaceGrid)
    phi_d: float = 0.0
    noise: NoiseChannel = None
    wigner_regime: bool = False
    interaction_only: bool = False
    noise_before_interaction: bool = False

    def __post_init__(self):
        object.__setattr__(self, "params", self.params.with_delay_angle(self.phi_d))
        if not self.interaction_only and not self.params.conditions_satisfied:
            raise ValueError(
                "pulse conditions are not satisfied; solve them first or set interaction_only=True"
            )
        if self.wigner_regime and not self.s_star <= WIGNER_REGIME_MAX_S:
            raise ValueError(f"Wigner regime needs s* <= {WIGNER_REGIME_MAX_S}, got {self.s_star:.3e}")

    @property
    def s_star(self):
        return self.params.s_star

    def transform(self):
        if self.interaction_only:
            return compose(general_om_symplectic(self.params), mechanical_rotation_symplectic(self.params.phi_d))
        return protocol_transform(self.params)

    def with_phi_d(self, phi_d):
        return ReadoutConfig(
            self.params, self.mech_state, self.grid, phi_d, self.noise,
            self.wigner_regime, self.interaction_only, self.noise_before_interaction,
        )


@dataclass(frozen=True)
class Coupling:
    """Geometry of the readout read off the composed transform.

    A mechanical point with quadrature ``y = X(angle)`` moves the optical
    output by ``y * direction * gain`` (plus ``offset``); the probe is mapped
    linearly with ``optical_map``.
    """

    angle: float
    gain: float
    direction: np.ndarray
    offset: np.ndarray
    optical_map: np.ndarray


def readout_coupling(cfg, rank_tol=1e-10):
    """Extract the readout geometry from the mode transform of ``cfg``."""
    N, c = cfg.transform().point_map()
    opt, mech = [0, 2], [1, 3]
    n_aa = N[np.ix_(opt, opt)]
    n_ba = N[np.ix_(mech, opt)]
    U, sv, Vt = np.linalg.svd(n_ba)
    if sv[0] == 0:
        return Coupling(0.0, 0.0, np.array([0.0, 1.0]), c[opt], n_aa)
    if sv[1] > rank_tol * sv[0]:
        raise NotImplementedError("mechanics couples to more than one optical direction")
    mech_dir, opt_dir = U[:, 0], Vt[0]
    if opt_dir[1] < 0 or (opt_dir[1] == 0 and opt_dir[0] < 0):
        mech_dir, opt_dir = -mech_dir, -opt_dir
    angle = math.atan2(mech_dir[1], mech_dir[0]) % (2 * math.pi)
    return Coupling(angle, float(sv[0]), opt_dir, c[opt], n_aa)


def probe_covariance(epsilon):
    """Quadrature covariance of the momentum-squeezed probe."""
    return np.diag([0.5 * math.exp(2 * epsilon), 0.5 * math.exp(-2 * epsilon)])


def probe_wigner(epsilon, grid):
    """Wigner function ``exp(-(e^{-2 eps} x^2 + e^{2 eps} p^2)) / pi`` of the probe."""
    if not epsilon >= 0:
        raise ValueError("epsilon must be non-negative")
    q, p = grid.mesh()
    vals = np.exp(-(math.exp(-2 * epsilon) * q * q + math.exp(2 * epsilon) * p * p)) / math.pi
    return QuasiDistribution(grid, vals, 0.0, {"source": "probe", "epsilon": epsilon})


def _output_gaussian(cfg, coupling):
    # covariance of the optical output for a fixed mechanical point, and the signal scale
    cov = probe_covariance(cfg.params.epsilon)
    if cfg.noise is not None and cfg.noise_before_interaction:
        cov = cov + cfg.noise.covariance
    cov = coupling.optical_map.T @ cov @ coupling.optical_map
    scale = 1.0
    if cfg.noise is not None:
        if cfg.noise_before_interaction:
            if cfg.noise.loss != 1.0:
                raise ValueError("loss cannot be moved before the interaction")
        else:
            cov = cfg.noise.apply_to_covariance(cov)
            scale = math.sqrt(cfg.noise.loss)
    return cov, scale


def _mech_axis(rho, spread):
    # quadrature sample points for the mechanical integral
    dim = rho.dim
    reach = math.sqrt(2.0 * dim + 1.0) + 6.0
    step = min(0.02, spread / 4.0)
    n = int(math.ceil(2 * reach / step)) | 1
    return np.linspace(-reach, reach, n)


def _gauss(x, var):
    return np.exp(-0.5 * x * x / var) / math.sqrt(2 * math.pi * var)


def smoothed_marginal(rho, x, angle, variance):
    """``int dy <y_angle|rho|y_angle> G(x - y; variance)`` by quadrature on a fine axis."""
    x = np.asarray(x, dtype=float)
    if variance <= 0:
        return quadrature_distribution(rho, x, angle)
    y = _mech_axis(rho, math.sqrt(variance))
    marg = quadrature_distribution(rho, y, angle)
    out = np.empty(x.size)
    for lo in range(0, x.size, 512):
        chunk = x[lo : lo + 512]
        out[lo : lo + chunk.size] = np.trapezoid(_gauss(chunk[:, None] - y[None, :], variance) * marg, y, axis=1)
    return out


def output_momentum_marginal(cfg, p_values=None):
    """Optical momentum distribution after the pulse, as a tomogram at angle pi/2."""
    coupling = readout_coupling(cfg)
    cov, scale = _output_gaussian(cfg, coupling)
    gain = scale * coupling.gain * coupling.direction[1]
    mech_x = default_x_grid(cfg.grid)
    if p_values is None:
        p_values = gain * mech_x if gain > 0 else mech_x
    p_values = np.asarray(p_values, dtype=float)
    shift = scale * coupling.offset[1]
    var_p = cov[1, 1]
    if gain == 0:
        vals = _gauss(p_values - shift, var_p)
    else:
        vals = smoothed_marginal(cfg.mech_state, (p_values - shift) / gain, coupling.angle, var_p / gain**2) / abs(gain)
    meta = {"gain": gain, "mech_angle": coupling.angle, "variance": var_p, "shift": shift}
    return Tomogram(p_values, vals, math.pi / 2, 0.0, meta)


def simulate_output_wigner(cfg, output_grid=None):
    """Optical Wigner function after the readout pulse.

    Uses the same one-dimensional mechanical integral as
    :func:`output_momentum_marginal`; the x' marginal is the probe's.
    """
    coupling = readout_coupling(cfg)
    cov, scale = _output_gaussian(cfg, coupling)
    step = scale * coupling.gain * coupling.direction
    offset = scale * coupling.offset
    mech_x = default_x_grid(cfg.grid)
    if output_grid is None:
        half_x = max(6.0, 6.0 * math.sqrt(2 * cov[0, 0]))
        half_p = max(6.0, abs(step[1]) * mech_x[-1] + 6.0 * math.sqrt(2 * cov[1, 1]))
        n = max(cfg.grid.n_q, cfg.grid.n_p)
        output_grid = PhaseSpaceGrid(-half_x, half_x, -half_p, half_p, n, n)
    qo, po = output_grid.q, output_grid.p
    if np.linalg.norm(step) == 0:
        vals = _bivariate(qo[:, None] - offset[0], po[None, :] - offset[1], cov)
        return QuasiDistribution(output_grid, vals, 0.0, {"gain": 0.0})
    spread = math.sqrt(min(cov[0, 0], cov[1, 1])) / np.linalg.norm(step)
    y = _mech_axis(cfg.mech_state, spread)
    weights = quadrature_distribution(cfg.mech_state, y, coupling.angle) * np.gradient(y)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    keep = np.abs(weights) > 1e-18 * np.abs(weights).max()
    y, weights = y[keep], weights[keep]
    separable = abs(cov[0, 1]) < 1e-15 and abs(step[0]) < 1e-15
    if separable:
        px = _gauss(qo - offset[0], cov[0, 0])
        pp = np.empty(po.size)
        for lo in range(0, po.size, 512):
            chunk = po[lo : lo + 512]
            pp[lo : lo + chunk.size] = _gauss(chunk[:, None] - offset[1] - step[1] * y[None, :], cov[1, 1]) @ weights
        vals = np.outer(px, pp)
    else:
        vals = np.zeros(output_grid.shape)
        dq = qo[:, None] - offset[0]
        dp = po[None, :] - offset[1]
        for yi, wi in zip(y, weights):
            vals += wi * _bivariate(dq - step[0] * yi, dp - step[1] * yi, cov)
    meta = {"gain": float(step[1]), "mech_angle": coupling.angle}
    return QuasiDistribution(output_grid, vals, 0.0, meta)


def _bivariate(dq, dp, cov):
    inv = np.linalg.inv(cov)
    quad = inv[0, 0] * dq * dq + 2 * inv[0, 1] * dq * dp + inv[1, 1] * dp * dp
    return np.exp(-0.5 * quad) / (2 * math.pi * math.sqrt(np.linalg.det(cov)))


def extract_mech_tomogram(cfg, x=None):
    """Mechanical tomogram read off the optical momentum distribution.

    The momentum axis is divided by the readout gain and the values
    multiplied by it.  The result is the mechanical marginal at the readout
    angle, smoothed to order ``-s`` where ``s = 2 Var(p') / gain^2`` (equal to
    ``s*`` for a noiseless probe).  In the Wigner regime the tomogram is
    tagged ``s = 0`` and the neglected order is kept in ``meta``.  ``x``
    selects the mechanical axis (default: the config grid's).
    """
    marg = output_momentum_marginal(cfg)
    gain = marg.meta["gain"]
    if x is not None and gain > 0:
        marg = output_momentum_marginal(cfg, p_values=gain * np.asarray(x, dtype=float) + marg.meta["shift"])
    if gain <= 0:
        raise ValueError("no mechanical signal in the optical output (zero coupling)")
    s_eff = 2.0 * marg.meta["variance"] / gain**2
    if s_eff > 1.0:
        raise ValueError(f"readout too weak: effective order -{s_eff:.3g} is below -1")
    x = (marg.x_values - marg.meta["shift"]) / gain if x is None else np.asarray(x, dtype=float)
    meta = {
        "readout_angle": marg.meta["mech_angle"],
        "order_shift": s_eff,
        "s_star": cfg.s_star,
        "gain": gain,
        "phi_d": cfg.phi_d,
    }
    s_tag = -s_eff
    if cfg.wigner_regime:
        meta["order_budget"] = s_eff
        s_tag = 0.0
    return Tomogram(x, marg.w_values * gain, marg.meta["mech_angle"], s_tag, meta)


def full_tomography(cfg, angles, recon_grid=None, n_jobs=1, cutoff=0.9):
    """Tomograms at the requested mechanical angles and their FBP reconstruction.

    Each angle is reached by choosing the free-rotation delay ``phi_d``.
    ``n_jobs > 1`` extracts angles on a thread pool; results do not depend
    on it.  Returns ``(TomogramSet, QuasiDistribution)``.
    """
    angles = np.mod(np.asarray(angles, dtype=float), 2 * np.pi)
    if angles.size < 8:
        raise ValueError("full tomography needs at least 8 angles")
    base = readout_coupling(cfg.with_phi_d(0.0)).angle

    def one(target):
        t = extract_mech_tomogram(cfg.with_phi_d((target - base) % (2 * np.pi)))
        if abs(math.remainder(t.phi - target, 2 * np.pi)) > 1e-9:
            raise RuntimeError(f"delay did not reach angle {target}")
        return t

    targets = np.sort(angles)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=int(n_jobs)) as pool:
            raw = list(pool.map(one, targets))
    else:
        raw = [one(a) for a in targets]
    orders = np.array([t.s for t in raw])
    if np.ptp(orders) > 1e-9 * max(1.0, abs(orders[0])):
        raise ValueError("extracted order differs between angles; the readout is not angle independent")
    # pin angle and order tags so round-off does not split the set
    toms = [Tomogram(t.x_values, t.w_values, a, raw[0].s, t.meta) for t, a in zip(raw, targets)]
    ts = TomogramSet(tuple(toms), {"s_star": cfg.s_star})
    grid = cfg.grid if recon_grid is None else recon_grid
    return ts, inverse_radon(ts, grid, cutoff=cutoff)


def classical_kernel_variance(eta, sigma_p):
    """Variance (mechanical units) of the smoothing in the classical-probe readout."""
    eta = check_positive(eta, "eta")
    if sigma_p < 0:
        raise ValueError("sigma_p must be non-negative")
    return (1.0 + 2.0 * sigma_p**2) / (2.0 * eta**2)


def classical_readout_tomogram(mech_state, eta, sigma_p, phi, x=None):
    """Mechanical tomogram seen through a classical (unsqueezed) probe readout.

    The detected momentum ``p`` is rescaled to ``p / eta`` so that the result
    lives on the mechanical axis; it is the Wigner marginal convolved with a
    normalised Gaussian of variance ``(1 + 2 sigma_p^2) / (2 eta^2)``.
    """
    var = classical_kernel_variance(eta, sigma_p)
    x = default_x_grid(PhaseSpaceGrid()) if x is None else np.asarray(x, dtype=float)
    vals = smoothed_marginal(mech_state, x, phi, var)
    return Tomogram(x, vals, phi, 0.0, {"source": "classical", "eta": eta, "sigma_p": sigma_p, "kernel_variance": var})


@dataclass(frozen=True)
class DeconvolutionReport:
    input_rel_error: float
    output_rel_error: float
    error_ratio: float
    kernel_variance: float
    max_gain: float
    seed: int


def _rel_l2(a, b):
    norm = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / norm) if norm > 0 else math.inf


def naive_deconvolution(t, eta, noise_amplitude, *, sigma_p=0.0, seed=0, reference=None, floor=0.0):
    """Undo the classical-readout smoothing by Fourier division.

    Adds i.i.d. Gaussian noise of standard deviation
    ``noise_amplitude * max(t)`` (fixed ``seed``), divides by the Gaussian's
    transform and compares with ``reference`` (by default the deconvolution
    of the noiseless input).  ``floor`` is an optional Tikhonov term, off by
    default so the instability is visible.
    """
    if noise_amplitude < 0:
        raise ValueError("noise_amplitude must be non-negative")
    var = classical_kernel_variance(eta, sigma_p)
    rng = np.random.default_rng(seed)
    clean = np.asarray(t.w_values, dtype=float)
    noisy = clean + noise_amplitude * clean.max() * rng.standard_normal(clean.size)
    n = clean.size
    k = 2 * np.pi * sp_fft.rfftfreq(n, d=t.dx)
    kernel = np.exp(-0.5 * var * k * k)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        inv = kernel / (kernel * kernel + floor) if floor > 0 else 1.0 / kernel

        def undo(v):
            return sp_fft.irfft(sp_fft.rfft(v) * inv, n=n)

        out = undo(noisy)
        ref = undo(clean) if reference is None else np.asarray(reference, dtype=float)
    in_err = _rel_l2(noisy, clean)
    out_err = _rel_l2(out, ref)
    if not np.isfinite(out_err):
        out_err = math.inf
    ratio = out_err / in_err if in_err > 0 else (0.0 if out_err == 0 else math.inf)
    report = DeconvolutionReport(in_err, out_err, ratio, var, float(np.max(inv)), int(seed))
    result = Tomogram(t.x_values, np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0), t.phi, 0.0,
                      {"source": "naive_deconvolution", "finite": bool(np.all(np.isfinite(out)))})
    return result, report


def apply_noise_channel(w, nc):
    """Pass a distribution through loss followed by added Gaussian noise.

    Loss rescales the distribution by ``sqrt(eta)`` (cubic interpolation)
    and adds vacuum noise ``(1 - eta) / 2`` per quadrature; ``nc.covariance``
    is then convolved in.  For order-``s`` inputs the added noise is simply
    part of the smoothing kernel.
    """
    values = w.values
    eta = nc.loss
    cov = np.array(nc.covariance, dtype=float)
    if eta != 1.0:
        q, p = w.grid.mesh()
        iq = (q / math.sqrt(eta) - w.grid.q_min) / w.grid.dq
        ip = (p / math.sqrt(eta) - w.grid.p_min) / w.grid.dp
        values = map_coordinates(values, [iq, ip], order=3, mode="constant", cval=0.0) / eta
        cov = cov + 0.5 * (1 - eta) * (1 - w.s) * np.eye(2)
    out = gaussian_blur(values, w.grid, cov)
    return w.with_values(out, noise_loss=eta)


def order_budget(cfg, x=None):
    """Sup-norm distance between the extracted tomogram and the exact Wigner marginal."""
    t = extract_mech_tomogram(cfg, x)
    exact = quadrature_distribution(cfg.mech_state, t.x_values, t.phi)
    return float(np.abs(t.w_values - exact).max())


def chi_jitter_sweep(cfg, rel_jitters):
    """Effect of a relative error in chi (laser amplitude) on the extracted tomogram.

    The tomogram is read out with the nominal gain while the true coupling
    is ``chi (1 + jitter)``.  Returns one record per jitter with the true
    ``s*`` and the sup-norm distance to the nominal tomogram.
    """
    nominal = extract_mech_tomogram(cfg)
    gain = nominal.meta["gain"]
    records = []
    for jit in rel_jitters:
        params = cfg.params.replace(r=cfg.params.r * (1.0 + jit))
        shifted = ReadoutConfig(params, cfg.mech_state, cfg.grid, cfg.phi_d, cfg.noise,
                                False, True, cfg.noise_before_interaction)
        marg = output_momentum_marginal(shifted, p_values=gain * nominal.x_values)
        vals = marg.w_values * gain
        records.append(
            {
                "jitter": float(jit),
                "s_star": params.s_star,
                "sup_distance": float(np.abs(vals - nominal.w_values).max()),
            }
        )
    return records
