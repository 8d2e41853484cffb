"""Linear mode transformations of the optical (a) and mechanical (b) modes.

A transform acts on the row vector ``A = (a^dag, b^dag, a, b)`` as
``A' = U A U^dag = A S + D``.  Column ``j`` of ``S`` holds the expansion of
``A'_j``; ``D = (D_a*, D_b*, D_a, D_b)``.  For ``U = U1 U2`` the composite is
``S = S1 S2`` and ``D = D1 S2 + D2``.

Phase-space points ``Z = (alpha*, beta*, alpha, beta)`` are carried along by
``Z' = (Z - D) S^{-1}``: a Wigner function at ``Z`` ends up at ``Z'``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import bisect

from ._validation import ConvergenceError, check_positive

__all__ = [
    "ProtocolParams",
    "SymplecticTransform",
    "SYMPLECTIC_FORM",
    "admissible_chi_range",
    "solve_pulse_conditions",
    "identity",
    "compose",
    "om_symplectic",
    "general_om_symplectic",
    "kerr_symplectic",
    "optical_rotation_symplectic",
    "mechanical_rotation_symplectic",
    "protocol_transform",
    "transport_point",
]

SYMPLECTIC_FORM = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

# omega_m * tau must stay inside this window so that u is far from zero.
PULSE_WINDOW = (0.1 * math.pi, 1.9 * math.pi)
PULSE_TOL = 1e-6
ROTATION_TOL = 1e-6

# Maps (q_a, q_b, p_a, p_b) row vectors to (a^dag, b^dag, a, b) row vectors.
_TO_COMPLEX = np.array(
    [
        [1, 0, 1, 0],
        [0, 1, 0, 1],
        [-1j, 0, 1j, 0],
        [0, -1j, 0, 1j],
    ]
) / math.sqrt(2.0)
_TO_REAL = np.linalg.inv(_TO_COMPLEX)


def _pulse_lhs(x):
    return x - math.sin(x)


def _rotation_residual(theta_total):
    return abs(math.remainder(theta_total, 2 * math.pi))


@dataclass(frozen=True)
class ProtocolParams:
    """Physical parameters of one pulsed readout.

    Rates in rad/s, times in s.  ``r`` is the coherent amplitude of the
    probe, ``theta`` its phase, ``epsilon`` the probe squeezing, ``k`` the
    even integer of the pulse condition and ``m_rot`` the number of optical
    periods in ``tau0 + tau``.
    """

    g0: float
    omega_m: float
    omega_o: float
    tau: float
    tau0: float = 0.0
    tau_d: float = 0.0
    r: float = 0.0
    theta: float = 0.0
    epsilon: float = 0.0
    k: int = 2
    m_rot: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("g0", "omega_m", "omega_o", "tau"):
            check_positive(getattr(self, name), name)
        for name in ("tau0", "tau_d", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.tau0 < 0:
            raise ValueError("tau0 must be non-negative")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError("r must be a non-negative real amplitude")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError("epsilon must be non-negative")
        if int(self.k) != self.k or self.k <= 0 or self.k % 2:
            raise ValueError(f"k must be an even positive integer, got {self.k}")
        if int(self.m_rot) != self.m_rot or self.m_rot < 0:
            raise ValueError("m_rot must be a non-negative integer")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "m_rot", int(self.m_rot))

    @property
    def chi(self):
        return self.g0 * self.r / self.omega_m

    @property
    def pulse_phase(self):
        """``omega_m tau``."""
        return self.omega_m * self.tau

    @property
    def u(self):
        return math.sqrt(2.0 * (1.0 - math.cos(self.pulse_phase)))

    @property
    def phi(self):
        x = self.pulse_phase
        return math.atan2(math.sin(x), 1.0 - math.cos(x))

    @property
    def chi_u(self):
        return self.chi * self.u

    @property
    def vbar(self):
        return 2.0 * math.sqrt(3.0) * self.chi**2 * _pulse_lhs(self.pulse_phase)

    @property
    def phi_d(self):
        return self.omega_m * self.tau_d

    @property
    def optical_phase(self):
        """``(tau0 + tau) omega_o``."""
        return (self.tau0 + self.tau) * self.omega_o

    @property
    def s_star(self):
        return (2.0 * self.chi_u * math.exp(self.epsilon)) ** -2

    @property
    def pulse_residual(self):
        if self.chi == 0:
            return math.inf
        target = self.k * math.pi / (2.0 * math.sqrt(3.0) * self.chi**2)
        return abs(_pulse_lhs(self.pulse_phase) - target)

    @property
    def rotation_residual(self):
        return abs(self.optical_phase - 2 * math.pi * self.m_rot)

    @property
    def rotation_tolerance(self):
        # tau0 and tau are floats: their last bit alone moves the optical
        # phase by omega_o * ulp, which exceeds 1e-6 rad at optical frequencies.
        floor = 4.0 * self.omega_o * (math.ulp(self.tau0) + math.ulp(self.tau))
        return max(ROTATION_TOL, floor + 4.0 * math.ulp(self.optical_phase))

    @property
    def in_pulse_window(self):
        return PULSE_WINDOW[0] <= self.pulse_phase <= PULSE_WINDOW[1]

    @property
    def pulse_condition_ok(self):
        return self.in_pulse_window and self.pulse_residual <= PULSE_TOL

    @property
    def rotation_condition_ok(self):
        return self.rotation_residual <= self.rotation_tolerance

    @property
    def conditions_satisfied(self):
        return self.pulse_condition_ok and self.rotation_condition_ok

    def replace(self, **changes):
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update(changes)
        return ProtocolParams(**values)

    def with_delay_angle(self, phi_d):
        """Same pulse with the pre-interaction delay set to ``phi_d / omega_m``."""
        return self.replace(tau_d=float(phi_d) / self.omega_m)


def admissible_chi_range(k):
    """Interval of chi for which the pulse condition has a root in the window."""
    g_lo, g_hi = (_pulse_lhs(x) for x in PULSE_WINDOW)
    scale = k * math.pi / (2.0 * math.sqrt(3.0))
    return math.sqrt(scale / g_hi), math.sqrt(scale / g_lo)


def solve_pulse_conditions(
    g0, omega_m, omega_o, chi_target, k, *, theta=0.0, epsilon=0.0, tau_d=0.0
):
    """Find the pulse length and delay that make the Kerr and optical blocks trivial.

    Solves ``omega_m tau - sin(omega_m tau) = k pi / (2 sqrt(3) chi^2)`` by
    bisection on the admissible window, sets ``r = chi omega_m / g0`` and picks
    the smallest ``tau0 >= 0`` with ``(tau0 + tau) omega_o`` a multiple of 2 pi.

    Raises
    ------
    ConvergenceError
        If the root falls outside the window; the message names the admissible chi range.
    """
    g0 = check_positive(g0, "g0")
    omega_m = check_positive(omega_m, "omega_m")
    omega_o = check_positive(omega_o, "omega_o")
    chi_target = check_positive(chi_target, "chi_target")
    if int(k) != k or k <= 0 or k % 2:
        raise ValueError(f"k must be an even positive integer, got {k}")
    k = int(k)
    target = k * math.pi / (2.0 * math.sqrt(3.0) * chi_target**2)
    lo, hi = PULSE_WINDOW
    f_lo, f_hi = _pulse_lhs(lo) - target, _pulse_lhs(hi) - target
    if f_lo > 0 or f_hi < 0:
        c_lo, c_hi = admissible_chi_range(k)
        raise ConvergenceError(
            f"no pulse length in the window for chi={chi_target:g}, k={k}; "
            f"admissible chi range is [{c_lo:.6g}, {c_hi:.6g}]"
        )
    x = bisect(lambda y: _pulse_lhs(y) - target, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    tau = x / omega_m
    r = chi_target * omega_m / g0
    period = 2 * math.pi / omega_o
    m_rot = max(1, math.ceil(tau / period - 1e-12))
    tau0 = max(0.0, m_rot * period - tau)
    params = ProtocolParams(
        g0=g0, omega_m=omega_m, omega_o=omega_o, tau=tau, tau0=tau0, tau_d=tau_d,
        r=r, theta=theta, epsilon=epsilon, k=k, m_rot=m_rot,
    )
    if not params.pulse_condition_ok:
        raise ConvergenceError(f"pulse condition residual {params.pulse_residual:.3e} above tolerance")
    return params


@dataclass(frozen=True)
class SymplecticTransform:
    """``A' = A S + D`` on ``A = (a^dag, b^dag, a, b)``."""

    S: np.ndarray
    D: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=complex))

    def __post_init__(self):
        S = np.array(self.S, dtype=complex)
        D = np.array(self.D, dtype=complex).ravel()
        if S.shape != (4, 4) or D.shape != (4,):
            raise ValueError("S must be 4x4 and D length 4")
        S.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "D", D)

    def symplectic_error(self):
        """Largest deviation of ``S^T Sigma S`` and ``S Sigma S^T`` from ``Sigma``."""
        left = self.S.T @ SYMPLECTIC_FORM @ self.S - SYMPLECTIC_FORM
        right = self.S @ SYMPLECTIC_FORM @ self.S.T - SYMPLECTIC_FORM
        return float(max(np.abs(left).max(), np.abs(right).max()))

    def determinant_error(self):
        return float(abs(np.linalg.det(self.S) - 1.0))

    def conjugation_error(self):
        """Deviation from the structure forced by ``a'^dag = (a')^dag``."""
        swap = np.roll(np.eye(4), 2, axis=0)
        return float(
            max(
                np.abs(self.S - swap @ self.S.conj() @ swap).max(),
                np.abs(self.D - swap @ self.D.conj()).max(),
            )
        )

    def is_valid(self, tol=1e-10):
        return max(self.symplectic_error(), self.determinant_error(), self.conjugation_error()) <= tol

    def inverse(self):
        s_inv = np.linalg.inv(self.S)
        return SymplecticTransform(s_inv, -self.D @ s_inv)

    def real_matrices(self):
        """Return ``(M, d)`` with ``R' = R M + d`` on ``R = (q_a, q_b, p_a, p_b)``.

        This is the Heisenberg action on quadrature operators; the matching
        phase-space point map is ``inverse().real_matrices()``.
        """
        M = _TO_COMPLEX @ self.S @ _TO_REAL
        d = self.D @ _TO_REAL
        return M.real, d.real

    def point_map(self):
        """``(N, c)`` such that a phase-space point ``R`` moves to ``R N + c``."""
        return self.inverse().real_matrices()

    def optical_block(self):
        idx = [0, 2]
        return self.S[np.ix_(idx, idx)]


def identity():
    return SymplecticTransform(np.eye(4))


def compose(*transforms):
    """Transform of ``U_1 U_2 ... U_n`` for arguments ``t_1, ..., t_n``.

    ``U_n`` acts first on the state.  With two arguments this is
    ``S = S1 S2`` and ``D = D1 S2 + D2``.
    """
    if not transforms:
        return identity()
    S = np.eye(4, dtype=complex)
    D = np.zeros(4, dtype=complex)
    for t in transforms:
        D = D @ t.S + t.D
        S = S @ t.S
    return SymplecticTransform(S, D)


def _require_conditions(params):
    if not params.conditions_satisfied:
        raise ValueError(
            "pulse and rotation conditions are not satisfied "
            f"(pulse residual {params.pulse_residual:.2e}, rotation residual {params.rotation_residual:.2e})"
        )


def general_om_symplectic(params=None, *, chi_u=None, phi=None, theta=None, r=None):
    """Optomechanical interaction block for arbitrary ``theta`` and ``phi``.

    Keyword overrides let callers build the block without a full parameter set.
    """
    cu = params.chi_u if chi_u is None else float(chi_u)
    ph = params.phi if phi is None else float(phi)
    th = params.theta if theta is None else float(theta)
    amp = params.r if r is None else float(r)
    et, ef = np.exp(1j * th), np.exp(1j * ph)
    etc, efc = et.conjugate(), ef.conjugate()
    # a' = a + i sqrt2 chi_u e^{i theta} X(phi + pi/2),
    # b' = b - chi_u e^{i phi} (sqrt2 x(theta) + r)
    S = np.array(
        [
            [1, -cu * et * efc, 0, -cu * et * ef],
            [cu * etc * ef, 1, -cu * et * ef, 0],
            [0, -cu * etc * efc, 1, -cu * etc * ef],
            [-cu * etc * efc, 0, cu * et * efc, 1],
        ],
        dtype=complex,
    )
    d_b = -cu * amp * ef
    return SymplecticTransform(S, np.array([0, np.conj(d_b), 0, d_b]))


def om_symplectic(params):
    """Optomechanical block at ``theta = 0`` for parameters meeting the pulse conditions."""
    _require_conditions(params)
    if params.theta != 0:
        raise ValueError("om_symplectic assumes theta = 0; use general_om_symplectic")
    return general_om_symplectic(params)


def kerr_symplectic(params=None, *, vbar=None, theta=None, r=None):
    """Effective optical Kerr block; identity on the mechanics."""
    vb = params.vbar if vbar is None else float(vbar)
    th = params.theta if theta is None else float(theta)
    amp = params.r if r is None else float(r)
    c, s = math.cos(vb), math.sin(vb)
    root3 = math.sqrt(3.0)
    S = np.eye(4, dtype=complex)
    S[0, 0] = c + 2j / root3 * s
    S[0, 2] = -1j / root3 * np.exp(2j * th) * s
    S[2, 0] = 1j / root3 * np.exp(-2j * th) * s
    S[2, 2] = c - 2j / root3 * s
    d_a = np.exp(1j * th) * (c / 3.0 - 1j / root3 * s - 1.0 / 3.0) * amp
    return SymplecticTransform(S, np.array([np.conj(d_a), 0, d_a, 0]))


def optical_rotation_symplectic(params=None, *, angle=None, theta=None, r=None):
    """Displaced rotation ``a' = a e^{i angle} + (e^{i angle} - 1) r e^{i theta}``."""
    big = params.optical_phase if angle is None else float(angle)
    th = params.theta if theta is None else float(theta)
    amp = params.r if r is None else float(r)
    # reduce first so that exp() sees a small argument
    ang = math.remainder(big, 2 * math.pi)
    rot = np.exp(1j * ang)
    S = np.eye(4, dtype=complex)
    S[0, 0] = rot.conjugate()
    S[2, 2] = rot
    d_a = (rot - 1.0) * amp * np.exp(1j * th)
    return SymplecticTransform(S, np.array([np.conj(d_a), 0, d_a, 0]))


def mechanical_rotation_symplectic(phi_d):
    """Free mechanical evolution ``exp(-i phi_d b^dag b)``: ``b' = b e^{i phi_d}``."""
    S = np.eye(4, dtype=complex)
    S[1, 1] = np.exp(-1j * phi_d)
    S[3, 3] = np.exp(1j * phi_d)
    return SymplecticTransform(S)


def protocol_transform(params, *, include_delay=True):
    """Full readout evolution: optical rotation, Kerr, interaction, then the delay."""
    blocks = [
        optical_rotation_symplectic(params),
        kerr_symplectic(params),
        general_om_symplectic(params),
    ]
    if include_delay:
        blocks.append(mechanical_rotation_symplectic(params.phi_d))
    return compose(*blocks)


def transport_point(alpha, beta, t):
    """Move the phase-space point ``(alpha, beta)`` through ``t``.

    Works elementwise on arrays.
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    Z = np.stack([alpha.conj(), beta.conj(), alpha, beta], axis=-1) - t.D
    Zp = Z @ np.linalg.inv(t.S)
    return Zp[..., 2], Zp[..., 3]
