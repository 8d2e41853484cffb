"""Pulse length and energy needed for Wigner-regime readout on real systems."""

from dataclasses import asdict, dataclass, field
import math

from ._validation import ConvergenceError
from .mode_transform import solve_pulse_conditions

__all__ = [
    "HBAR",
    "DEFAULT_OMEGA_O",
    "SystemRecord",
    "FeasibilityReport",
    "TABLE_I",
    "regime_flag",
    "feasibility",
    "feasibility_table",
]

HBAR = 1.054571817e-34
# 1064 nm carrier
DEFAULT_OMEGA_O = 2 * math.pi * 299792458.0 / 1064e-9


@dataclass(frozen=True)
class SystemRecord:
    """Optomechanical system parameters; all rates in rad/s.

    ``g0`` may be zero so that the degenerate case can be reported rather
    than rejected.  ``printed`` holds reference values for comparison.
    """

    name: str
    omega_m: float
    mass: float
    gamma_m: float
    g0: float
    kappa_o: float
    omega_o: float = DEFAULT_OMEGA_O
    printed: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for key in ("omega_m", "mass", "gamma_m", "kappa_o", "omega_o"):
            value = getattr(self, key)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{self.name}: {key} must be positive and finite, got {value}")
        if not (math.isfinite(self.g0) and self.g0 >= 0):
            raise ValueError(f"{self.name}: g0 must be non-negative and finite, got {self.g0}")

    @property
    def sideband_ratio(self):
        return self.kappa_o / self.omega_m


def regime_flag(ratio):
    """``non-resolved`` above 1, ``marginal`` down to 0.1, ``resolved`` below."""
    if ratio > 1:
        return "non-resolved"
    if ratio >= 0.1:
        return "marginal"
    return "resolved"


@dataclass(frozen=True)
class FeasibilityReport:
    name: str
    sideband_ratio: float
    regime_flag: str
    tau_opt: float = math.nan
    pulse_energy: float = math.nan
    chi: float = math.nan
    k: int = 0
    photon_number: float = math.nan
    omega_o: float = DEFAULT_OMEGA_O
    deviations: dict = field(default_factory=dict)
    error: str = ""

    @property
    def ok(self):
        return not self.error

    def to_dict(self):
        return asdict(self)


def _nearest_even(value):
    k = 2 * round(value / 2)
    return max(2, int(k))


def feasibility(sys, *, epsilon=0.0, u=2.0, chi=3.0):
    """Pulse length and energy for one system.

    With ``u = 2`` the pulse lasts half a mechanical period.  ``k`` is the
    even integer closest to ``2 sqrt(3) chi^2 (x - sin x) / pi`` at that
    pulse phase, and chi is then adjusted so the Kerr condition holds
    exactly.  The pulse carries ``r^2`` photons with ``r = chi omega_m / g0``.
    Failures are reported in ``error`` rather than raised.
    """
    ratio = sys.sideband_ratio
    flag = regime_flag(ratio)
    base = {"name": sys.name, "sideband_ratio": ratio, "regime_flag": flag, "omega_o": sys.omega_o}
    if not 0 < u <= 2:
        return FeasibilityReport(**base, error=f"u must lie in (0, 2], got {u}")
    x = 2.0 * math.asin(u / 2.0)  # u = 2 sin(x / 2)
    lhs = x - math.sin(x)
    k = _nearest_even(2 * math.sqrt(3.0) * chi**2 * lhs / math.pi)
    chi_exact = math.sqrt(k * math.pi / (2 * math.sqrt(3.0) * lhs))
    if sys.g0 == 0:
        return FeasibilityReport(**base, chi=chi_exact, k=k, error="g0 is zero: the photon number is unbounded")
    try:
        params = solve_pulse_conditions(sys.g0, sys.omega_m, sys.omega_o, chi_exact, k, epsilon=epsilon)
    except (ConvergenceError, ValueError) as exc:
        return FeasibilityReport(**base, chi=chi_exact, k=k, error=str(exc))
    photons = params.r**2
    if not math.isfinite(photons):
        return FeasibilityReport(**base, chi=chi_exact, k=k, error="photon number overflows: g0 too small")
    energy = photons * HBAR * sys.omega_o
    deviations = {}
    for key, value in (("tau_opt", params.tau), ("pulse_energy", energy), ("sideband_ratio", ratio)):
        ref = sys.printed.get(key)
        if ref:
            deviations[key] = value / ref
    return FeasibilityReport(
        **base, tau_opt=params.tau, pulse_energy=energy, chi=chi_exact, k=k,
        photon_number=photons, deviations=deviations,
    )


def feasibility_table(systems=None, **assumptions):
    return [feasibility(s, **assumptions) for s in (TABLE_I if systems is None else systems)]


def _row(name, omega_m, mass, gamma_m, g0, kappa_o, ratio, tau, energy):
    printed = {"sideband_ratio": ratio, "tau_opt": tau, "pulse_energy": energy}
    return SystemRecord(name, omega_m, mass, gamma_m, g0, kappa_o, printed=printed)


# Published parameter sets; rates are read as angular frequencies.
TABLE_I = (
    _row("Kleckner", 9.7e3, 1.1e-10, 1.3e-2, 22, 4.7e5, 55, 2.1e-4, 5.5e-13),
    _row("Murch", 4.2e4, 1e-22, 1e3, 6e5, 6.6e5, 15.7, 4.8e-5, 1.4e-20),
    _row("Norte", 1.5e5, 1e-12, 1.4e-3, 1e2, 1e6, 6, 1.3e-5, 6.4e-12),
    _row("Thompson", 1.3e5, 4e-11, 0.12, 50, 5e5, 3.7, 1.5e-5, 1.9e-11),
    _row("Anguiano", 20e9, 7.7e-12, 2e6, 4.8e7, 3.4e10, 1.72, 1e-10, 4.9e-13),
    _row("Arcizet", 8.1e5, 1.9e-7, 81, 1.2, 1e6, 1.3, 2.5e-6, 1.3e-6),
    _row("Cuthbertson", 1e3, 1.85, 2.5e-6, 1.2e-3, 275, 0.9, 2e-3, 2.0e-6),
    _row("Groblacher", 9.5e5, 1.4e-10, 1.4e2, 3.9, 2e5, 0.22, 2.1e-6, 1.7e-7),
    _row("Chan", 3.9e9, 3.1e-16, 3.9e3, 9e5, 5e8, 0.13, 5.1e-10, 5.3e-11),
    _row("Verhagen", 7.8e7, 1.9e-12, 3.4e3, 3.4e3, 7.1e6, 0.09, 2.6e-8, 1.5e-9),
    _row("Teufel", 1.1e7, 4.8e-14, 32, 2e2, 2e5, 0.02, 1.8e-7, 8.5e-9),
)
