"""Run configuration: YAML text validated by pydantic models.

Physical inputs carry their unit in the key (``omega_m_rad_per_s``) so that
angular and cyclic frequencies cannot be mixed up.
"""

from pathlib import Path
from typing import List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

__all__ = [
    "CONFIG_VERSION",
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "dump_config",
]

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProtocolSection(_Model):
    g0_rad_per_s: float = Field(2 * 3.141592653589793 * 100.0, gt=0)
    omega_m_rad_per_s: float = Field(2 * 3.141592653589793 * 1e4, gt=0)
    omega_o_rad_per_s: float = Field(2 * 3.141592653589793 * 1e7, gt=0)
    chi: float = Field(3.0, gt=0)
    k: int = Field(32, gt=0)
    theta_rad: float = 0.0
    epsilon: float = 0.0
    wigner_regime: bool = False

    @model_validator(mode="after")
    def _even_k(self):
        if self.k % 2:
            raise ValueError("k must be even")
        return self


class StateSection(_Model):
    kind: Literal["fock", "coherent", "thermal", "squeezed", "displaced_thermal", "superposition", "figure_one"] = "fock"
    n: int = Field(0, ge=0)
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    nbar: float = Field(0.0, ge=0)
    squeezing: float = 0.0
    squeezing_angle_rad: float = 0.0
    amplitudes: List[float] = Field(default_factory=list)
    dim: int = Field(30, ge=2, le=200)


class GridSection(_Model):
    half_width: float = Field(6.0, gt=0)
    points: int = Field(256, ge=32, le=4096)


class NoiseSection(_Model):
    covariance: List[List[float]] = Field(default_factory=lambda: [[0.0, 0.0], [0.0, 0.0]])
    loss: float = Field(1.0, gt=0, le=1)
    characterized: bool = True

    @model_validator(mode="after")
    def _shape(self):
        if len(self.covariance) != 2 or any(len(row) != 2 for row in self.covariance):
            raise ValueError("covariance must be a 2x2 matrix")
        return self


class TomographySection(_Model):
    angles: int = Field(180, ge=8)
    cutoff: float = Field(0.9, gt=0, le=1)
    phi_d_rad: float = 0.0


class WitnessSection(_Model):
    dims: List[int] = Field(default_factory=lambda: [10, 20, 30])
    tolerance: float = Field(1e-6, gt=0)
    vacuum_order: Optional[float] = Field(None, gt=-1, lt=1)
    phi_d_rad: float = 0.0


class ClassicalSection(_Model):
    eta: float = Field(1.0, gt=0)
    sigma_p: float = Field(0.0, ge=0)
    noise_amplitude: float = Field(0.01, ge=0)
    angle_rad: float = 0.0
    points: int = Field(32, ge=8, le=4096)
    half_width: float = Field(6.0, gt=0)


class SystemSection(_Model):
    name: str
    omega_m_rad_per_s: float = Field(gt=0)
    mass_kg: float = Field(gt=0)
    gamma_m_rad_per_s: float = Field(gt=0)
    g0_rad_per_s: float = Field(ge=0)
    kappa_o_rad_per_s: float = Field(gt=0)
    omega_o_rad_per_s: Optional[float] = Field(None, gt=0)


class FeasibilitySection(_Model):
    use_builtin_table: bool = True
    systems: List[SystemSection] = Field(default_factory=list)
    epsilon: float = 0.0
    u: float = Field(2.0, gt=0, le=2)
    chi: float = Field(3.0, gt=0)


class RunConfig(_Model):
    version: Literal[1] = CONFIG_VERSION
    command: Optional[Literal["tomography", "witness", "compare-classical", "feasibility"]] = None
    seed: int = Field(0, ge=0, lt=2**64)
    protocol: ProtocolSection = Field(default_factory=ProtocolSection)
    state: StateSection = Field(default_factory=StateSection)
    grid: GridSection = Field(default_factory=GridSection)
    noise: Optional[NoiseSection] = None
    tomography: TomographySection = Field(default_factory=TomographySection)
    witness: WitnessSection = Field(default_factory=WitnessSection)
    classical: ClassicalSection = Field(default_factory=ClassicalSection)
    feasibility: FeasibilitySection = Field(default_factory=FeasibilitySection)


def _format_error(exc):
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def parse_config(text):
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(cfg):
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)
