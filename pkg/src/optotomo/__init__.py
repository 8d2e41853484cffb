"""Pulsed optomechanical readout: phase-space distributions, tomography and nonclassicality witnesses."""

from ._validation import (
    ConvergenceError,
    GridMismatchError,
    InvalidStateError,
    OrderMismatchError,
    SparseAngleWarning,
    TruncationWarning,
)
from .estimators import NonclassicalityWitness, WignerReconstructor
from .feasibility import SystemRecord, feasibility, feasibility_table
from .mode_transform import ProtocolParams, SymplecticTransform, protocol_transform, solve_pulse_conditions
from .nonclassicality import (
    LegitimacyReport,
    demarginalize_first,
    demarginalize_second,
    reconstruct_fictitious_operator,
    witness_from_protocol,
    witness_tomogram,
)
from .phase_space import DensityOperator, PhaseSpaceGrid, QuasiDistribution, Tomogram, order_shift, quasi_distribution
from .protocol import NoiseChannel, ReadoutConfig, extract_mech_tomogram, full_tomography, naive_deconvolution
from .tomography import TomogramSet, inverse_radon, radon, radon_s

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "GridMismatchError",
    "InvalidStateError",
    "OrderMismatchError",
    "SparseAngleWarning",
    "TruncationWarning",
    "NonclassicalityWitness",
    "WignerReconstructor",
    "SystemRecord",
    "feasibility",
    "feasibility_table",
    "ProtocolParams",
    "SymplecticTransform",
    "protocol_transform",
    "solve_pulse_conditions",
    "LegitimacyReport",
    "demarginalize_first",
    "demarginalize_second",
    "reconstruct_fictitious_operator",
    "witness_from_protocol",
    "witness_tomogram",
    "DensityOperator",
    "PhaseSpaceGrid",
    "QuasiDistribution",
    "Tomogram",
    "order_shift",
    "quasi_distribution",
    "NoiseChannel",
    "ReadoutConfig",
    "extract_mech_tomogram",
    "full_tomography",
    "naive_deconvolution",
    "TomogramSet",
    "inverse_radon",
    "radon",
    "radon_s",
]
