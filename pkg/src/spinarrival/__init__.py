"""Spin-dependent mean arrival times of free spin-1/2 Gaussian wave packets."""
from .arrival import (
    ArrivalSummary,
    ComponentSelector,
    DegenerateDistribution,
    Detector,
    arrival_density,
    arrival_summary,
    mean_arrival,
)
from .currents import (
    CurrentSample,
    SpinVector,
    current_asymmetric,
    current_from_polar,
    current_numeric,
    current_source,
    current_symmetric,
)
from .packets import (
    AsymmetricPacket,
    ComplexAmplitude,
    PolarFields,
    SpaceTimePoint,
    SymmetricPacket,
    polar_fields_asymmetric,
    polar_fields_symmetric,
    pq_factors,
    psi_asymmetric,
    psi_symmetric,
    sigma_of_t,
)
from .quadrature import IntegralResult, QuadratureConfig, integrate_semi_infinite

__all__ = [
    "ArrivalSummary",
    "AsymmetricPacket",
    "ComplexAmplitude",
    "ComponentSelector",
    "CurrentSample",
    "DegenerateDistribution",
    "Detector",
    "IntegralResult",
    "PolarFields",
    "QuadratureConfig",
    "SpaceTimePoint",
    "SpinVector",
    "SymmetricPacket",
    "arrival_density",
    "arrival_summary",
    "current_asymmetric",
    "current_from_polar",
    "current_numeric",
    "current_source",
    "current_symmetric",
    "integrate_semi_infinite",
    "mean_arrival",
    "polar_fields_asymmetric",
    "polar_fields_symmetric",
    "pq_factors",
    "psi_asymmetric",
    "psi_symmetric",
    "sigma_of_t",
]

__version__ = "0.1.0"
