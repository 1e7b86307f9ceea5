"""Mean arrival times at a point detector.

The arrival density at detector ``X`` is the Euclidean norm of a current
component, ``Pi(t) = |J(X, t)|``, and the mean arrival time is its first
moment ``int t Pi dt / int Pi dt`` over ``[0, inf)``.  Three components are
available: the total current (``tau``), the convective current alone
(``tau_i``) and the spin current alone (``tau_s``).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from .currents import CurrentSample, CurrentSource
from .packets import SpaceTimePoint
from .quadrature import IntegralResult, QuadratureConfig, integrate_semi_infinite

DEGENERATE_FLOOR = 1e-30


class DegenerateDistribution(ValueError):
    """The arrival density integrates to (numerically) nothing at this detector."""


class ComponentSelector(enum.Enum):
    TOTAL = "tau"
    SPIN_INDEPENDENT = "tau_i"
    SPIN_ONLY = "tau_s"

    def pick(self, sample: CurrentSample) -> np.ndarray:
        if self is ComponentSelector.TOTAL:
            return sample.j
        if self is ComponentSelector.SPIN_INDEPENDENT:
            return sample.j_i
        return sample.j_s

    @classmethod
    def from_name(cls, name: str) -> "ComponentSelector":
        for sel in cls:
            if name in (sel.value, sel.name, sel.name.lower()):
                return sel
        raise ValueError(f"unknown component {name!r}; expected one of tau, tau_i, tau_s")


ALL_SELECTORS = (
    ComponentSelector.TOTAL,
    ComponentSelector.SPIN_INDEPENDENT,
    ComponentSelector.SPIN_ONLY,
)


@dataclass(frozen=True)
class Detector:
    X: Tuple[float, float, float]

    def __post_init__(self):
        X = tuple(float(v) for v in self.X)
        if len(X) != 3 or not all(math.isfinite(v) for v in X):
            raise ValueError(f"detector position must be three finite numbers, got {self.X}")
        object.__setattr__(self, "X", X)

    def at(self, t) -> SpaceTimePoint:
        x, y, z = self.X
        return SpaceTimePoint(x, y, z, t)


@dataclass(frozen=True)
class ArrivalDiagnostics:
    norm: IntegralResult
    moment: IntegralResult


@dataclass(frozen=True)
class ArrivalSummary:
    """Mean arrival times and their normalizations.

    Components that were not requested, or whose norm fell below
    ``DEGENERATE_FLOOR``, carry ``nan``; the latter are listed in
    ``degenerate``.
    """

    tau: float
    tau_i: float
    tau_s: float
    norm: float
    norm_i: float
    norm_s: float
    diagnostics: Dict[ComponentSelector, ArrivalDiagnostics] = field(default_factory=dict)
    degenerate: Tuple[ComponentSelector, ...] = ()

    @property
    def t_max_used(self) -> float:
        return max((d.norm.t_max_used for d in self.diagnostics.values()), default=math.nan)


def _norm3(v: np.ndarray) -> np.ndarray:
    return np.hypot(np.hypot(v[0], v[1]), v[2])


def arrival_density(source: CurrentSource, det: Detector, t, sel: ComponentSelector) -> np.ndarray:
    """``|J_sel(X, t)|``; vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("arrival densities are defined for t >= 0 only")
    return _norm3(sel.pick(source(det.at(t))))


def _moment_integrand(source: CurrentSource, det: Detector, selectors: Sequence[ComponentSelector]):
    def f(t):
        sample = source(det.at(t))
        rows = []
        for sel in selectors:
            dens = _norm3(sel.pick(sample))
            rows.append(dens)
            rows.append(t * dens)
        return np.stack(rows)

    return f


def mean_arrival(
    source: CurrentSource,
    det: Detector,
    sel: ComponentSelector = ComponentSelector.TOTAL,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> Tuple[float, ArrivalDiagnostics]:
    """Mean arrival time for one current component.

    Numerator and denominator are integrated together, so they share one
    truncation horizon.
    """
    res = integrate_semi_infinite(_moment_integrand(source, det, [sel]), cfg)
    diag = ArrivalDiagnostics(res.component(0), res.component(1))
    if not diag.norm.value > DEGENERATE_FLOOR:
        raise DegenerateDistribution(
            f"{sel.value}: arrival density integrates to {diag.norm.value:.3e} at {det.X}"
        )
    return diag.moment.value / diag.norm.value, diag


def arrival_summary(
    source: CurrentSource,
    det: Detector,
    cfg: QuadratureConfig = QuadratureConfig(),
    selectors: Iterable[ComponentSelector] = ALL_SELECTORS,
) -> ArrivalSummary:
    """All requested mean arrival times from one shared set of samples.

    Raises :class:`DegenerateDistribution` only if every requested
    component is degenerate; a single vanishing component (e.g. the spin
    current on the packet's axis) is reported through ``degenerate``.
    """
    selectors = tuple(selectors)
    res = integrate_semi_infinite(_moment_integrand(source, det, selectors), cfg)
    out = {s.value: math.nan for s in ALL_SELECTORS}
    norms = {s.value: math.nan for s in ALL_SELECTORS}
    diagnostics = {}
    degenerate = []
    for k, sel in enumerate(selectors):
        diag = ArrivalDiagnostics(res.component(2 * k), res.component(2 * k + 1))
        diagnostics[sel] = diag
        norms[sel.value] = diag.norm.value
        if diag.norm.value > DEGENERATE_FLOOR:
            out[sel.value] = diag.moment.value / diag.norm.value
        else:
            degenerate.append(sel)
    if selectors and len(degenerate) == len(selectors):
        raise DegenerateDistribution(f"no requested component reaches the detector at {det.X}")
    return ArrivalSummary(
        tau=out["tau"],
        tau_i=out["tau_i"],
        tau_s=out["tau_s"],
        norm=norms["tau"],
        norm_i=norms["tau_i"],
        norm_s=norms["tau_s"],
        diagnostics=diagnostics,
        degenerate=tuple(degenerate),
    )


def delayed_source(source: CurrentSource, delay: float) -> CurrentSource:
    """Current of the same packet released ``delay`` later (zero before release)."""

    def shifted(pt: SpaceTimePoint) -> CurrentSample:
        t = np.asarray(pt.t, dtype=float)
        t_rel = np.maximum(t - delay, 0.0)
        sample = source(SpaceTimePoint(pt.x, pt.y, pt.z, t_rel))
        live = t >= delay
        return CurrentSample(
            np.where(live, sample.j_i, 0.0),
            np.where(live, sample.j_s, 0.0),
            np.where(live, sample.rho, 0.0),
        )

    return shifted
