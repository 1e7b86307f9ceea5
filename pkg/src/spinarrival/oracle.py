"""Brute-force validators for the packet, current and arrival-time code.

None of these reuse the closed forms they check: divergences come from
central differences, the numeric current from differentiating the complex
amplitude, normalization from tensor Gauss-Hermite quadrature and the
reference mean arrival time from a Richardson-extrapolated trapezoid rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .arrival import DEGENERATE_FLOOR, ComponentSelector, Detector, arrival_density, mean_arrival
from .currents import (
    SPIN_UP_Z,
    CurrentSample,
    CurrentSource,
    closed_form_current,
    current_numeric,
    current_source,
)
from .packets import (
    AsymmetricPacket,
    Packet,
    PolarFields,
    SpaceTimePoint,
    SymmetricPacket,
)
from .quadrature import QuadratureConfig

FD_TOL = 1e-5
MEAN_TOL = 1e-4
SCALE_FLOOR = 1e-30


class TailNotNegligible(RuntimeError):
    """The reference grid's horizon cuts off a non-negligible part of the density."""


@dataclass(frozen=True)
class ResidualReport:
    name: str
    point: SpaceTimePoint
    residual: float
    scale: float
    tol: float
    floor: float = 0.0
    params: str = ""

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol * self.scale + self.floor

    @property
    def relative(self) -> float:
        return self.residual / self.scale if self.scale > 0 else self.residual

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        p = self.point
        where = f"pt=({float(p.x):.6g},{float(p.y):.6g},{float(p.z):.6g},{float(p.t):.6g})"
        return (
            f"{self.name} {self.params} {where} residual={self.residual:.3e} "
            f"scale={self.scale:.3e} {status}"
        ).replace("  ", " ")


def local_length(packet: Packet, t: float) -> float:
    """Smallest density width of ``packet`` at time ``t``."""
    return float(min(np.min(w) for w in packet.density_widths(t)))


def _fd_jacobian(field: Callable[[SpaceTimePoint], np.ndarray], pt: SpaceTimePoint, h) -> np.ndarray:
    """``jac[k, m] = d field_k / d x_m`` by central differences."""
    hs = np.broadcast_to(np.asarray(h, dtype=float), (3,))
    cols = []
    for m in range(3):
        plus = field(pt.shifted(m, hs[m]))
        minus = field(pt.shifted(m, -hs[m]))
        cols.append((plus - minus) / (2.0 * hs[m]))
    return np.stack(cols, axis=1)


def _default_space_step(pt: SpaceTimePoint):
    return [1e-6 * max(1.0, abs(float(c))) for c in (pt.x, pt.y, pt.z)]


def continuity_residual(
    polar_source: Callable[[SpaceTimePoint], PolarFields],
    current_source: CurrentSource,
    pt: SpaceTimePoint,
    h_space=None,
    h_time: Optional[float] = None,
    tol: float = FD_TOL,
) -> ResidualReport:
    """``|d rho/dt + div J|`` with the divergence from central differences.

    ``d rho/dt`` is the analytic value unless ``h_time`` is given, in which
    case it is also a central difference of ``rho``.
    """
    h = _default_space_step(pt) if h_space is None else h_space
    fields = polar_source(pt)
    if h_time is None:
        drho = float(fields.drho_dt)
    else:
        rp = polar_source(pt.shifted(3, h_time)).rho
        rm = polar_source(pt.shifted(3, -h_time)).rho
        drho = float((rp - rm) / (2.0 * h_time))
    jac = _fd_jacobian(lambda p: current_source(p).j, pt, h)
    div = float(np.trace(jac))
    residual = abs(drho + div)
    scale = max(abs(drho), abs(div), SCALE_FLOOR)
    return ResidualReport("continuity", pt, residual, scale, tol)


def spin_divergence(current_source: CurrentSource, pt: SpaceTimePoint, h=None, tol: float = FD_TOL) -> ResidualReport:
    """``|div J_s|`` by central differences.

    The scale is the Frobenius norm of the whole Jacobian of ``J_s``: the
    divergence cancels exactly only between terms of that size.
    """
    h = _default_space_step(pt) if h is None else h
    jac = _fd_jacobian(lambda p: current_source(p).j_s, pt, h)
    residual = abs(float(np.trace(jac)))
    scale = max(float(np.sqrt(np.sum(jac**2))), SCALE_FLOOR)
    return ResidualReport("spin_divergence", pt, residual, scale, tol)


COMPONENT_FLOOR = 1e-5


def _relative_deviation(closed: CurrentSample, numeric: CurrentSample) -> float:
    """Componentwise relative gap over j_i and j_s.

    Components smaller than ``COMPONENT_FLOOR * |J|`` (exact zeros included)
    are measured against that floor: central differences of psi only resolve
    them to an absolute accuracy of roughly eps/h times the current scale.
    """
    size = float(np.max(_norm(closed.j)))
    floor = max(COMPONENT_FLOOR * size, 1e-300)
    worst = 0.0
    for a, b in ((closed.j_i, numeric.j_i), (closed.j_s, numeric.j_s)):
        dev = np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(np.abs(a), floor)
        worst = max(worst, float(np.max(dev)))
    return worst


def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(v) ** 2, axis=0))


def closed_vs_numeric(
    packet: Packet,
    pt: SpaceTimePoint,
    h: float = 1e-6,
    tol: float = FD_TOL,
    closed: Optional[CurrentSource] = None,
) -> ResidualReport:
    """Largest componentwise relative deviation between the closed-form
    current and the current differentiated numerically from psi."""
    closed = closed or (lambda p: closed_form_current(packet, p))
    c = closed(pt)
    n = current_numeric(packet.psi, SPIN_UP_Z, pt, h)
    if float(c.rho) == 0.0 and float(n.rho) == 0.0:
        return ResidualReport("closed_vs_numeric", pt, 0.0, 1.0, tol, params=_params(packet))
    dev = _relative_deviation(c, n)
    return ResidualReport("closed_vs_numeric", pt, dev, 1.0, tol, params=f"{_params(packet)} h={h:g}")


def numeric_current_error(packet: Packet, pt: SpaceTimePoint, h: float) -> float:
    """``max |J_closed - J_numeric| / |J_closed|`` over all six components."""
    c = closed_form_current(packet, pt)
    n = current_numeric(packet.psi, SPIN_UP_Z, pt, h)
    diff = max(float(np.max(np.abs(c.j_i - n.j_i))), float(np.max(np.abs(c.j_s - n.j_s))))
    return diff / float(np.max(_norm(c.j)))


def numeric_current_order(packet: Packet, pt: SpaceTimePoint, rel_step: float = 0.02) -> float:
    """Observed convergence order of the numeric current under step halving.

    Starts from ``rel_step`` times the shorter of the density width and the
    local phase wavelength 1/|grad S|, where truncation error dominates
    roundoff.
    """
    scale = max(1.0, abs(float(pt.x)), abs(float(pt.y)), abs(float(pt.z)))
    k = float(_norm(packet.polar_fields(pt).grad_S))
    length = local_length(packet, float(pt.t))
    if k > 0:
        length = min(length, 1.0 / k)
    h0 = rel_step * length / scale
    return observed_order(lambda h: numeric_current_error(packet, pt, h), h0)


def observed_order(error_at: Callable[[float], float], h: float, halvings: int = 2) -> float:
    """Convergence order from step halving, ``log2(err(h) / err(h/2))``, taking the smallest over
    ``halvings`` successive ratios."""
    errs = [error_at(h / 2**k) for k in range(halvings + 1)]
    orders = [math.log2(errs[k] / errs[k + 1]) for k in range(halvings)]
    return min(orders)


def _params(packet: Packet) -> str:
    if isinstance(packet, SymmetricPacket):
        return f"symmetric(sigma0={packet.sigma0:.4g},u={packet.u:.4g})"
    return (
        f"asymmetric(a={packet.a:.4g},b={packet.b:.4g},c={packet.c:.4g},"
        f"x1={packet.x1:.4g},u={packet.u:.4g})"
    )


def reduction_residual(sigma0: float, u: float, pt: SpaceTimePoint) -> float:
    """Largest relative gap between the symmetric packet and the asymmetric one with
    a = b = c = sqrt(2) sigma0, x1 = 0 (density and all current components)."""
    sym = SymmetricPacket(sigma0, u)
    w = math.sqrt(2.0) * sigma0
    asym = AsymmetricPacket(w, w, w, 0.0, u)
    cs = closed_form_current(sym, pt)
    ca = closed_form_current(asym, pt)
    pairs = [(cs.rho, ca.rho)] + [(cs.j_i, ca.j_i), (cs.j_s, ca.j_s)]
    worst = 0.0
    for a, b in pairs:
        a, b = np.ravel(a), np.ravel(b)
        size = float(np.max(np.abs(a))) if a.size else 0.0
        if size == 0.0:
            worst = max(worst, float(np.max(np.abs(b))) if b.size else 0.0)
            continue
        denom = np.maximum(np.abs(a), 1e-12 * size)
        worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    return worst


def normalization(packet: Packet, t: float, n_nodes: int = 24) -> float:
    """Total probability at time ``t`` by tensor-product Gauss-Hermite quadrature."""
    xi, wi = hermgauss(n_nodes)
    center = packet.center(t)
    widths = packet.density_widths(t)
    axes = []
    weights = []
    for c, w in zip(center, widths):
        s = math.sqrt(2.0) * float(w)
        axes.append(float(c) + s * xi)
        weights.append(s * wi * np.exp(xi**2))
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    W = weights[0][:, None, None] * weights[1][None, :, None] * weights[2][None, None, :]
    rho = packet.polar_fields(SpaceTimePoint(X, Y, Z, np.full_like(X, t))).rho
    return float(np.sum(W * rho))


# ---- reference mean arrival time -------------------------------------------


def _trapezoid(g: np.ndarray, ds: float) -> np.ndarray:
    return ds * (np.sum(g, axis=-1) - 0.5 * (g[..., 0] + g[..., -1]))


def reference_moments(
    density: Callable[[np.ndarray], np.ndarray],
    grid_n: int,
    t_max: float,
    t_scale: float,
    tail_check: bool = True,
) -> Tuple[float, float]:
    """``(int Pi dt, int t Pi dt)`` over ``[0, t_max]``.

    Composite trapezoid in ``s`` with ``t = t_scale * sinh(s)``, so the grid is
    uniform near the origin and geometric at large ``t``.  Results on ``grid_n``
    and ``2 grid_n`` panels are Richardson-combined.  With ``tail_check`` the
    octave ``[t_max, 2 t_max]`` must carry less than 1e-10 of the mass.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    s_max = math.asinh(t_max / t_scale)

    def trap(n):
        s = np.linspace(0.0, s_max, n + 1)
        t = t_scale * np.sinh(s)
        jac = t_scale * np.cosh(s)
        pi = density(t) * jac
        return _trapezoid(np.stack([pi, t * pi]), s_max / n)

    coarse = trap(grid_n)
    fine = trap(2 * grid_n)
    m0, m1 = (4.0 * fine - coarse) / 3.0
    if tail_check:
        tt = np.linspace(t_max, 2.0 * t_max, 4097)
        tail = _trapezoid(density(tt), tt[1] - tt[0])
        if tail > 1e-10 * m0:
            raise TailNotNegligible(
                f"mass in [{t_max:g}, {2 * t_max:g}] is {tail / m0:.2e} of the total"
            )
    return float(m0), float(m1)


def peak_time(density: Callable[[np.ndarray], np.ndarray], t_lo: float = 1e-6, t_hi: float = 1e6) -> float:
    """Location of the largest ``t * Pi(t)`` on a coarse geometric scan; used as the
    sinh-grid scale."""
    t = np.geomspace(t_lo, t_hi, 2401)
    vals = t * density(t)
    if not np.any(vals > 0):
        return 1.0
    return float(t[int(np.argmax(vals))])


def reference_mean(
    source: CurrentSource,
    det: Detector,
    sel: ComponentSelector,
    grid_n: int = 1 << 14,
    t_max: float = 1e6,
    t_scale: Optional[float] = None,
) -> float:
    """Mean arrival time from the dense sinh-mapped trapezoid rule."""

    def density(t):
        return arrival_density(source, det, t, sel)

    scale = peak_time(density) if t_scale is None else t_scale
    m0, m1 = reference_moments(density, grid_n, t_max, scale)
    if not m0 > DEGENERATE_FLOOR:
        raise ValueError("reference density integrates to zero")
    return m1 / m0


# ---- randomized configurations and suites ----------------------------------


def random_configurations(seed: int = 20240601, n: int = 200) -> List[Tuple[Packet, SpaceTimePoint]]:
    """``n`` (packet, point) pairs, alternating between the two families.

    Points are drawn within about two density widths of the packet centre at
    a time in [0, 2], so the density is never vanishingly small.
    """
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        if k % 2 == 0:
            packet: Packet = SymmetricPacket(
                sigma0=float(10 ** rng.uniform(-2, 0)), u=float(rng.uniform(0.0, 10.0))
            )
        else:
            a, b, c = (float(v) for v in 10 ** rng.uniform(-3, 0, size=3))
            packet = AsymmetricPacket(
                a, b, c, x1=float(rng.uniform(-1.0, 1.0)), u=float(rng.uniform(0.0, 10.0))
            )
        t = float(rng.uniform(0.0, 2.0))
        center = packet.center(t)
        widths = packet.density_widths(t)
        offs = rng.uniform(-2.0, 2.0, size=3)
        coords = [float(c) + float(o) * float(w) for c, o, w in zip(center, offs, widths)]
        out.append((packet, SpaceTimePoint(coords[0], coords[1], coords[2], t)))
    return out


def fd_step(packet: Packet, t: float, rel: float = 1e-4) -> float:
    """Central-difference step for divergence checks: a fixed fraction of the local width."""
    return rel * local_length(packet, t)


def _closed(packet: Packet, closed_for) -> CurrentSource:
    if closed_for is not None:
        return closed_for(packet)
    return lambda p: closed_form_current(packet, p)


def continuity_suite(configs, tol: float = FD_TOL, closed_for=None) -> List[ResidualReport]:
    reports = []
    for packet, pt in configs:
        r = continuity_residual(
            packet.polar_fields,
            _closed(packet, closed_for),
            pt,
            h_space=fd_step(packet, float(pt.t)),
            tol=tol,
        )
        reports.append(ResidualReport(r.name, pt, r.residual, r.scale, tol, params=_params(packet)))
    return reports


def spin_divergence_suite(configs, tol: float = FD_TOL, closed_for=None) -> List[ResidualReport]:
    reports = []
    for packet, pt in configs:
        r = spin_divergence(_closed(packet, closed_for), pt, fd_step(packet, float(pt.t)), tol)
        reports.append(ResidualReport(r.name, pt, r.residual, r.scale, tol, params=_params(packet)))
    return reports


def closed_vs_numeric_cases() -> List[Tuple[Packet, SpaceTimePoint]]:
    """Parameter sets checked against the numeric-differentiation current."""
    return [
        (SymmetricPacket(0.01, 1.0), SpaceTimePoint(1.0, 1.0, 1.0, 1.0)),
        (SymmetricPacket(0.01, 5.0), SpaceTimePoint(1.0, 0.0, 0.0, 0.2)),
        (SymmetricPacket(0.1, 1.0), SpaceTimePoint(0.2, 0.1, -0.05, 0.3)),
        (AsymmetricPacket(0.001, 0.4, 0.01, 0.0, 2.0), SpaceTimePoint(1.0, 2.0, 1.0, 0.4)),
        (AsymmetricPacket(0.001, 0.4, 0.01, 0.0, 3.0), SpaceTimePoint(1.0, 2.0, 1.0, 0.5)),
        (AsymmetricPacket(0.5, 0.3, 0.7, 0.25, 1.5), SpaceTimePoint(0.3, -0.2, 0.4, 0.6)),
    ]


def closed_vs_numeric_suite(h: float = 1e-6, closed_for=None, tol: float = FD_TOL) -> List[ResidualReport]:
    reports = []
    for packet, pt in closed_vs_numeric_cases():
        reports.append(closed_vs_numeric(packet, pt, h, tol, _closed(packet, closed_for)))
    return reports


def order_suite(min_order: float = 1.9) -> List[ResidualReport]:
    """Observed order of the numeric current; passes when order >= ``min_order``.

    Reported as ``residual = max(0, min_order - order)`` against a zero
    tolerance, so the report line carries the shortfall.
    """
    reports = []
    for packet, pt in closed_vs_numeric_cases():
        order = numeric_current_order(packet, pt)
        reports.append(
            ResidualReport(
                "numeric_current_order", pt, max(0.0, min_order - order), 1.0, 0.0,
                params=f"{_params(packet)} order={order:.4f}",
            )
        )
    return reports


def reduction_suite(seed: int = 7, n: int = 100, tol: float = 1e-10) -> List[ResidualReport]:
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(n):
        sigma0 = float(10 ** rng.uniform(-2, 0))
        u = float(rng.uniform(0.0, 10.0))
        t = float(rng.uniform(0.0, 2.0))
        sig = sigma0 * math.sqrt(1.0 + t**2 / (4.0 * sigma0**4))
        xyz = rng.uniform(-2.0, 2.0, size=3) * sig + np.array([u * t, 0.0, 0.0])
        pt = SpaceTimePoint(*(float(v) for v in xyz), t)
        reports.append(
            ResidualReport(
                "reduction", pt, reduction_residual(sigma0, u, pt), 1.0, tol,
                params=f"sigma0={sigma0:.4g},u={u:.4g}",
            )
        )
    return reports


def normalization_suite(tol: float = 1e-8) -> List[ResidualReport]:
    packets = [
        SymmetricPacket(0.01, 1.0),
        SymmetricPacket(0.5, 3.0),
        AsymmetricPacket(0.001, 0.4, 0.01, 0.0, 3.0),
        AsymmetricPacket(0.7, 0.2, 1.3, -0.5, 1.0),
    ]
    reports = []
    for packet in packets:
        for t in (0.0, 0.5, 2.0):
            total = normalization(packet, t)
            reports.append(
                ResidualReport(
                    "normalization", SpaceTimePoint(0.0, 0.0, 0.0, t), abs(total - 1.0), 1.0, tol,
                    params=_params(packet),
                )
            )
    return reports


def mean_arrival_cases(seed: int = 11) -> List[Tuple[Packet, Detector, ComponentSelector]]:
    """Ten configurations: both figure presets at u = 1, 3, 8 plus one seeded
    random symmetric packet."""
    cases: List[Tuple[Packet, Detector, ComponentSelector]] = []
    for u in (1.0, 3.0, 8.0):
        cases.append((SymmetricPacket(0.01, u), Detector((1.0, 1.0, 1.0)), ComponentSelector.SPIN_ONLY))
    for u in (1.0, 3.0, 8.0):
        packet = AsymmetricPacket(0.001, 0.4, 0.01, 0.0, u)
        cases.append((packet, Detector((1.0, 2.0, 1.0)), ComponentSelector.TOTAL))
        cases.append((packet, Detector((1.0, 2.0, 1.0)), ComponentSelector.SPIN_INDEPENDENT))
    rng = np.random.default_rng(seed)
    packet = SymmetricPacket(float(10 ** rng.uniform(-2, 0)), float(rng.uniform(0.5, 10.0)))
    det = Detector(tuple(float(v) for v in rng.uniform(0.2, 2.0, size=3)))
    cases.append((packet, det, ComponentSelector.TOTAL))
    return cases


def mean_arrival_suite(cfg=None, tol: float = MEAN_TOL) -> List[ResidualReport]:
    cfg = cfg or QuadratureConfig()
    reports = []
    for packet, det, sel in mean_arrival_cases():
        source = current_source(packet)
        tau, _ = mean_arrival(source, det, sel, cfg)
        ref = reference_mean(source, det, sel)
        reports.append(
            ResidualReport(
                "mean_arrival_vs_reference", det.at(0.0), abs(tau - ref), abs(ref), tol,
                params=f"{_params(packet)} det=({','.join(f'{v:g}' for v in det.X)}) {sel.value} tau={tau:.10g} ref={ref:.10g}",
            )
        )
    return reports


def validation_reports(tier: str = "fast", closed_for=None, seed: int = 20240601) -> List[ResidualReport]:
    """All invariant suites; the slow tier adds the reference mean cross-checks.

    ``closed_for`` replaces the closed-form current (packet -> source); used
    to check that the suites catch a corrupted implementation.
    """
    if tier not in ("fast", "slow"):
        raise ValueError(f"tier must be 'fast' or 'slow', got {tier!r}")
    configs = random_configurations(seed)
    reports = []
    reports += continuity_suite(configs, closed_for=closed_for)
    reports += spin_divergence_suite(configs, closed_for=closed_for)
    reports += closed_vs_numeric_suite(closed_for=closed_for)
    reports += order_suite()
    reports += reduction_suite()
    reports += normalization_suite()
    if tier == "slow":
        reports += mean_arrival_suite()
    return reports
