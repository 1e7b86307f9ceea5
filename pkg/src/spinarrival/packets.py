"""Analytic free Gaussian wave packets and their polar decomposition.

Everything here is in natural units (hbar = m = 1).  To convert a result to
SI, measure lengths in some unit ``L``; times are then in units of
``m L**2 / hbar`` and velocities in ``hbar / (m L)``.

Two families are provided:

``SymmetricPacket``
    isotropic packet of spread ``sigma0`` centred at the origin, moving
    along +x with group velocity ``u``.
``AsymmetricPacket``
    product of three Gaussians with spreads ``a, b, c`` centred at
    ``(-x1, 0, 0)``, moving along +x with group velocity ``u``.

All evaluators accept scalars or numpy arrays (broadcast against each
other) and work from the log-density, so far from the packet the density
underflows cleanly to 0 instead of producing NaN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class SpaceTimePoint:
    """A position ``(x, y, z)`` at time ``t``; fields may be arrays."""

    x: ArrayLike
    y: ArrayLike
    z: ArrayLike
    t: ArrayLike

    def shifted(self, axis: int, h: float) -> "SpaceTimePoint":
        """Copy with coordinate ``axis`` (0=x, 1=y, 2=z, 3=t) moved by ``h``."""
        coords = [self.x, self.y, self.z, self.t]
        coords[axis] = coords[axis] + h
        return SpaceTimePoint(*coords)

    def coords(self) -> tuple:
        return (self.x, self.y, self.z, self.t)


@dataclass(frozen=True)
class PolarFields:
    """Density and gradients of the polar form psi = R exp(iS).

    ``grad_rho`` and ``grad_S`` have a leading axis of length 3.
    ``S`` is the full phase, including the spatially constant part.
    """

    rho: np.ndarray
    grad_rho: np.ndarray
    grad_S: np.ndarray
    drho_dt: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class ComplexAmplitude:
    re: np.ndarray
    im: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return self.re + 1j * self.im

    @property
    def modulus_squared(self) -> np.ndarray:
        return self.re**2 + self.im**2


@dataclass(frozen=True)
class SymmetricPacket:
    """Isotropic Gaussian packet, spread ``sigma0``, group velocity ``u`` along +x."""

    sigma0: float
    u: float = 0.0

    def __post_init__(self):
        if not (self.sigma0 > 0 and math.isfinite(self.sigma0)):
            raise ValueError(f"sigma0 must be a positive finite number, got {self.sigma0}")
        if not math.isfinite(self.u):
            raise ValueError(f"u must be finite, got {self.u}")

    def polar_fields(self, pt: SpaceTimePoint) -> PolarFields:
        return polar_fields_symmetric(self, pt)

    def psi(self, pt: SpaceTimePoint) -> ComplexAmplitude:
        return psi_symmetric(self, pt)

    def center(self, t: ArrayLike) -> tuple:
        return (self.u * np.asarray(t, dtype=float), 0.0, 0.0)

    def density_widths(self, t: ArrayLike) -> tuple:
        """Standard deviations of rho along x, y, z at time ``t``."""
        s = sigma_of_t(self, t)
        return (s, s, s)


@dataclass(frozen=True)
class AsymmetricPacket:
    """Product-Gaussian packet with axis spreads ``a, b, c`` released at x = -x1."""

    a: float
    b: float
    c: float
    x1: float = 0.0
    u: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite number, got {v}")
        if not (math.isfinite(self.x1) and math.isfinite(self.u)):
            raise ValueError("x1 and u must be finite")

    def polar_fields(self, pt: SpaceTimePoint) -> PolarFields:
        return polar_fields_asymmetric(self, pt)

    def psi(self, pt: SpaceTimePoint) -> ComplexAmplitude:
        return psi_asymmetric(self, pt)

    def center(self, t: ArrayLike) -> tuple:
        return (-self.x1 + self.u * np.asarray(t, dtype=float), 0.0, 0.0)

    def density_widths(self, t: ArrayLike) -> tuple:
        t = np.asarray(t, dtype=float)
        return tuple(
            np.sqrt((s**4 + t**2) / (2.0 * s**2)) for s in (self.a, self.b, self.c)
        )


Packet = Union[SymmetricPacket, AsymmetricPacket]


def _arrays(pt: SpaceTimePoint):
    return np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in pt.coords()))


def sigma_of_t(packet: SymmetricPacket, t: ArrayLike) -> ArrayLike:
    """Spread of the symmetric packet at time ``t``: sigma0*sqrt(1 + t^2/(4 sigma0^4))."""
    s0 = packet.sigma0
    return s0 * np.sqrt(1.0 + np.square(t) / (4.0 * s0**4))


def _symmetric_parts(packet: SymmetricPacket, pt: SpaceTimePoint):
    x, y, z, t = _arrays(pt)
    s0, u = packet.sigma0, packet.u
    sig2 = s0**2 + t**2 / (4.0 * s0**2)
    d = x - u * t
    r2 = d**2 + y**2 + z**2
    log_rho = -1.5 * np.log(2.0 * np.pi * sig2) - r2 / (2.0 * sig2)
    phase = (
        -1.5 * np.arctan(t / (2.0 * s0**2))
        + u * (x - 0.5 * u * t)
        + r2 * t / (8.0 * s0**2 * sig2)
    )
    return x, y, z, t, sig2, d, r2, log_rho, phase


def polar_fields_symmetric(packet: SymmetricPacket, pt: SpaceTimePoint) -> PolarFields:
    """Closed-form rho, grad rho, grad S and d(rho)/dt for the symmetric packet."""
    x, y, z, t, sig2, d, r2, log_rho, phase = _symmetric_parts(packet, pt)
    s0, u = packet.sigma0, packet.u
    rho = np.exp(log_rho)
    grad_rho = np.stack([-rho * d / sig2, -rho * y / sig2, -rho * z / sig2])
    k = t / (4.0 * s0**2 * sig2)
    grad_S = np.stack([u + d * k, y * k, z * k])
    dsig2 = t / (2.0 * s0**2)
    drho_dt = rho * (-1.5 * dsig2 / sig2 + u * d / sig2 + r2 * dsig2 / (2.0 * sig2**2))
    return PolarFields(rho, grad_rho, grad_S, drho_dt, phase)


def psi_symmetric(packet: SymmetricPacket, pt: SpaceTimePoint) -> ComplexAmplitude:
    """R exp(iS) for the symmetric packet."""
    *_, log_rho, phase = _symmetric_parts(packet, pt)
    amp = np.exp(0.5 * log_rho)
    return ComplexAmplitude(amp * np.cos(phase), amp * np.sin(phase))


def pq_factors(packet: AsymmetricPacket, t: ArrayLike) -> tuple:
    """Real and imaginary parts of (a^2 + it)(b^2 + it)(c^2 + it)."""
    a2, b2, c2 = packet.a**2, packet.b**2, packet.c**2
    t = np.asarray(t, dtype=float)
    p = a2 * b2 * c2 - (a2 + b2 + c2) * t**2
    q = (a2 * b2 + a2 * c2 + b2 * c2) * t - t**3
    return p, q


def _asymmetric_parts(packet: AsymmetricPacket, pt: SpaceTimePoint):
    x, y, z, t = _arrays(pt)
    a2, b2, c2 = packet.a**2, packet.b**2, packet.c**2
    u = packet.u
    big_a, big_b, big_c = a2**2 + t**2, b2**2 + t**2, c2**2 + t**2
    xs = x + packet.x1 - u * t
    # (p^2 + q^2)^(1/2) == A*B*C^(1/2); the product form avoids cancellation in p, q.
    log_rho = (
        0.5 * math.log(a2 * b2 * c2 / math.pi**3)
        - 0.5 * (np.log(big_a) + np.log(big_b) + np.log(big_c))
        - a2 * xs**2 / big_a
        - b2 * y**2 / big_b
        - c2 * z**2 / big_c
    )
    # Constant phase of 1/(alpha beta gamma) with principal square roots; equals
    # -arctan(q/p)/2 up to the branch of the arctangent.
    const_phase = -0.5 * (np.arctan(t / a2) + np.arctan(t / b2) + np.arctan(t / c2))
    phase = (
        u * x
        - 0.5 * u**2 * t
        + const_phase
        + t * xs**2 / (2.0 * big_a)
        + t * y**2 / (2.0 * big_b)
        + t * z**2 / (2.0 * big_c)
    )
    return x, y, z, t, big_a, big_b, big_c, xs, log_rho, phase


def polar_fields_asymmetric(packet: AsymmetricPacket, pt: SpaceTimePoint) -> PolarFields:
    """Closed-form rho, grad rho, grad S and d(rho)/dt for the asymmetric packet."""
    x, y, z, t, big_a, big_b, big_c, xs, log_rho, phase = _asymmetric_parts(packet, pt)
    a2, b2, c2 = packet.a**2, packet.b**2, packet.c**2
    u = packet.u
    rho = np.exp(log_rho)
    grad_rho = np.stack(
        [
            -2.0 * a2 * xs / big_a * rho,
            -2.0 * b2 * y / big_b * rho,
            -2.0 * c2 * z / big_c * rho,
        ]
    )
    grad_S = np.stack([u + t * xs / big_a, t * y / big_b, t * z / big_c])
    dlog = (
        -t / big_a
        - t / big_b
        - t / big_c
        + 2.0 * a2 * xs * u / big_a
        + 2.0 * t * a2 * xs**2 / big_a**2
        + 2.0 * t * b2 * y**2 / big_b**2
        + 2.0 * t * c2 * z**2 / big_c**2
    )
    return PolarFields(rho, grad_rho, grad_S, rho * dlog, phase)


def psi_asymmetric(packet: AsymmetricPacket, pt: SpaceTimePoint) -> ComplexAmplitude:
    """Direct complex evaluation of the evolved asymmetric packet.

    Uses principal square roots for alpha, beta, gamma; independent of the
    polar closed forms above.
    """
    x, y, z, t = _arrays(pt)
    a2, b2, c2 = packet.a**2, packet.b**2, packet.c**2
    k = packet.u
    alpha2 = a2 + 1j * t
    beta2 = b2 + 1j * t
    gamma2 = c2 + 1j * t
    norm = (a2 * b2 * c2 / math.pi**3) ** 0.25
    expo = (
        1j * (k * x - 0.5 * k**2 * t)
        - (x + packet.x1 - k * t) ** 2 / (2.0 * alpha2)
        - y**2 / (2.0 * beta2)
        - z**2 / (2.0 * gamma2)
    )
    val = norm * np.exp(expo) / (np.sqrt(alpha2) * np.sqrt(beta2) * np.sqrt(gamma2))
    return ComplexAmplitude(np.real(val), np.imag(val))
