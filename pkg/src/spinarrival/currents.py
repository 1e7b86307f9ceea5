"""Spin-decomposed probability current of the non-relativistic Dirac limit.

The current splits as ``J = J_i + J_s`` with the convective part
``J_i = rho grad(S)`` and the spin part ``J_s = grad(rho) x s`` (hbar = m = 1).
Three routes are offered:

* closed forms for the two packet families with spin +z/2
  (:func:`current_symmetric`, :func:`current_asymmetric`),
* the generic polar-field formula for any spin direction
  (:func:`current_from_polar`),
* central differences of a complex amplitude (:func:`current_numeric`),
  kept as an independent oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .packets import (
    AsymmetricPacket,
    ComplexAmplitude,
    Packet,
    PolarFields,
    SpaceTimePoint,
    SymmetricPacket,
    polar_fields_asymmetric,
    polar_fields_symmetric,
    sigma_of_t,
)

SPIN_MAGNITUDE = 0.5


class DegenerateStepError(ValueError):
    """Finite-difference step vanishes relative to the coordinate it perturbs."""


@dataclass(frozen=True)
class SpinVector:
    """Fixed spin vector ``s = (1/2) chi^dagger sigma chi``; |s| must be 1/2."""

    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        mag = math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)
        if abs(mag - SPIN_MAGNITUDE) > 1e-12:
            raise ValueError(f"spin vector must have magnitude 1/2, got {mag!r}")

    @classmethod
    def along(cls, direction: Sequence[float]) -> "SpinVector":
        """Spin of magnitude 1/2 pointing along ``direction``."""
        d = np.asarray(direction, dtype=float)
        n = float(np.linalg.norm(d))
        if n == 0.0 or not math.isfinite(n):
            raise ValueError("spin direction must be a finite non-zero vector")
        d = d * (SPIN_MAGNITUDE / n)
        return cls(*(float(v) for v in d))

    @classmethod
    def up(cls) -> "SpinVector":
        return cls(0.0, 0.0, SPIN_MAGNITUDE)

    def __neg__(self) -> "SpinVector":
        return SpinVector(-self.sx, -self.sy, -self.sz)

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])


SPIN_UP_Z = SpinVector.up()


@dataclass(frozen=True)
class CurrentSample:
    """Convective part ``j_i``, spin part ``j_s``, total ``j`` and density.

    Vector fields have a leading axis of length 3; ``j`` is always
    ``j_i + j_s``.
    """

    j_i: np.ndarray
    j_s: np.ndarray
    rho: np.ndarray
    j: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "j", self.j_i + self.j_s)

    def scaled(self, factor: float) -> "CurrentSample":
        return CurrentSample(self.j_i * factor, self.j_s * factor, self.rho * factor)


CurrentSource = Callable[[SpaceTimePoint], CurrentSample]


def _cross_with_spin(v: np.ndarray, spin: SpinVector) -> np.ndarray:
    sx, sy, sz = spin.sx, spin.sy, spin.sz
    return np.stack(
        [v[1] * sz - v[2] * sy, v[2] * sx - v[0] * sz, v[0] * sy - v[1] * sx]
    )


def current_from_polar(fields: PolarFields, spin: SpinVector = SPIN_UP_Z) -> CurrentSample:
    """``j_i = rho grad S``, ``j_s = grad rho x s`` for any spin direction."""
    rho = np.asarray(fields.rho)
    j_i = rho * fields.grad_S
    j_s = _cross_with_spin(fields.grad_rho, spin)
    return CurrentSample(j_i, j_s, rho)


def current_symmetric(packet: SymmetricPacket, pt: SpaceTimePoint) -> CurrentSample:
    """Closed-form current of the symmetric packet with spin +z/2."""
    x, y, z, t = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in pt.coords()))
    s0, u = packet.sigma0, packet.u
    sig2 = sigma_of_t(packet, t) ** 2
    rho = polar_fields_symmetric(packet, pt).rho
    d = x - u * t
    k = t / (4.0 * s0**2 * sig2)
    j_i = rho * np.stack([u + d * k, y * k, z * k])
    j_s = rho * np.stack([-y / (2.0 * sig2), d / (2.0 * sig2), np.zeros_like(d)])
    return CurrentSample(j_i, j_s, rho)


def current_asymmetric(packet: AsymmetricPacket, pt: SpaceTimePoint) -> CurrentSample:
    """Closed-form current of the asymmetric packet with spin +z/2."""
    x, y, z, t = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in pt.coords()))
    a2, b2, c2 = packet.a**2, packet.b**2, packet.c**2
    u = packet.u
    big_a, big_b, big_c = a2**2 + t**2, b2**2 + t**2, c2**2 + t**2
    rho = polar_fields_asymmetric(packet, pt).rho
    xs = x + packet.x1 - u * t
    j_i = rho * np.stack([u + xs * t / big_a, y * t / big_b, z * t / big_c])
    j_s = rho * np.stack([-b2 * y / big_b, a2 * xs / big_a, np.zeros_like(xs)])
    return CurrentSample(j_i, j_s, rho)


def closed_form_current(packet: Packet, pt: SpaceTimePoint) -> CurrentSample:
    if isinstance(packet, SymmetricPacket):
        return current_symmetric(packet, pt)
    if isinstance(packet, AsymmetricPacket):
        return current_asymmetric(packet, pt)
    raise TypeError(f"unsupported packet type {type(packet).__name__}")


def current_source(packet: Packet, spin: Optional[SpinVector] = None) -> CurrentSource:
    """Current evaluator for ``packet``.

    With ``spin`` left as None the closed form (spin +z/2) is used; otherwise
    the generic polar formula with the given spin.
    """
    if spin is None:
        return lambda pt: closed_form_current(packet, pt)
    return lambda pt: current_from_polar(packet.polar_fields(pt), spin)


def _as_complex(amp) -> np.ndarray:
    if isinstance(amp, ComplexAmplitude):
        return amp.value
    return np.asarray(amp, dtype=complex)


def default_step(coord, rel: float = 1e-6):
    return rel * np.maximum(1.0, np.abs(coord))


def current_numeric(
    amplitude: Callable[[SpaceTimePoint], object],
    spin: SpinVector,
    pt: SpaceTimePoint,
    h: Optional[float] = None,
) -> CurrentSample:
    """Current from central differences of the complex amplitude.

    ``j_i = Im(psi* grad psi)`` and ``j_s = 2 Re(psi* grad psi) x s``.  The
    step along each axis is ``h * max(1, |coord|)`` (``h`` defaults to 1e-6).
    Meant as an oracle, not for production integrands.
    """
    rel = 1e-6 if h is None else h
    if not rel > 0:
        raise DegenerateStepError(f"step must be positive, got {h}")
    psi0 = _as_complex(amplitude(pt))
    grads = []
    for axis, coord in enumerate((pt.x, pt.y, pt.z)):
        coord = np.asarray(coord, dtype=float)
        step = default_step(coord, rel)
        if np.any(coord + step == coord) or np.any(coord - step == coord):
            raise DegenerateStepError(f"step {rel} underflows at coordinate {coord} (axis {axis})")
        plus = _as_complex(amplitude(pt.shifted(axis, step)))
        minus = _as_complex(amplitude(pt.shifted(axis, -step)))
        grads.append((plus - minus) / (2.0 * step))
    grad_psi = np.stack(np.broadcast_arrays(*grads))
    w = np.conj(psi0) * grad_psi
    rho = np.abs(psi0) ** 2
    j_i = np.imag(w)
    j_s = _cross_with_spin(2.0 * np.real(w), spin)
    return CurrentSample(j_i, j_s, rho)
