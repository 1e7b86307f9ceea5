"""Adaptive Gauss-Kronrod quadrature on [0, inf).

The integrand is a callable taking a 1-D array of times and returning either
an array of the same length or a 2-D array ``(k, n)`` of ``k`` integrands
sampled at the same times.  Vector-valued integrands share their sample
points and refinement, which is how the arrival-time moments are computed
in a single pass.

The semi-infinite range is handled by octave doubling: ``[0, t_initial]``
is integrated first, then ``[T, 2T]`` for ``T = t_initial, 2 t_initial, ...``
until the last octave is a negligible fraction of the running total.  If that
never happens within ``max_doublings`` the remaining tail is integrated
through the map ``t = T / (1 - s)`` on ``s in [0, 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np


class QuadratureError(RuntimeError):
    pass


class NonConvergent(QuadratureError):
    """Tolerance or tail criterion could not be met."""


class NonFinite(QuadratureError):
    """The integrand returned NaN or infinity."""


# Kronrod 15-point nodes on [0, 1] (positive half, descending) and weights;
# the odd-indexed nodes are the embedded 7-point Gauss rule.
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1::2] = np.concatenate([_WG, _WG[-2::-1]])

Integrand = Callable[[np.ndarray], np.ndarray]
Value = Union[float, np.ndarray]


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-30
    t_initial: float = 1.0
    max_doublings: int = 60
    tail_fraction: float = 1e-10
    max_depth: int = 60

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.t_initial > 0:
            raise ValueError("t_initial must be positive")
        if self.max_doublings < 1:
            raise ValueError("max_doublings must be at least 1")
        if self.abs_tol < 0 or self.tail_fraction < 0:
            raise ValueError("abs_tol and tail_fraction must be non-negative")


@dataclass(frozen=True)
class IntegralResult:
    """Value and error bound of one integral over [0, t_max_used].

    ``t_max_used`` is ``inf`` when the transformed tail was needed.
    """

    value: Value
    error_estimate: Value
    t_max_used: float
    evaluations: int

    def component(self, k: int) -> "IntegralResult":
        return IntegralResult(
            float(np.atleast_1d(self.value)[k]),
            float(np.atleast_1d(self.error_estimate)[k]),
            self.t_max_used,
            self.evaluations,
        )


def _evaluate(f: Integrand, t: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(t), dtype=float)
    if vals.shape[-1] != t.shape[-1]:
        raise ValueError(f"integrand returned shape {vals.shape} for {t.shape[-1]} points")
    if not np.all(np.isfinite(vals)):
        bad = t[..., ~np.all(np.isfinite(vals.reshape(-1, t.shape[-1])), axis=0)]
        raise NonFinite(f"integrand is not finite at t = {bad[:3]}")
    return vals.reshape(-1, t.shape[-1])


def _adaptive(f: Integrand, a: float, b: float, rel_tol: float, abs_tol: float, max_depth: int):
    """Breadth-first adaptive GK15 on [a, b] for a (k, n)-valued integrand.

    Every pass evaluates all still-active panels in one integrand call.  A
    panel is accepted once its |K15 - G7| is within its width-proportional
    share of ``max(abs_tol, rel_tol * |total|)``.  A panel whose estimate is
    zero or below ``abs_tol`` is split once more before it may be accepted,
    so a narrow pulse sitting between nodes is not missed.
    """
    width_total = b - a
    lefts = np.array([a])
    rights = np.array([b])
    depth = 0
    zero_checked = np.array([False])
    acc_v, acc_e = [], []
    nevals = 0
    while lefts.size:
        half = 0.5 * (rights - lefts)
        mid = 0.5 * (rights + lefts)
        t = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
        vals = _evaluate(f, t).reshape(-1, lefts.size, 15)
        nevals += t.size
        kron = (vals @ KRONROD_WEIGHTS) * half
        gauss = (vals @ GAUSS_WEIGHTS) * half
        err = np.abs(kron - gauss)

        total = kron.sum(axis=1)
        if acc_v:
            total = total + np.sum(np.stack(acc_v, axis=1), axis=1)
        tol = np.maximum(abs_tol, rel_tol * np.abs(total))
        share = (rights - lefts) / width_total
        ok = np.all(err <= tol[:, None] * share[None, :], axis=0)
        negligible = np.all(np.abs(kron) <= abs_tol, axis=0) | np.all(vals == 0.0, axis=(0, 2))
        ok &= ~negligible | zero_checked

        stuck = np.any(mid[~ok] == lefts[~ok]) or np.any(mid[~ok] == rights[~ok])
        if np.any(~ok) and (depth >= max_depth or stuck):
            raise NonConvergent(
                f"adaptive refinement on [{a}, {b}] exceeded depth {depth} "
                f"with {int(np.sum(~ok))} unresolved panels"
            )
        acc_v.append(kron[:, ok].sum(axis=1))
        acc_e.append(err[:, ok])
        split = ~ok
        new_left = np.concatenate([lefts[split], mid[split]])
        new_right = np.concatenate([mid[split], rights[split]])
        new_zero = np.concatenate([negligible[split], negligible[split]])
        order = np.argsort(new_left, kind="stable")
        lefts, rights, zero_checked = new_left[order], new_right[order], new_zero[order]
        depth += 1

    value = np.sum(np.stack(acc_v, axis=1), axis=1)
    error = np.concatenate(acc_e, axis=1).sum(axis=1)
    return value, error, nevals


def _squeeze(v: np.ndarray, vector: bool) -> Value:
    return v if vector else float(v[0])


def _is_vector(f: Integrand) -> bool:
    probe = np.asarray(f(np.array([0.0])))
    return probe.ndim > 1


def adaptive_panel(
    f: Integrand,
    a: float,
    b: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 0.0,
    max_depth: int = 60,
) -> tuple:
    """Integrate ``f`` over ``[a, b]``; returns ``(value, error_estimate)``.

    Raises :class:`NonConvergent` when the depth limit is hit.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    vector = _is_vector(f)
    value, error, _ = _adaptive(f, a, b, rel_tol, abs_tol, max_depth)
    return _squeeze(value, vector), _squeeze(error, vector)


def integrate_semi_infinite(f: Integrand, cfg: QuadratureConfig = QuadratureConfig()) -> IntegralResult:
    """Integrate ``f`` over ``[0, inf)`` by octave doubling plus tail fallback."""
    vector = _is_vector(f)
    t_hi = cfg.t_initial
    value, error, nevals = _adaptive(f, 0.0, t_hi, cfg.rel_tol, cfg.abs_tol, cfg.max_depth)
    for _ in range(cfg.max_doublings):
        target = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(value))
        # the octave's tolerance is relative to the running total, not to itself
        octave, oct_err, n = _adaptive(f, t_hi, 2.0 * t_hi, cfg.rel_tol, float(np.min(target)), cfg.max_depth)
        value = value + octave
        error = error + oct_err
        nevals += n
        t_hi *= 2.0
        arrived = np.any(np.abs(value) > cfg.abs_tol)
        small = np.all(np.abs(octave) <= cfg.tail_fraction * np.abs(value) + cfg.abs_tol)
        if arrived and small:
            return IntegralResult(_squeeze(value, vector), _squeeze(error, vector), t_hi, nevals)
    if not np.any(np.abs(value) > cfg.abs_tol):
        # nothing ever arrived: report the (zero) integral over the whole horizon
        return IntegralResult(_squeeze(value, vector), _squeeze(error, vector), t_hi, nevals)

    scale = t_hi

    def mapped(s):
        one_minus = 1.0 - s
        if np.any(one_minus <= 0.0):
            raise NonConvergent("tail map reached t = inf")
        t = scale / one_minus
        return np.asarray(f(t), dtype=float) * (scale / one_minus**2)

    target = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(value))
    try:
        with np.errstate(over="ignore"):
            tail, tail_err, n = _adaptive(mapped, 0.0, 1.0, cfg.rel_tol, float(np.min(target)), cfg.max_depth)
    except (NonConvergent, NonFinite) as exc:
        raise NonConvergent(
            f"tail beyond t = {t_hi:g} did not converge after {cfg.max_doublings} doublings"
        ) from exc
    value = value + tail
    error = error + tail_err
    nevals += n
    if np.any(tail_err > np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(value)) * 10.0):
        raise NonConvergent(f"transformed tail beyond t = {t_hi:g} is not resolved")
    return IntegralResult(_squeeze(value, vector), _squeeze(error, vector), math.inf, nevals)
