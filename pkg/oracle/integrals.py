"""Continuous Caputo derivatives and identities by graded quadrature.

    D^α f(t)  = 1/Γ_{1−α} ∫_0^t f′(s) (t−s)^{−α} ds
    *D^α f(t) = 1/Γ_{1−α} ∫_t^T f′(s) (s−t)^{−α} ds

The singular kernel r^{−α} (r = |t − s|) is absorbed by the graded rule of
``caputo.utils.quadrature``; only f′ is sampled.
"""
from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np
from django.conf import settings

from caputo.exceptions import DomainError
from caputo.grids import FractionalOrder
from caputo.operators import IbpTerms
from caputo.utils.quadrature import composite_rule, graded_rule

from .functions import SmoothFunction

logger = logging.getLogger('oracle')

# Difference quotients below this step fall back to f′ to avoid cancellation
_QUOTIENT_FLOOR = 1e-7


def _rule_size(cells: Optional[int], points: Optional[int]) -> Tuple[int, int]:
    cells = cells or getattr(settings, 'FRACPME_QUADRATURE_CELLS', 256)
    points = points or getattr(settings, 'FRACPME_GAUSS_POINTS', 8)
    return int(cells), int(points)


def _fractional(alpha: float) -> FractionalOrder:
    order = FractionalOrder.coerce(alpha)
    if order.is_classical:
        raise DomainError('continuous Caputo quadrature needs 0 < alpha < 1')
    return order


def _singular_integral(g, length: float, beta: float, cells: int, points: int) -> float:
    """∫_0^length g(r) r^{−beta} dr."""
    r, w = graded_rule(length, beta, cells, points)
    if r.size == 0:
        return 0.0
    return float(w @ g(r))


def _kernel_integral(f: SmoothFunction, t: float, alpha: float, side: str, horizon: float,
                     cells: int, points: int) -> float:
    """∫ f′(s)|t − s|^{−α} ds over [0, t] (left) or [t, T] (right), split at f′ breakpoints."""
    if side == 'left':
        edges = [0.0] + [b for b in f.breakpoints if 0.0 < b < t] + [t]
    else:
        edges = [t] + [b for b in f.breakpoints if t < b < horizon] + [horizon]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        adjacent = (b == t) if side == 'left' else (a == t)
        if adjacent:
            length = b - a
            if side == 'left':
                total += _singular_integral(lambda r: f.prime(t - r), length, alpha, cells, points)
            else:
                total += _singular_integral(lambda r: f.prime(t + r), length, alpha, cells, points)
        else:
            s, w = composite_rule(a, b, max(8, cells // 16), points)
            total += float(w @ (f.prime(s) * np.abs(t - s) ** (-alpha)))
    return total


def continuous_left_caputo(f: SmoothFunction, t: float, alpha: float,
                           cells: Optional[int] = None, points: Optional[int] = None) -> float:
    order = _fractional(alpha)
    if t <= 0.0:
        raise DomainError(f'left Caputo derivative needs t > 0, got {t}')
    f.check_derivative(t)
    cells, points = _rule_size(cells, points)
    integral = _kernel_integral(f, t, order.alpha, 'left', t, cells, points)
    return integral / order.gamma_complement


def continuous_right_caputo(f: SmoothFunction, t: float, alpha: float, horizon: float,
                            cells: Optional[int] = None, points: Optional[int] = None) -> float:
    order = _fractional(alpha)
    if t >= horizon:
        raise DomainError(f'right Caputo derivative needs t < T={horizon}, got {t}')
    f.check_derivative(horizon, start=t)
    cells, points = _rule_size(cells, points)
    integral = _kernel_integral(f, t, order.alpha, 'right', horizon, cells, points)
    return integral / order.gamma_complement


def _quotient(f: SmoothFunction, anchor: float, r: np.ndarray, sign: float) -> np.ndarray:
    """(f(anchor) − f(anchor − sign·r))·sign / r, with f′ near r = 0."""
    r = np.asarray(r, dtype=float)
    safe = np.maximum(r, _QUOTIENT_FLOOR)
    quotient = sign * (f(anchor) - f(anchor - sign * safe)) / safe
    tiny = r < _QUOTIENT_FLOOR
    if np.any(tiny):
        quotient = np.where(tiny, f.prime(anchor - sign * 0.5 * r), quotient)
    return quotient


def continuous_left_caputo_alt(f: SmoothFunction, t: float, alpha: float,
                               cells: Optional[int] = None, points: Optional[int] = None) -> float:
    """1/Γ_{1−α} [(f(t) − f(0)) t^{−α} + α ∫_0^t (f(t) − f(s)) (t−s)^{−1−α} ds]."""
    order = _fractional(alpha)
    if t <= 0.0:
        raise DomainError(f'left Caputo derivative needs t > 0, got {t}')
    f.check_derivative(t)
    cells, points = _rule_size(cells, points)
    a = order.alpha
    boundary = (float(f(t)) - float(f(0.0))) * t ** (-a)
    integral = _singular_integral(lambda r: _quotient(f, t, r, 1.0), t, a, cells, points)
    return (boundary + a * integral) / order.gamma_complement


def continuous_right_caputo_alt(f: SmoothFunction, t: float, alpha: float, horizon: float,
                                cells: Optional[int] = None, points: Optional[int] = None) -> float:
    """1/Γ_{1−α} [(f(T) − f(t)) (T−t)^{−α} + α ∫_t^T (f(s) − f(t)) (s−t)^{−1−α} ds]."""
    order = _fractional(alpha)
    if t >= horizon:
        raise DomainError(f'right Caputo derivative needs t < T={horizon}, got {t}')
    f.check_derivative(horizon, start=t)
    cells, points = _rule_size(cells, points)
    a = order.alpha
    length = horizon - t
    boundary = (float(f(horizon)) - float(f(t))) * length ** (-a)
    integral = _singular_integral(lambda r: _quotient(f, t, r, -1.0), length, a, cells, points)
    return (boundary + a * integral) / order.gamma_complement


def _left_caputo_many(f: SmoothFunction, ts: np.ndarray, alpha: float, cells: int, points: int) -> np.ndarray:
    """D^α f at every entry of ``ts`` for smooth f (one graded rule rescaled per t)."""
    order = _fractional(alpha)
    r_unit, w_unit = graded_rule(1.0, order.alpha, cells, points)
    ts = np.asarray(ts, dtype=float).ravel()
    out = np.empty(ts.size, dtype=float)
    for start in range(0, ts.size, 256):
        block = ts[start:start + 256]
        samples = f.prime(block[:, None] * (1.0 - r_unit[None, :]))
        out[start:start + 256] = block ** (1.0 - order.alpha) * (samples @ w_unit)
    return out / order.gamma_complement


def _right_caputo_many(f: SmoothFunction, ts: np.ndarray, alpha: float, horizon: float,
                       cells: int, points: int) -> np.ndarray:
    order = _fractional(alpha)
    r_unit, w_unit = graded_rule(1.0, order.alpha, cells, points)
    ts = np.asarray(ts, dtype=float)
    lengths = horizon - ts
    samples = f.prime(ts[:, None] + lengths[:, None] * r_unit[None, :])
    return lengths ** (1.0 - order.alpha) * (samples @ w_unit) / order.gamma_complement


def continuous_ftc_residual(f: SmoothFunction, t: float, alpha: float,
                            cells: Optional[int] = None, points: Optional[int] = None) -> float:
    """|f(t) − f(0) − 1/Γ_α ∫_0^t (t−s)^{α−1} D^α f(s) ds| with nested quadrature."""
    order = _fractional(alpha)
    if t <= 0.0:
        raise DomainError(f'FTC residual needs t > 0, got {t}')
    f.check_derivative(t)
    cells, points = _rule_size(cells, points)
    r, w = graded_rule(t, 1.0 - order.alpha, cells, points)
    inner = _left_caputo_many(f, t - r, order.alpha, cells, points)
    rebuilt = float(f(0.0)) + float(w @ inner) / order.gamma
    return abs(float(f(t)) - rebuilt)


def continuous_ibp_terms(f: SmoothFunction, phi: SmoothFunction, alpha: float, horizon: float,
                         cells: Optional[int] = None, points: Optional[int] = None) -> IbpTerms:
    """Terms of ∫ D^α f φ = −∫ f *D^α φ + φ(T)/Γ_{1−α} ∫ f (T−t)^{−α} − f(0)/Γ_{1−α} ∫ φ s^{−α}.

    ``interior`` holds −∫_0^T f *D^α φ dt so that lhs = interior + end − start.
    """
    order = _fractional(alpha)
    cells, points = _rule_size(cells, points)
    a = order.alpha
    T = float(horizon)
    f.check_derivative(T)
    phi.check_derivative(T)
    t, w = composite_rule(0.0, T, cells, points)
    lhs = float(w @ (_left_caputo_many(f, t, a, cells, points) * phi(t)))
    interior = -float(w @ (f(t) * _right_caputo_many(phi, t, a, T, cells, points)))
    end_integral = _singular_integral(lambda r: f(T - r), T, a, cells, points)
    start_integral = _singular_integral(lambda r: phi(r), T, a, cells, points)
    end = float(phi(T)) * end_integral / order.gamma_complement
    start = float(f(0.0)) * start_integral / order.gamma_complement
    return IbpTerms(lhs=lhs, interior=interior, end=end, start=start)


def ibp_continuous_residual(f: SmoothFunction, phi: SmoothFunction, alpha: float, horizon: float,
                            cells: Optional[int] = None, points: Optional[int] = None) -> float:
    return continuous_ibp_terms(f, phi, alpha, horizon, cells, points).residual


def kernel_limit_integral(phi, alpha: float, horizon: float,
                          cells: Optional[int] = None, points: Optional[int] = None) -> float:
    """∫_0^T t^{−α} φ(t) dt / (Γ_α Γ_{1−α}), the weak limit of the weight density."""
    order = _fractional(alpha)
    cells, points = _rule_size(cells, points)
    integral = _singular_integral(lambda r: np.asarray(phi(r), dtype=float), horizon, order.alpha, cells, points)
    return integral / (order.gamma * order.gamma_complement)
