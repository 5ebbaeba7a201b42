"""Shift estimates behind the compactness argument for Caputo-bounded paths.

Piecewise-constant extension f^{(τ)} = f_n on (t_{n−1}, t_n]:

    ‖f^{(τ)}(·+τ) − f^{(τ)}‖_{L^p(0,T−τ;Y)} ≤ 2^{1+1/p} τ^α/Γ_α · ‖D^α_τ f^{(τ)}‖_{L^p(0,T;Y)}

Linear interpolant f̃ and any 0 < h < T:

    ‖f̃(·+h) − f̃‖_{L^p(0,T−h;Y)} ≤ 2 h^α/(Γ_α α) · ‖D^α_t f̃‖_{L^p(0,T;Y)}

Norms of piecewise-constant functions are exact cell sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.linalg import toeplitz

from caputo.exceptions import DomainError, GridMismatch
from caputo.grids import SampledPath
from caputo.operators import left_caputo
from caputo.utils.quadrature import gauss_legendre
from caputo.weights import CaputoWeights

from .interpolants import LinearInterpolant, _check_fractional, _kernel, interpolant_caputo_norm

ADMISSIBLE_EXPONENTS = (1.0, 2.0, math.inf)


@dataclass(frozen=True)
class ShiftReport:
    h: float
    p: float
    shift_norm: float
    derivative_norm: float
    constant: float

    @property
    def bound(self) -> float:
        return self.constant * self.derivative_norm

    @property
    def ratio(self) -> float:
        if self.bound > 0.0:
            return self.shift_norm / self.bound
        return 0.0 if self.shift_norm == 0.0 else math.inf


def _exponent(p) -> float:
    p = float(p)
    if p not in ADMISSIBLE_EXPONENTS:
        raise DomainError(f'norm exponent must be one of 1, 2, inf; got {p}')
    return p


def _cell_norm(norms: np.ndarray, tau: float, p: float) -> float:
    """L^p norm of a piecewise-constant function with cell values ``norms``."""
    if norms.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(norms))
    return float((tau * np.sum(norms ** p)) ** (1.0 / p))


def piecewise_shift_check(path: SampledPath, weights: CaputoWeights, p) -> ShiftReport:
    p = _exponent(p)
    grid = path.grid
    jumps = path.norm(np.diff(path.values, axis=0)[1:])
    derivative = path.norm(left_caputo(path, weights).values[1:])
    if math.isinf(p):
        factor = 2.0
    else:
        factor = 2.0 ** (1.0 + 1.0 / p)
    constant = factor * grid.tau ** weights.alpha / weights.order.gamma
    return ShiftReport(
        h=grid.tau,
        p=p,
        shift_norm=_cell_norm(jumps, grid.tau, p),
        derivative_norm=_cell_norm(derivative, grid.tau, p),
        constant=constant,
    )


def _linear_piece_norms(path: SampledPath, start: np.ndarray, stop: np.ndarray,
                        lengths: np.ndarray, p: float) -> float:
    """Σ ∫_0^L ‖A + (B − A)s/L‖^p ds over pieces (A, B, L), p ∈ {1, 2}."""
    if p == 2.0:
        total = lengths * (path.inner(start, start) + path.inner(start, stop) + path.inner(stop, stop)) / 3.0
        return float(np.sum(total))
    if path.is_scalar:
        a, b = np.abs(start), np.abs(stop)
        same_sign = start * stop >= 0.0
        denom = np.where(a + b > 0.0, a + b, 1.0)
        crossing = (start ** 2 + stop ** 2) / (2.0 * denom)
        return float(np.sum(lengths * np.where(same_sign, 0.5 * (a + b), crossing)))
    nodes, weights = gauss_legendre(8)
    total = 0.0
    for s, w in zip(nodes, weights):
        total += w * np.sum(lengths * path.norm(start + s * (stop - start)))
    return float(total)


def interpolant_shift_norm(interp: LinearInterpolant, h: float, p: float) -> float:
    """‖f̃(·+h) − f̃‖_{L^p(0,T−h;Y)}, exact on the linear pieces."""
    grid = interp.grid
    end = grid.horizon - h
    times = grid.times()
    breaks = np.concatenate([times, times - h, [0.0, end]])
    breaks = np.unique(breaks[(breaks >= 0.0) & (breaks <= end)])
    diff = interp(np.minimum(breaks + h, grid.horizon)) - interp(breaks)
    if math.isinf(p):
        return float(np.max(interp.base.norm(diff)))
    lengths = np.diff(breaks)
    keep = lengths > 0.0
    total = _linear_piece_norms(interp.base, diff[:-1][keep], diff[1:][keep], lengths[keep], p)
    return float(max(total, 0.0) ** (1.0 / p))


def interpolant_shift_check(interp: LinearInterpolant, alpha: float, h: float, p) -> ShiftReport:
    p = _exponent(p)
    order = _check_fractional(alpha)
    if not 0.0 < h < interp.grid.horizon:
        raise DomainError(f'shift h={h} must lie in (0, T={interp.grid.horizon})')
    constant = 2.0 * h ** order.alpha / (order.gamma * order.alpha)
    return ShiftReport(
        h=float(h),
        p=p,
        shift_norm=interpolant_shift_norm(interp, h, p),
        derivative_norm=interpolant_caputo_norm(interp, order.alpha, p),
        constant=constant,
    )


def mu_weights(alpha: float, count: int) -> np.ndarray:
    """w_0 = 1, w_s = (s+1)^{α−1} − s^{α−1}."""
    s = np.arange(1, count, dtype=float)
    return np.concatenate([[1.0], (s + 1.0) ** (alpha - 1.0) - s ** (alpha - 1.0)])


def mu_coefficients(alpha: float, n_steps: int, eval_points: int = 16) -> np.ndarray:
    """μ_k(t) for k = 1..N (rows) on a mesh of ``eval_points`` per cell (columns)."""
    order = _check_fractional(alpha)
    rho = np.linspace(0.0, n_steps, n_steps * eval_points + 1)
    differences = _kernel(rho, n_steps, order.alpha).T
    w = mu_weights(order.alpha, n_steps)
    # W[k−1, n] = w_{n−k+1} for n ≥ k−1
    upper = toeplitz(np.concatenate([[w[0]], np.zeros(n_steps - 1)]), w)
    return upper @ differences


def mu_coefficient_scan(alpha: float, n_steps: int, eval_points: int = 16) -> float:
    """max_{k, t} |μ_k(t)|."""
    return float(np.max(np.abs(mu_coefficients(alpha, n_steps, eval_points))))


def mu_envelope(alpha: float) -> float:
    """1 + 6 + α(1−α) Σ_{r≥1} r^{−1−α} + 1."""
    order = _check_fractional(alpha)
    a = order.alpha
    return 8.0 + a * (1.0 - a) * float(special.zeta(1.0 + a, 1.0))


def empirical_shift_constant(alpha: float, n_steps: int, eval_points: int = 16) -> float:
    """max|μ_k| / (Γ_{1−α} Γ_α (1−α))."""
    order = _check_fractional(alpha)
    scan = mu_coefficient_scan(order.alpha, n_steps, eval_points)
    return scan / (order.gamma_complement * order.gamma * (1.0 - order.alpha))


def constant_to_piecewise_gap(path: SampledPath, interp: LinearInterpolant, p) -> float:
    """‖f^{(τ)} − f̃‖_{L^p(τ,T;Y)}, measured on (τ, T] and not on (0, T].

    On (t_{n−1}, t_n] the difference is (f_n − f_{n−1})(1 − θ), so each cell
    n ≥ 2 contributes τ‖f_n − f_{n−1}‖^p/(p+1). The first cell (0, τ] is not
    part of the norm: a path whose only jump is f_1 − f_0 has gap 0. Over the
    same N − 1 jumps the τ-shift norm of :func:`piecewise_shift_check` bounds
    the gap.
    """
    p = _exponent(p)
    if interp.base.grid != path.grid or not np.array_equal(interp.base.values, path.values):
        raise GridMismatch('interpolant does not belong to this path')
    jumps = path.norm(np.diff(path.values, axis=0)[1:])
    if jumps.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(jumps))
    return float((path.grid.tau * np.sum(jumps ** p) / (p + 1.0)) ** (1.0 / p))
