from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from caputo.exceptions import DomainError

Evaluator = Callable[[np.ndarray], np.ndarray]

SPOT_FRACTIONS = np.array([0.0917, 0.2833, 0.4771, 0.6619, 0.8537])


@dataclass(frozen=True)
class SmoothFunction:
    """A caller-supplied pair (f, f′), vectorised over numpy arrays.

    ``breakpoints`` lists interior points where f′ may jump (piecewise-C¹
    functions such as linear interpolants); the continuous operators split
    their quadrature there.
    """

    value: Evaluator
    derivative: Evaluator
    antiderivative: Optional[Evaluator] = None
    smoothness: str = 'C1'
    breakpoints: Tuple[float, ...] = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.value(t), dtype=float), t.shape)

    def prime(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.derivative(t), dtype=float), t.shape)

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> 'SmoothFunction':
        """Σ c_i t^i, lowest degree first."""
        poly = Polynomial(np.asarray(coefficients, dtype=float))
        return cls(value=poly, derivative=poly.deriv(), antiderivative=poly.integ())

    @classmethod
    def constant(cls, c: float) -> 'SmoothFunction':
        return cls.polynomial([c])

    @classmethod
    def cosine(cls, frequency: float = 1.0) -> 'SmoothFunction':
        w = float(frequency)
        return cls(
            value=lambda t: np.cos(w * t),
            derivative=lambda t: -w * np.sin(w * t),
            antiderivative=lambda t: np.sin(w * t) / w,
        )

    @classmethod
    def sine(cls, frequency: float = 1.0) -> 'SmoothFunction':
        w = float(frequency)
        return cls(
            value=lambda t: np.sin(w * t),
            derivative=lambda t: w * np.cos(w * t),
            antiderivative=lambda t: -np.cos(w * t) / w,
        )

    @classmethod
    def piecewise_linear(cls, times: Sequence[float], values: Sequence[float]) -> 'SmoothFunction':
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        slopes = np.diff(values) / np.diff(times)

        def derivative(t):
            cell = np.clip(np.searchsorted(times, t, side='right') - 1, 0, slopes.size - 1)
            return slopes[cell]

        return cls(
            value=lambda t: np.interp(t, times, values),
            derivative=derivative,
            smoothness='piecewise-C1',
            breakpoints=tuple(times[1:-1]),
        )

    def reflected(self, horizon: float) -> 'SmoothFunction':
        """t ↦ f(T − t)."""
        T = float(horizon)
        return SmoothFunction(
            value=lambda t: self(T - np.asarray(t, dtype=float)),
            derivative=lambda t: -self.prime(T - np.asarray(t, dtype=float)),
            smoothness=self.smoothness,
            breakpoints=tuple(sorted(T - b for b in self.breakpoints)),
        )

    def check_derivative(self, horizon: float, rng: Optional[np.random.Generator] = None,
                         tol: float = 1e-6, start: float = 0.0) -> None:
        """Spot-check f′ by central differences at five points of [start, horizon].

        The points are drawn from ``rng`` when one is given and are fixed
        otherwise; points within two difference steps of a breakpoint are
        skipped. Raises DomainError on a mismatch.
        """
        length = float(horizon) - float(start)
        if not length > 0.0:
            raise DomainError(f'derivative check needs start < horizon, got [{start}, {horizon}]')
        step = 1e-5 * min(1.0, length)
        lo, hi = start + 2.0 * step, horizon - 2.0 * step
        if rng is None:
            points = lo + (hi - lo) * SPOT_FRACTIONS
        else:
            points = rng.uniform(lo, hi, size=SPOT_FRACTIONS.size)
        for b in self.breakpoints:
            points = points[np.abs(points - b) > 2.0 * step]
        if points.size == 0:
            return
        above, below = self(points + step), self(points - step)
        estimate = (above - below) / (2.0 * step)
        exact = self.prime(points)
        # central-difference round-off grows like eps·|f|/step
        roundoff = 64.0 * np.finfo(float).eps * np.maximum(np.abs(above), np.abs(below)) / step
        error = np.abs(estimate - exact) - roundoff
        relative = error / np.maximum(1.0, np.abs(exact))
        if np.max(relative) > tol:
            raise DomainError(
                f'derivative does not match the function (max relative error {np.max(relative):.3e})'
            )
