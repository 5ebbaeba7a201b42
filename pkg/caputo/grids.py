from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .exceptions import DomainError, GridMismatch


@dataclass(frozen=True)
class FractionalOrder:
    """Order α of the Caputo derivative, 0 < α ≤ 1."""

    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or not 0.0 < alpha <= 1.0:
            raise DomainError(f'fractional order must lie in (0, 1], got {self.alpha!r}')
        object.__setattr__(self, 'alpha', alpha)

    @classmethod
    def coerce(cls, value: 'FractionalOrder | float') -> 'FractionalOrder':
        return value if isinstance(value, cls) else cls(value)

    @property
    def is_classical(self) -> bool:
        return self.alpha == 1.0

    @property
    def gamma(self) -> float:
        """Γ_α."""
        from .weights import gamma_fn
        return gamma_fn(self.alpha)

    @property
    def gamma_complement(self) -> float:
        """Γ_{1−α}; undefined for α = 1."""
        from .weights import gamma_fn
        if self.is_classical:
            raise DomainError('Γ(1 − α) is undefined for α = 1')
        return gamma_fn(1.0 - self.alpha)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k·tau, k = 0..n_steps."""

    tau: float
    n_steps: int

    def __post_init__(self):
        tau = float(self.tau)
        if not math.isfinite(tau) or tau <= 0.0:
            raise DomainError(f'time step must be positive, got {self.tau!r}')
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f'n_steps must be an integer >= 1, got {self.n_steps!r}')
        object.__setattr__(self, 'tau', tau)
        object.__setattr__(self, 'n_steps', int(self.n_steps))

    @classmethod
    def from_horizon(cls, horizon: float, n_steps: int) -> 'TimeGrid':
        return cls(tau=float(horizon) / n_steps, n_steps=n_steps)

    @property
    def horizon(self) -> float:
        return self.tau * self.n_steps

    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1, dtype=float)

    def refined(self, factor: int = 2) -> 'TimeGrid':
        return TimeGrid(tau=self.tau / factor, n_steps=self.n_steps * factor)


def _readonly(values) -> np.ndarray:
    array = np.array(values, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SampledPath:
    """Samples f_0..f_N of a path on a TimeGrid.

    ``values`` has shape ``(N + 1,)`` for scalar paths and ``(N + 1, *shape)``
    for field-valued ones. Field values are normed in L² with node weight
    ``cell_volume`` so a path of grid fields measures ``‖f_k‖_{L²}``.
    """

    grid: TimeGrid
    values: np.ndarray
    cell_volume: float = 1.0

    def __post_init__(self):
        values = _readonly(self.values)
        if values.ndim == 0 or values.shape[0] != self.grid.n_steps + 1:
            raise GridMismatch(
                f'path needs {self.grid.n_steps + 1} samples, got shape {values.shape}'
            )
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_function(cls, grid: TimeGrid, func) -> 'SampledPath':
        return cls(grid=grid, values=np.asarray(func(grid.times()), dtype=float))

    @classmethod
    def from_sequence(cls, grid: TimeGrid, values: Sequence, cell_volume: float = 1.0) -> 'SampledPath':
        return cls(grid=grid, values=np.stack([np.asarray(v, dtype=float) for v in values]),
                   cell_volume=cell_volume)

    @classmethod
    def from_fields(cls, grid: TimeGrid, fields: Sequence) -> 'SampledPath':
        """Stack torus fields u_0..u_N; the Y-norm becomes their L² norm."""
        fields = list(fields)
        if not fields:
            raise GridMismatch('cannot build a path from no fields')
        return cls.from_sequence(grid, [f.samples for f in fields], cell_volume=fields[0].grid.cell_volume)

    def field(self, k: int, torus):
        """Sample k as a GridField on ``torus``."""
        from spectral.fields import GridField
        return GridField(torus, self.values[k])

    @property
    def n_steps(self) -> int:
        return self.grid.n_steps

    @property
    def is_scalar(self) -> bool:
        return self.values.ndim == 1

    @property
    def f_in(self):
        return self.values[0]

    def with_values(self, values) -> 'SampledPath':
        return replace(self, values=values)

    def reversed(self) -> 'SampledPath':
        return self.with_values(self.values[::-1])

    def inner(self, a, b) -> np.ndarray:
        """Y inner product, vectorised over any leading time axis."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        value_ndim = self.values.ndim - 1
        if value_ndim == 0:
            return a * b
        axes = tuple(range(a.ndim - value_ndim, a.ndim))
        return np.sum(a * b, axis=axes) * self.cell_volume

    def norm(self, a) -> np.ndarray:
        """Y norm (absolute value for scalars), vectorised over a leading axis."""
        return np.sqrt(np.maximum(self.inner(a, a), 0.0))
