"""Real fields on the periodic torus [0, 2π)^d and their Fourier coefficients.

Wavenumbers are the integers n ∈ {−M/2, …, M/2 − 1}^d, so the multiplier of
(−Δ)^s is |n|^{2s} without any domain rescaling; derivative multipliers treat
a Nyquist component n_i = −M/2 as zero. The forward transform carries
the factor 1/M^d: for a band-limited field the coefficient ``coeffs[n]`` is
exactly (2π)^{−d}∫ f(x) e^{−in·x} dx.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import fft

from caputo.exceptions import DomainError, GridMismatch


@dataclass(frozen=True)
class TorusGrid:
    dim: int
    points: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f'torus dimension must be 1, 2 or 3, got {self.dim!r}')
        if int(self.points) != self.points or self.points < 8 or self.points % 2:
            raise DomainError(f'points per dimension must be an even integer >= 8, got {self.points!r}')
        object.__setattr__(self, 'points', int(self.points))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points ** self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.points

    @property
    def cell_volume(self) -> float:
        """Node quadrature weight (2π/M)^d."""
        return self.spacing ** self.dim

    @property
    def volume(self) -> float:
        return (2.0 * math.pi) ** self.dim

    def nodes(self) -> tuple[np.ndarray, ...]:
        """Node coordinates x_i = 2πi/M, one broadcast array per axis."""
        axis = self.spacing * np.arange(self.points, dtype=float)
        return tuple(np.meshgrid(*([axis] * self.dim), indexing='ij'))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        axis = fft.fftfreq(self.points, 1.0 / self.points)
        return tuple(np.meshgrid(*([axis] * self.dim), indexing='ij'))

    @cached_property
    def odd_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers with the Nyquist index zeroed.

        Every derivative multiplier is built from these, so the Nyquist mode
        lies in the kernel of the gradient, the divergence, the Laplacian and
        (−Δ)^s alike and div∘grad equals the Laplacian on any field.
        """
        axis = fft.fftfreq(self.points, 1.0 / self.points)
        axis[self.points // 2] = 0.0
        return tuple(np.meshgrid(*([axis] * self.dim), indexing='ij'))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(n * n for n in self.odd_wavenumbers)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on retained modes: every |n_i| ≤ M/3."""
        cutoff = self.points / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for n in self.wavenumbers:
            mask &= np.abs(n) <= cutoff
        return mask


@dataclass
class Spectrum:
    """Normalised Fourier coefficients of a field on ``grid`` (FFT ordering)."""

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise GridMismatch(f'spectrum shape {coeffs.shape} does not match grid {self.grid.shape}')
        self.coeffs = coeffs

    def to_field(self) -> 'GridField':
        values = fft.ifftn(self.coeffs * self.grid.size)
        return GridField(self.grid, values.real)

    def multiply(self, multiplier) -> 'Spectrum':
        return Spectrum(self.grid, self.coeffs * multiplier)


@dataclass(frozen=True)
class GridField:
    """Node samples of a real field; immutable, spectrum computed once on demand."""

    grid: TorusGrid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float, copy=True)
        if samples.shape != self.grid.shape:
            raise GridMismatch(f'samples of shape {samples.shape} do not match grid {self.grid.shape}')
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)

    @classmethod
    def from_function(cls, grid: TorusGrid, func: Callable[..., np.ndarray]) -> 'GridField':
        values = np.broadcast_to(np.asarray(func(*grid.nodes()), dtype=float), grid.shape)
        return cls(grid, values)

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> 'GridField':
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> 'GridField':
        return cls.constant(grid, 0.0)

    @cached_property
    def spectrum(self) -> Spectrum:
        return Spectrum(self.grid, fft.fftn(self.samples) / self.grid.size)

    def _other_samples(self, other):
        if isinstance(other, GridField):
            if other.grid != self.grid:
                raise GridMismatch(f'fields live on different grids: {self.grid} and {other.grid}')
            return other.samples
        return float(other)

    def __add__(self, other) -> 'GridField':
        return GridField(self.grid, self.samples + self._other_samples(other))

    __radd__ = __add__

    def __sub__(self, other) -> 'GridField':
        return GridField(self.grid, self.samples - self._other_samples(other))

    def __rsub__(self, other) -> 'GridField':
        return GridField(self.grid, self._other_samples(other) - self.samples)

    def __mul__(self, other) -> 'GridField':
        return GridField(self.grid, self.samples * self._other_samples(other))

    __rmul__ = __mul__

    def __neg__(self) -> 'GridField':
        return GridField(self.grid, -self.samples)

    def min(self) -> float:
        return float(self.samples.min())

    def max(self) -> float:
        return float(self.samples.max())


@dataclass(frozen=True)
class VectorField:
    components: tuple[GridField, ...]

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise GridMismatch('a vector field needs at least one component')
        grid = components[0].grid
        if any(c.grid != grid for c in components):
            raise GridMismatch('vector field components must share one grid')
        if len(components) != grid.dim:
            raise GridMismatch(f'expected {grid.dim} components, got {len(components)}')
        object.__setattr__(self, 'components', components)

    @property
    def grid(self) -> TorusGrid:
        return self.components[0].grid

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, index: int) -> GridField:
        return self.components[index]


def cosine_series(grid: TorusGrid, offset: float, modes: Iterable[tuple[Sequence[int], float]] = ()) -> GridField:
    """offset + Σ a·cos(n·x) over ``(n, a)`` pairs."""
    nodes = grid.nodes()
    values = np.full(grid.shape, float(offset))
    for mode, amplitude in modes:
        mode = tuple(int(m) for m in mode)
        if len(mode) != grid.dim:
            raise GridMismatch(f'mode {mode} does not have {grid.dim} components')
        phase = sum(m * x for m, x in zip(mode, nodes))
        values = values + float(amplitude) * np.cos(phase)
    return GridField(grid, values)
