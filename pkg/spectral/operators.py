from __future__ import annotations

import math

import numpy as np

from caputo.exceptions import DomainError, GridMismatch

from .fields import GridField, Spectrum, TorusGrid, VectorField


NORM_EXPONENTS = (1, 2, 3, math.inf)


def _check_same_grid(*fields) -> TorusGrid:
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridMismatch(f'fields live on different grids: {grid} and {other.grid}')
    return grid


def _check_order(s: float) -> float:
    s = float(s)
    if not math.isfinite(s) or not 0.0 < s <= 1.0:
        raise DomainError(f'fractional Laplacian order must lie in (0, 1], got {s!r}')
    return s


def fractional_multiplier(grid: TorusGrid, s: float) -> np.ndarray:
    """|n|^{2s}; the zero mode maps to 0 for every s > 0."""
    return grid.k_squared ** s


def frac_laplacian(f: GridField, s: float) -> GridField:
    """(−Δ)^s f via the Fourier multiplier |n|^{2s}."""
    s = _check_order(s)
    return f.spectrum.multiply(fractional_multiplier(f.grid, s)).to_field()


def gradient(f: GridField) -> VectorField:
    spectrum = f.spectrum
    return VectorField(tuple(
        spectrum.multiply(1j * n).to_field() for n in f.grid.odd_wavenumbers
    ))


def divergence(v: VectorField) -> GridField:
    grid = v.grid
    coeffs = sum(1j * n * c.spectrum.coeffs for n, c in zip(grid.odd_wavenumbers, v))
    return Spectrum(grid, coeffs).to_field()


def laplacian(f: GridField) -> GridField:
    return f.spectrum.multiply(-f.grid.k_squared).to_field()


def dealias(spec: Spectrum) -> Spectrum:
    """Two-thirds rule: zero every mode with some |n_i| > M/3."""
    return spec.multiply(spec.grid.dealias_mask)


def dealiased(f: GridField) -> GridField:
    return dealias(f.spectrum).to_field()


def dealiased_product(a: GridField, b: GridField) -> GridField:
    """Pointwise product a·b with the aliased modes removed."""
    _check_same_grid(a, b)
    return dealiased(a * b)


def inner(f: GridField, g: GridField) -> float:
    """∫ f g by node quadrature."""
    grid = _check_same_grid(f, g)
    return float(np.sum(f.samples * g.samples) * grid.cell_volume)


def mean(f: GridField) -> float:
    """(2π)^{−d}∫ f, the zero Fourier mode."""
    return float(np.mean(f.samples))


def positive_part(f: GridField) -> GridField:
    return GridField(f.grid, np.maximum(f.samples, 0.0))


def lp_norm(f: GridField, p: float = 2) -> float:
    if p not in NORM_EXPONENTS:
        raise DomainError(f'lp_norm supports p in {NORM_EXPONENTS}, got {p!r}')
    values = np.abs(f.samples)
    if p == math.inf:
        return float(values.max())
    return float((np.sum(values ** p) * f.grid.cell_volume) ** (1.0 / p))


def hs_seminorm(f: GridField, s: float) -> float:
    """‖(−Δ)^{s/2} f‖_{L²} by Parseval; any s ≥ 0 is accepted."""
    s = float(s)
    if not math.isfinite(s) or s < 0.0:
        raise DomainError(f'Sobolev order must be a finite s >= 0, got {s!r}')
    grid = f.grid
    weights = grid.k_squared ** s if s > 0.0 else np.ones(grid.shape)
    total = np.sum(weights * np.abs(f.spectrum.coeffs) ** 2) * grid.volume
    return float(math.sqrt(max(total, 0.0)))


def energy(u: GridField, p: GridField) -> float:
    """H[u, p] = ∫ u² + ½|∇p|²."""
    _check_same_grid(u, p)
    slope = sum(inner(g, g) for g in gradient(p))
    return inner(u, u) + 0.5 * slope
