from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from caputo.exceptions import DomainError
from caputo.grids import FractionalOrder, SampledPath
from caputo.utils.quadrature import gauss_legendre

# Sub-cells per τ-cell for norms of D^α f̃ and Gauss points per sub-cell
SUBCELLS = 16
SUBCELL_POINTS = 4


@dataclass(frozen=True)
class LinearInterpolant:
    """Piecewise-linear interpolant f̃ of a sampled path."""

    base: SampledPath

    @property
    def grid(self):
        return self.base.grid

    @property
    def increments(self) -> np.ndarray:
        """f_{n+1} − f_n for n = 0..N−1."""
        return np.diff(self.base.values, axis=0)

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        times = self.grid.times()
        if np.any(t < -1e-12) or np.any(t > times[-1] * (1.0 + 1e-12)):
            raise DomainError('interpolant evaluated outside [0, T]')
        values = self.base.values
        cell = np.clip(np.searchsorted(times, t, side='right') - 1, 0, self.grid.n_steps - 1)
        theta = (t - times[cell]) / self.grid.tau
        theta = theta.reshape(theta.shape + (1,) * (values.ndim - 1))
        out = values[cell] + theta * (values[cell + 1] - values[cell])
        at_right_node = (t == times[cell + 1]).reshape(theta.shape)
        return np.where(at_right_node, values[cell + 1], out)


def _check_fractional(alpha: float) -> FractionalOrder:
    order = FractionalOrder.coerce(alpha)
    if order.is_classical:
        raise DomainError('the interpolant closed form needs alpha < 1; use the slope for alpha = 1')
    return order


def _kernel(rho: np.ndarray, n_steps: int, alpha: float) -> np.ndarray:
    """K[i, n] = g_n − g_{n+1} at ρ_i = t_i/τ, with g_n = (ρ − n)_+^{1−α}."""
    shifted = np.maximum(rho[:, None] - np.arange(n_steps + 1)[None, :], 0.0)
    g = shifted ** (1.0 - alpha)
    return g[:, :-1] - g[:, 1:]


def interpolant_caputo(interp: LinearInterpolant, alpha: float, t) -> np.ndarray:
    """D^α_t f̃(t) = τ^{−α}/Γ_{1−α} Σ_n (f_{n+1} − f_n)/(1 − α) (g_n(t) − g_{n+1}(t))."""
    order = _check_fractional(alpha)
    grid = interp.grid
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0.0) or np.any(t > grid.horizon * (1.0 + 1e-12)):
        raise DomainError('t outside [0, T]')
    kernel = _kernel(t / grid.tau, grid.n_steps, order.alpha)
    factor = grid.tau ** (-order.alpha) / (order.gamma_complement * (1.0 - order.alpha))
    return factor * np.tensordot(kernel, interp.increments, axes=1)


@lru_cache(maxsize=16)
def _evaluation_mesh(n_steps: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss nodes (in units of τ) on SUBCELLS sub-cells per cell, with weights."""
    nodes, weights = gauss_legendre(SUBCELL_POINTS)
    edges = np.linspace(0.0, n_steps, n_steps * SUBCELLS + 1)
    width = np.diff(edges)[:, None]
    rho = (edges[:-1, None] + width * nodes[None, :]).ravel()
    w = (width * weights[None, :]).ravel()
    return rho, w


@lru_cache(maxsize=16)
def _mesh_kernels(n_steps: int, alpha: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rho, w = _evaluation_mesh(n_steps)
    edges = np.linspace(0.0, n_steps, n_steps * SUBCELLS + 1)
    return _kernel(rho, n_steps, alpha), w, _kernel(edges, n_steps, alpha)


def interpolant_caputo_norm(interp: LinearInterpolant, alpha: float, p: float) -> float:
    """‖D^α_t f̃‖_{L^p(0,T;Y)} on the sub-cell mesh; L^∞ also samples sub-cell edges."""
    order = _check_fractional(alpha)
    grid = interp.grid
    gauss_kernel, w, edge_kernel = _mesh_kernels(grid.n_steps, order.alpha)
    factor = grid.tau ** (-order.alpha) / (order.gamma_complement * (1.0 - order.alpha))
    at_nodes = interp.base.norm(factor * np.tensordot(gauss_kernel, interp.increments, axes=1))
    if np.isinf(p):
        at_edges = interp.base.norm(factor * np.tensordot(edge_kernel, interp.increments, axes=1))
        return float(max(np.max(at_nodes), np.max(at_edges)))
    return float((grid.tau * (w @ at_nodes ** p)) ** (1.0 / p))
