from __future__ import annotations

from functools import lru_cache
from typing import Callable, Tuple

import numpy as np

from ..exceptions import DomainError
from ..grids import TimeGrid


@lru_cache(maxsize=None)
def gauss_legendre(points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes and weights mapped to [0, 1] (weights sum to 1)."""
    if points < 1:
        raise DomainError(f'need at least one Gauss point, got {points}')
    x, w = np.polynomial.legendre.leggauss(points)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def composite_rule(a: float, b: float, cells: int, points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss–Legendre rule on ``cells`` equal cells of [a, b]."""
    nodes, weights = gauss_legendre(points)
    edges = np.linspace(a, b, cells + 1)
    width = np.diff(edges)[:, None]
    x = edges[:-1, None] + width * nodes[None, :]
    w = width * weights[None, :]
    return x.ravel(), w.ravel()


def graded_rule(length: float, beta: float, cells: int, points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rule for ∫_0^length g(r)·r^{−beta} dr with 0 ≤ beta < 1.

    The mesh r = length·v^q, q = 1/(1 − beta), clusters at r = 0; its Jacobian
    cancels r^{−beta} exactly, so the returned weights already carry the
    kernel and only the smooth factor g is evaluated at the nodes.
    """
    if not 0.0 <= beta < 1.0:
        raise DomainError(f'kernel exponent must lie in [0, 1), got {beta}')
    if length <= 0.0:
        return np.zeros(0), np.zeros(0)
    q = 1.0 / (1.0 - beta)
    v, wv = composite_rule(0.0, 1.0, cells, points)
    r = length * v ** q
    w = wv * q * length ** (1.0 - beta)
    return r, w


def cell_integrals(phi: Callable, grid: TimeGrid, points: int = 8) -> np.ndarray:
    """Φ_k = ∫_{t_{k−1}}^{t_k} φ for k = 1..N.

    Uses the exact antiderivative when ``phi`` carries one, otherwise
    ``points``-point Gauss–Legendre per cell.
    """
    antiderivative = getattr(phi, 'antiderivative', None)
    times = grid.times()
    if antiderivative is not None:
        primitive = np.broadcast_to(np.asarray(antiderivative(times), dtype=float), times.shape)
        return np.diff(primitive)
    nodes, weights = gauss_legendre(points)
    x = times[:-1, None] + grid.tau * nodes[None, :]
    values = np.broadcast_to(np.asarray(phi(x), dtype=float), x.shape)
    return grid.tau * values @ weights
