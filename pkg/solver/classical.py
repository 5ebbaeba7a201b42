"""Backward Euler for the memory-free system with α = 1, s = 1 and ϱ = ε = 0.

One-dimensional and assembled from dense circulant matrices on the nodes:
periodic spectral differentiation and the two-thirds projection are written
in real space, and the pressure equation (I/τ − D²)p = P(z²) + p_{k−1}/τ is
solved by one LU factorisation. Nothing here goes through a Fourier
transform, so a run of :func:`solver.stepping.run` in the same limit can be
checked against it.
"""
from __future__ import annotations

import logging
import math
from typing import List, Tuple

import numpy as np
from scipy import linalg

from caputo.exceptions import DomainError

from .exceptions import NonConvergence

logger = logging.getLogger('solver')


def differentiation_matrix(points: int) -> np.ndarray:
    """D[i, j] = ½(−1)^{i−j} cot((x_i − x_j)/2) off the diagonal, 0 on it.

    Exact on trigonometric polynomials of degree < M/2; the Nyquist mode is
    mapped to zero.
    """
    if points < 2 or points % 2:
        raise DomainError(f'differentiation needs an even number of nodes, got {points!r}')
    offsets = np.arange(1, points)
    column = np.zeros(points)
    column[1:] = 0.5 * (-1.0) ** offsets / np.tan(offsets * math.pi / points)
    return linalg.circulant(column)


def projection_matrix(points: int) -> np.ndarray:
    """Orthogonal projection onto the modes |n| ≤ M/3, as a node-to-node matrix."""
    cutoff = int(math.floor(points / 3.0))
    offsets = 2.0 * math.pi * np.arange(points) / points
    modes = np.arange(1, cutoff + 1)
    column = (1.0 + 2.0 * np.cos(np.outer(offsets, modes)).sum(axis=1)) / points
    return linalg.circulant(column)


def backward_euler_reference(u0: np.ndarray, p0: np.ndarray, tau: float, n_steps: int,
                             tol: float = 1e-13, max_iter: int = 500) -> List[Tuple[np.ndarray, np.ndarray]]:
    """(u_k, p_k) for k = 1..n_steps from node values u0, p0 on [0, 2π)."""
    u = np.array(u0, dtype=float)
    p = np.array(p0, dtype=float)
    if u.ndim != 1 or u.shape != p.shape:
        raise DomainError(f'backward Euler reference takes two equal 1-d arrays, got {u.shape} and {p.shape}')
    points = u.size
    spacing = 2.0 * math.pi / points
    d = differentiation_matrix(points)
    project = projection_matrix(points)
    pressure = linalg.lu_factor(np.eye(points) / tau - d @ d)

    out = []
    for step in range(1, n_steps + 1):
        z = u.copy()
        changes = []
        for _ in range(max_iter):
            p_next = linalg.lu_solve(pressure, project @ (z * z) + p / tau)
            flux = project @ (np.maximum(z, 0.0) * (d @ p_next))
            z_next = u + tau * (d @ flux)
            changes.append(math.sqrt(spacing * np.sum((z_next - z) ** 2)))
            z = z_next
            if changes[-1] <= tol:
                break
        else:
            raise NonConvergence(step, changes)
        u = z
        p = linalg.lu_solve(pressure, project @ (u * u) + p / tau)
        out.append((u.copy(), p.copy()))
    logger.debug('backward Euler reference: %d steps of tau=%.6g on %d nodes', n_steps, tau, points)
    return out
