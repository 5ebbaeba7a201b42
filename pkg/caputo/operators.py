"""Discrete Caputo operators on uniformly sampled paths.

With d_j = f_{j+1} − f_j and c = Γ_α τ^{−α}:

    (D f)_k  = c Σ_{j=0}^{k−1} λ_{k−j} d_j          k = 1..N,  (D f)_0 = 0
    (*D f)_k = c Σ_{j=k+1}^{N} λ_{j−k} d_{j−1}      k = 0..N−1, (*D f)_N = 0

The reconstructions invert them exactly:

    f_n = f_0 + (τ^α/Γ_α) Σ_{k=1}^n (n−k+1)^{α−1} (D f)_k
    f_n = f_N − (τ^α/Γ_α) Σ_{k=n}^{N−1} (k−n+1)^{α−1} (*D f)_k
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import DomainError, GridMismatch
from .grids import SampledPath
from .utils.quadrature import cell_integrals
from .weights import CaputoWeights, caputo_scale, ftc_kernel, ftc_scale


def _require_weights(path: SampledPath, weights: CaputoWeights) -> None:
    if weights.n < path.n_steps:
        raise GridMismatch(
            f'path has {path.n_steps} steps but only {weights.n} weights were built'
        )


def _require_scalar(path: SampledPath, what: str) -> None:
    if not path.is_scalar:
        raise DomainError(f'{what} is defined for scalar paths only')


def left_caputo(path: SampledPath, weights: CaputoWeights) -> SampledPath:
    _require_weights(path, weights)
    n = path.n_steps
    diffs = np.diff(path.values, axis=0)
    lam = weights.lambdas
    scale = caputo_scale(weights.order, path.grid.tau)
    out = np.zeros(path.values.shape, dtype=float)
    for k in range(1, n + 1):
        out[k] = scale * np.tensordot(lam[k - 1::-1], diffs[:k], axes=1)
    return path.with_values(out)


def right_caputo(path: SampledPath, weights: CaputoWeights) -> SampledPath:
    _require_weights(path, weights)
    n = path.n_steps
    diffs = np.diff(path.values, axis=0)
    lam = weights.lambdas
    scale = caputo_scale(weights.order, path.grid.tau)
    out = np.zeros(path.values.shape, dtype=float)
    for k in range(n):
        out[k] = scale * np.tensordot(lam[:n - k], diffs[k:], axes=1)
    return path.with_values(out)


def ftc_reconstruct_forward(df: SampledPath, f_in, weights: CaputoWeights) -> SampledPath:
    """Rebuild f from left-Caputo values (index 0 of ``df`` is ignored)."""
    _require_weights(df, weights)
    n = df.n_steps
    f_in = np.asarray(f_in, dtype=float)
    if f_in.shape != df.values.shape[1:]:
        raise GridMismatch(f'initial value shape {f_in.shape} does not match {df.values.shape[1:]}')
    kernel = ftc_kernel(weights.order, n)
    scale = ftc_scale(weights.order, df.grid.tau)
    out = np.empty(df.values.shape, dtype=float)
    out[0] = f_in
    for m in range(1, n + 1):
        out[m] = f_in + scale * np.tensordot(kernel[m - 1::-1], df.values[1:m + 1], axes=1)
    return df.with_values(out)


def ftc_reconstruct_backward(rdf: SampledPath, f_end, weights: CaputoWeights) -> SampledPath:
    """Rebuild f from right-Caputo values (index N of ``rdf`` is ignored)."""
    _require_weights(rdf, weights)
    n = rdf.n_steps
    f_end = np.asarray(f_end, dtype=float)
    if f_end.shape != rdf.values.shape[1:]:
        raise GridMismatch(f'end value shape {f_end.shape} does not match {rdf.values.shape[1:]}')
    kernel = ftc_kernel(weights.order, n)
    scale = ftc_scale(weights.order, rdf.grid.tau)
    out = np.empty(rdf.values.shape, dtype=float)
    out[n] = f_end
    for m in range(n):
        out[m] = f_end - scale * np.tensordot(kernel[:n - m], rdf.values[m:n], axes=1)
    return rdf.with_values(out)


def caputo_square_gap(path: SampledPath, weights: CaputoWeights, k: int) -> float:
    """f_k (D f)_k − ½ (D f²)_k, non-negative for every real path."""
    _require_scalar(path, 'caputo_square_gap')
    _require_weights(path, weights)
    if not 1 <= k <= path.n_steps:
        raise DomainError(f'index {k} outside 1..{path.n_steps}')
    values = path.values
    lam = weights.lambdas[k - 1::-1]
    scale = caputo_scale(weights.order, path.grid.tau)
    derivative = scale * (lam @ np.diff(values[:k + 1]))
    square_derivative = scale * (lam @ np.diff(values[:k + 1] ** 2))
    return float(values[k] * derivative - 0.5 * square_derivative)


def nonpositive_derivative_bound(df: SampledPath, f_in, weights: CaputoWeights) -> float:
    """max_k f_k − f_0 for the path reconstructed from ``df``.

    Non-positive derivative data must give a non-positive result.
    """
    path = ftc_reconstruct_forward(df, f_in, weights)
    return float(np.max(path.values[1:] - path.values[0]))


@dataclass(frozen=True)
class IbpTerms:
    """The four sums of the discrete integration-by-parts identity.

    lhs = interior + end − start, with
        lhs      = Σ_k Φ_k (D f)_k
        interior = c Σ_{k=1}^{N−1} f_k Σ_{j=k+1}^N λ_{j−k}(Φ_{j−1} − Φ_j)
        end      = c Φ_N Σ_{j=1}^N λ_{N−j+1} f_j
        start    = c f_0 Σ_{k=1}^N λ_k Φ_k
    """

    lhs: float
    interior: float
    end: float
    start: float

    @property
    def rhs(self) -> float:
        return self.interior + self.end - self.start

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def scale(self) -> float:
        return max(1.0, abs(self.lhs), abs(self.interior), abs(self.end), abs(self.start))


def discrete_ibp_terms(f: SampledPath, phi: Callable, weights: CaputoWeights) -> IbpTerms:
    _require_scalar(f, 'discrete integration by parts')
    _require_weights(f, weights)
    n = f.n_steps
    cells = cell_integrals(phi, f.grid)
    lam = weights.lambdas[:n]
    scale = caputo_scale(weights.order, f.grid.tau)
    values = f.values

    lhs = float(cells @ left_caputo(f, weights).values[1:])

    # cells[j - 1] is Φ_j
    interior = 0.0
    for k in range(1, n):
        jumps = cells[k - 1:n - 1] - cells[k:n]
        interior += values[k] * (lam[:n - k] @ jumps)
    interior *= scale
    end = scale * cells[n - 1] * (lam[::-1] @ values[1:])
    start = scale * values[0] * (lam @ cells)
    return IbpTerms(lhs=lhs, interior=float(interior), end=float(end), start=float(start))


def discrete_ibp_residual(f: SampledPath, phi: Callable, weights: CaputoWeights) -> float:
    """|LHS − RHS| of the discrete integration-by-parts identity."""
    return discrete_ibp_terms(f, phi, weights).residual
