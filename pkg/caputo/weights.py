from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from django.conf import settings
from scipy import special

from .exceptions import DomainError, GridMismatch
from .grids import FractionalOrder, TimeGrid
from .utils.quadrature import cell_integrals

logger = logging.getLogger('caputo')


def gamma_fn(x: float) -> float:
    """Γ(x) for x > 0."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f'gamma_fn is defined for x > 0 only, got {x!r}')
    return float(special.gamma(x))


def caputo_scale(order: FractionalOrder, tau: float) -> float:
    """Γ_α·τ^{−α}, the factor in front of every discrete Caputo sum."""
    return order.gamma * tau ** (-order.alpha)


def ftc_scale(order: FractionalOrder, tau: float) -> float:
    """τ^α/Γ_α, the factor of the discrete fundamental theorem of calculus."""
    return tau ** order.alpha / order.gamma


def ftc_kernel(order: FractionalOrder, n: int) -> np.ndarray:
    """a_m = m^{α−1} for m = 1..n."""
    return np.arange(1, n + 1, dtype=float) ** (order.alpha - 1.0)


def ftc_kernel_sum(order: FractionalOrder | float, n: int) -> float:
    """Σ_{k=1}^n k^{α−1}."""
    order = FractionalOrder.coerce(order)
    return float(np.sum(ftc_kernel(order, n)))


@dataclass(frozen=True)
class CaputoWeights:
    """λ_1..λ_N for one fractional order (``lambdas[k - 1]`` is λ_k)."""

    order: FractionalOrder
    lambdas: np.ndarray

    def __post_init__(self):
        lambdas = np.array(self.lambdas, dtype=float, copy=True)
        if lambdas.ndim != 1 or lambdas.size < 1:
            raise GridMismatch('weight table must be a non-empty 1-D sequence')
        lambdas.setflags(write=False)
        object.__setattr__(self, 'lambdas', lambdas)

    @property
    def alpha(self) -> float:
        return self.order.alpha

    @property
    def n(self) -> int:
        return int(self.lambdas.size)

    def __len__(self) -> int:
        return self.n

    def lam(self, k: int) -> float:
        if not 1 <= k <= self.n:
            raise DomainError(f'λ index {k} outside 1..{self.n}')
        return float(self.lambdas[k - 1])


@lru_cache(maxsize=32)
def _lambda_table(alpha: float, n: int) -> np.ndarray:
    lambdas = np.zeros(n, dtype=float)
    lambdas[0] = 1.0
    if alpha == 1.0:
        lambdas.setflags(write=False)
        return lambdas
    # a[m - 1] = m^{α−1}
    a = np.arange(1, n + 1, dtype=float) ** (alpha - 1.0)
    for k in range(1, n):
        history = lambdas[k - 1::-1]
        # both sums are accumulated before the single subtraction
        lambdas[k] = a[:k] @ history - a[1:k + 1] @ history
    lambdas.setflags(write=False)
    return lambdas


def build_weights(order: FractionalOrder | float, n: int, max_n: Optional[int] = None) -> CaputoWeights:
    """λ_1 = 1, λ_{k+1} = Σ_{j=1}^k ((k−j+1)^{α−1} − (k−j+2)^{α−1}) λ_j.

    Cost is O(n²); ``n`` is capped by ``FRACPME_MAX_WEIGHTS`` unless ``max_n``
    is passed. Tables are cached per (α, n) and returned read-only.
    """
    order = FractionalOrder.coerce(order)
    if int(n) != n or n < 1:
        raise DomainError(f'weight count must be an integer >= 1, got {n!r}')
    cap = max_n if max_n is not None else getattr(settings, 'FRACPME_MAX_WEIGHTS', 100_000)
    if n > cap:
        raise DomainError(f'{n} weights requested, cap is {cap} (raise FRACPME_MAX_WEIGHTS)')
    if n > 20_000:
        logger.info('Building %d Caputo weights for alpha=%s (O(n^2) recurrence)', n, order.alpha)
    return CaputoWeights(order=order, lambdas=_lambda_table(order.alpha, int(n)))


def weight_identity_residuals(weights: CaputoWeights) -> np.ndarray:
    """Σ_{j=1}^i (i−j+1)^{α−1} λ_j − 1 for i = 1..N."""
    a = ftc_kernel(weights.order, weights.n)
    lam = weights.lambdas
    out = np.empty(weights.n, dtype=float)
    for i in range(1, weights.n + 1):
        out[i - 1] = a[:i] @ lam[i - 1::-1] - 1.0
    return out


def weight_density(weights: CaputoWeights, grid: TimeGrid, t: float) -> float:
    """λ^{(τ)}(t) = τ^{−α} λ_{⌈t/τ⌉} for 0 < t ≤ horizon."""
    if not 0.0 < t <= grid.horizon * (1.0 + 1e-12):
        raise DomainError(f't={t} outside (0, {grid.horizon}]')
    k = min(max(int(math.ceil(t / grid.tau - 1e-9)), 1), grid.n_steps)
    if k > weights.n:
        raise GridMismatch(f'density needs λ_{k}, table holds {weights.n}')
    return grid.tau ** (-weights.alpha) * float(weights.lambdas[k - 1])


def integrate_weight_density(weights: CaputoWeights, grid: TimeGrid, phi: Callable) -> float:
    """∫_0^T λ^{(τ)}(t) φ(t) dt, exact on the piecewise-constant density."""
    if weights.n < grid.n_steps:
        raise GridMismatch(f'grid has {grid.n_steps} cells, table holds {weights.n}')
    cells = cell_integrals(phi, grid)
    return grid.tau ** (-weights.alpha) * float(weights.lambdas[:grid.n_steps] @ cells)
