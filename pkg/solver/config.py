from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

from caputo.exceptions import DomainError
from caputo.grids import FractionalOrder, TimeGrid
from caputo.weights import CaputoWeights, build_weights, caputo_scale
from spectral.fields import TorusGrid

REFINEMENT_KNOBS = ('tau', 'eps', 'rho')


def _positive(name: str, value) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f'{name} must be a positive number, got {value!r}')
    return value


def _non_negative(name: str, value) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise DomainError(f'{name} must be a non-negative number, got {value!r}')
    return value


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one implicit run.

    ``rho`` is the density viscosity ϱ, ``eps`` the pressure viscosity ε and
    ``s`` the order of the fractional Laplacian acting on the pressure.
    """

    alpha: FractionalOrder
    s: float
    grid: TorusGrid
    time: TimeGrid
    rho: float = 0.0
    eps: float = 0.0
    picard_tol: float = 1e-10
    picard_max: int = 200
    picard_damping: float = 1.0
    clip_negative: bool = False
    tol_pos: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, 'alpha', FractionalOrder.coerce(self.alpha))
        s = float(self.s)
        if not math.isfinite(s) or not 0.0 < s <= 1.0:
            raise DomainError(f's must lie in (0, 1], got {self.s!r}')
        object.__setattr__(self, 's', s)
        object.__setattr__(self, 'rho', _non_negative('rho', self.rho))
        object.__setattr__(self, 'eps', _non_negative('eps', self.eps))
        object.__setattr__(self, 'picard_tol', _positive('picard_tol', self.picard_tol))
        object.__setattr__(self, 'tol_pos', _positive('tol_pos', self.tol_pos))
        if int(self.picard_max) != self.picard_max or self.picard_max < 1:
            raise DomainError(f'picard_max must be an integer >= 1, got {self.picard_max!r}')
        object.__setattr__(self, 'picard_max', int(self.picard_max))
        damping = float(self.picard_damping)
        if not 0.0 < damping <= 1.0:
            raise DomainError(f'picard_damping must lie in (0, 1], got {self.picard_damping!r}')
        object.__setattr__(self, 'picard_damping', damping)
        object.__setattr__(self, 'clip_negative', bool(self.clip_negative))

    @property
    def tau(self) -> float:
        return self.time.tau

    @property
    def n_steps(self) -> int:
        return self.time.n_steps

    @property
    def horizon(self) -> float:
        return self.time.horizon

    @cached_property
    def weights(self) -> CaputoWeights:
        return build_weights(self.alpha, self.n_steps)

    @cached_property
    def memory_scale(self) -> float:
        """Γ_α τ^{−α}."""
        return caputo_scale(self.alpha, self.tau)

    def knob_value(self, knob: str) -> float:
        if knob not in REFINEMENT_KNOBS:
            raise DomainError(f'unknown refinement knob {knob!r}; choose from {REFINEMENT_KNOBS}')
        return self.tau if knob == 'tau' else getattr(self, knob)

    def refined(self, knob: str) -> 'SolverConfig':
        """Halve one of τ, ε or ϱ; τ keeps the horizon fixed."""
        self.knob_value(knob)
        if knob == 'tau':
            return replace(self, time=self.time.refined(2))
        return replace(self, **{knob: getattr(self, knob) / 2.0})
