"""Refinement studies in τ, ε or ϱ.

Each level halves the chosen knob and reruns the solver; consecutive levels
are compared in L²(0,T;L²) with both runs read as piecewise-constant in time.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from caputo.exceptions import DomainError, GridMismatch
from spectral.fields import GridField

from .config import REFINEMENT_KNOBS, SolverConfig
from .history import History
from .stepping import run

logger = logging.getLogger('solver')

CONTRACT_SLACK = 1e-9
CONTRACT_FLOOR = 1e-13


@dataclass(frozen=True)
class RefinementLevel:
    level: int
    value: float
    diff_u: Optional[float]
    diff_p: Optional[float]
    psi: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class RefinementReport:
    knob: str
    levels: List[RefinementLevel] = field(default_factory=list)

    @property
    def diffs_u(self) -> list[float]:
        return [lvl.diff_u for lvl in self.levels[1:]]

    @property
    def diffs_p(self) -> list[float]:
        return [lvl.diff_p for lvl in self.levels[1:]]

    @property
    def non_increasing(self) -> bool:
        """Last difference ≤ the one before it, for u and for p."""
        for diffs in (self.diffs_u, self.diffs_p):
            if len(diffs) < 2:
                continue
            previous, last = diffs[-2], diffs[-1]
            if last > previous * (1.0 + CONTRACT_SLACK) + CONTRACT_FLOOR:
                return False
        return True


def psi_value(history: History) -> float:
    """Σ_k τ ∫ u_k², the u² functional tested against ψ ≡ 1."""
    config = history.config
    squares = np.sum(history.u[1:history.filled] ** 2, axis=tuple(range(1, history.u.ndim)))
    return float(config.tau * config.grid.cell_volume * np.sum(squares))


def _l2_time_difference(coarse: np.ndarray, fine: np.ndarray, tau_coarse: float,
                        tau_fine: float, cell_volume: float) -> float:
    """‖a − b‖_{L²(0,T;L²)} for step functions with values on (t_{k−1}, t_k]."""
    ratio = int(round(tau_coarse / tau_fine))
    if (coarse.shape[0] - 1) * ratio != fine.shape[0] - 1:
        raise GridMismatch('refinement levels do not cover the same horizon')
    expanded = np.repeat(coarse[1:], ratio, axis=0)
    diff = expanded - fine[1:]
    total = tau_fine * cell_volume * np.sum(diff ** 2)
    return float(np.sqrt(total))


def level_difference(a: History, b: History) -> tuple[float, float]:
    """(diff_u, diff_p) between two runs on the same torus, b's time grid at least as fine."""
    if a.config.grid != b.config.grid:
        raise GridMismatch('refinement levels must share the spatial grid')
    volume = a.config.grid.cell_volume
    args = (a.config.tau, b.config.tau, volume)
    return (_l2_time_difference(a.u, b.u, *args), _l2_time_difference(a.p, b.p, *args))


def refinement_study(config: SolverConfig, u_in: GridField, p_in: GridField,
                     knob: str, levels: int) -> RefinementReport:
    if knob not in REFINEMENT_KNOBS:
        raise DomainError(f'unknown refinement knob {knob!r}; choose from {REFINEMENT_KNOBS}')
    if int(levels) != levels or levels < 2:
        raise DomainError(f'a refinement study needs at least 2 levels, got {levels!r}')

    report = RefinementReport(knob=knob)
    previous: Optional[History] = None
    current = config
    for level in range(int(levels)):
        history, _ = run(current, u_in, p_in)
        diff_u = diff_p = None
        if previous is not None:
            diff_u, diff_p = level_difference(previous, history)
        report.levels.append(RefinementLevel(
            level=level,
            value=current.knob_value(knob),
            diff_u=diff_u,
            diff_p=diff_p,
            psi=psi_value(history),
        ))
        logger.info('Refinement %s level %d: value=%.6g diff_u=%s diff_p=%s',
                    knob, level, current.knob_value(knob), diff_u, diff_p)
        previous = history
        current = current.refined(knob)
    return report
