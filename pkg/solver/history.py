from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np

from caputo.exceptions import GridMismatch
from spectral.fields import GridField

from .config import SolverConfig


@dataclass(frozen=True)
class StepReport:
    k: int
    picard_iters: int
    picard_residual: float
    min_u: float
    min_p: float
    mean_u: float
    weak_residual: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class History:
    """u_0..u_N and p_0..p_N of one run; index 0 holds the initial data.

    Samples are kept in two preallocated arrays because every step reads the
    whole past through the Caputo memory sum.
    """

    config: SolverConfig
    u: np.ndarray
    p: np.ndarray
    filled: int = 0
    reports: List[StepReport] = field(default_factory=list)
    certified: bool = True

    @classmethod
    def start(cls, config: SolverConfig, u_in: GridField, p_in: GridField) -> 'History':
        for name, f in (('u_in', u_in), ('p_in', p_in)):
            if f.grid != config.grid:
                raise GridMismatch(f'{name} lives on {f.grid}, the run uses {config.grid}')
        shape = (config.n_steps + 1,) + config.grid.shape
        history = cls(config=config, u=np.zeros(shape), p=np.zeros(shape))
        history.u[0] = u_in.samples
        history.p[0] = p_in.samples
        history.filled = 1
        return history

    @property
    def last_step(self) -> int:
        return self.filled - 1

    @property
    def complete(self) -> bool:
        return self.filled == self.config.n_steps + 1

    def append(self, u_k: GridField, p_k: GridField, report: StepReport) -> None:
        k = self.filled
        if report.k != k or k > self.config.n_steps:
            raise GridMismatch(f'history expects step {k}, got {report.k}')
        self.u[k] = u_k.samples
        self.p[k] = p_k.samples
        self.reports.append(report)
        self.filled = k + 1

    def u_field(self, k: int) -> GridField:
        return GridField(self.config.grid, self.u[k])

    def p_field(self, k: int) -> GridField:
        return GridField(self.config.grid, self.p[k])

    @property
    def u_steps(self) -> List[GridField]:
        return [self.u_field(k) for k in range(self.filled)]

    @property
    def p_steps(self) -> List[GridField]:
        return [self.p_field(k) for k in range(self.filled)]
