"""JSON run configurations.

A document looks like::

    {
        "alpha": 0.5, "s": 0.75, "dim": 1, "points": 64,
        "horizon": 0.5, "tau": 0.015625, "rho": 0.01, "eps": 0.01,
        "u_in": {"offset": 1.0, "modes": [[[1], 0.5]]},
        "p_in": {"offset": 1.0, "modes": [[[1], 0.3]]},
        "snapshot_every": 8
    }

``u_in`` and ``p_in`` are cosine series offset + Σ a·cos(n·x).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from django.conf import settings

from caputo.exceptions import CaputoError
from caputo.grids import TimeGrid
from solver.config import SolverConfig
from solver.stepping import check_initial_data
from spectral.fields import GridField, TorusGrid, cosine_series

from .forms import RunConfigForm
from .rng import resolve_seed

logger = logging.getLogger('cli')


class RunConfigError(CaputoError):
    """The run configuration could not be read or failed validation."""

    def __init__(self, message: str, errors: Optional[dict] = None):
        self.errors = errors or {}
        super().__init__(message)


@dataclass(frozen=True)
class InitialSeries:
    offset: float
    modes: tuple

    def field(self, grid: TorusGrid) -> GridField:
        return cosine_series(grid, self.offset, self.modes)


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig
    u_in: InitialSeries
    p_in: InitialSeries
    snapshot_every: int = 0
    seed: int = 42
    output_dir: Optional[Path] = None

    def initial_fields(self) -> tuple[GridField, GridField]:
        grid = self.solver.grid
        return self.u_in.field(grid), self.p_in.field(grid)


def parse_run_config(document) -> RunConfig:
    """Validate a decoded JSON document; initial data are checked for positivity here."""
    if not isinstance(document, dict):
        raise RunConfigError('run configuration must be a JSON object')
    form = RunConfigForm(data=document)
    if not form.is_valid():
        errors = {name: [str(e) for e in errs] for name, errs in form.errors.items()}
        details = '; '.join(f'{name}: {" ".join(msgs)}' for name, msgs in errors.items())
        raise RunConfigError(f'invalid run configuration ({details})', errors)
    data = form.cleaned_data
    try:
        solver = SolverConfig(
            alpha=data['alpha'],
            s=data['s'],
            grid=TorusGrid(data['dim'], data['points']),
            time=TimeGrid.from_horizon(data['horizon'], data['n_steps']),
            **form.solver_options(),
        )
    except CaputoError as exc:
        raise RunConfigError(f'invalid run configuration ({exc})') from exc
    config = RunConfig(
        solver=solver,
        u_in=InitialSeries(data['u_in']['offset'], tuple(data['u_in']['modes'])),
        p_in=InitialSeries(data['p_in']['offset'], tuple(data['p_in']['modes'])),
        snapshot_every=data.get('snapshot_every') or 0,
        seed=resolve_seed(data.get('seed')),
        output_dir=Path(data['output_dir']) if data.get('output_dir') else None,
    )
    check_initial_data(solver, *config.initial_fields())
    return config


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except OSError as exc:
        raise RunConfigError(f'cannot read {path}: {exc}') from exc
    except json.JSONDecodeError as exc:
        raise RunConfigError(f'{path} is not valid JSON: {exc}') from exc
    logger.debug('Loaded run configuration from %s', path)
    return parse_run_config(document)


def output_directory(option: Optional[str], config: Optional[RunConfig] = None) -> Path:
    """--out wins, then the config's output_dir, then FRACPME_OUTPUT_DIR."""
    if option:
        return Path(option)
    if config is not None and config.output_dir is not None:
        return config.output_dir
    return Path(getattr(settings, 'FRACPME_OUTPUT_DIR', 'runs'))
