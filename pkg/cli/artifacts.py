"""Files written by the commands: CSV tables, JSON summaries and FLD1 snapshots."""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List

from caputo.weights import CaputoWeights
from solver.history import History
from solver.refinement import RefinementReport
from spectral.snapshots import write_snapshot

logger = logging.getLogger('cli')

REFINE_COLUMNS = ('level', 'value', 'diff_u', 'diff_p', 'psi')


def _fmt(value) -> str:
    if value is None:
        return ''
    return f'{float(value):.17g}'


def _write_rows(path: Path, header: Iterable[str], rows: Iterable[Iterable[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='ascii') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_weights_csv(path, weights: CaputoWeights) -> Path:
    rows = ((str(k), _fmt(weights.lam(k))) for k in range(1, weights.n + 1))
    return _write_rows(path, ('k', 'lambda_k'), rows)


def write_refinement_csv(path, report: RefinementReport) -> Path:
    rows = (
        (str(lvl.level), _fmt(lvl.value), _fmt(lvl.diff_u), _fmt(lvl.diff_p), _fmt(lvl.psi))
        for lvl in report.levels
    )
    return _write_rows(path, REFINE_COLUMNS, rows)


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    return path


def snapshot_steps(n_steps: int, every: int) -> List[int]:
    """Steps 0, every, 2·every, … plus the final step; empty when ``every`` is 0."""
    if every <= 0:
        return []
    steps = list(range(0, n_steps + 1, every))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def write_snapshots(directory, history: History, every: int) -> List[Path]:
    directory = Path(directory)
    times = history.config.time.times()
    written = []
    for k in snapshot_steps(history.last_step, every):
        written.append(write_snapshot(directory / f'u_{k}.fld', history.u_field(k), times[k]))
        written.append(write_snapshot(directory / f'p_{k}.fld', history.p_field(k), times[k]))
    logger.debug('Wrote %d snapshots to %s', len(written), directory)
    return written
