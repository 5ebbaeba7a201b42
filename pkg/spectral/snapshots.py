"""FLD1 field snapshots.

An ASCII header line ``FLD1 d=<dim> M=<points> t=<time>`` is followed by the
node values as little-endian float64 in row-major order.
"""
from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np

from caputo.exceptions import DomainError, GridMismatch

from .fields import GridField, TorusGrid

logger = logging.getLogger('spectral')

MAGIC = 'FLD1'
HEADER_RE = re.compile(rb'^FLD1 d=(?P<dim>\d+) M=(?P<points>\d+) t=(?P<time>\S+)\n')


def snapshot_header(field: GridField, t: float) -> bytes:
    return f'{MAGIC} d={field.grid.dim} M={field.grid.points} t={float(t):.17g}\n'.encode('ascii')


def write_snapshot(path, field: GridField, t: float) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = np.ascontiguousarray(field.samples, dtype='<f8').tobytes(order='C')
    path.write_bytes(snapshot_header(field, t) + payload)
    logger.debug('Wrote snapshot %s (t=%s)', path, t)
    return path


def read_snapshot(path) -> tuple[GridField, float]:
    raw = Path(path).read_bytes()
    match = HEADER_RE.match(raw)
    if match is None:
        raise DomainError(f'{path} is not an FLD1 snapshot')
    grid = TorusGrid(dim=int(match['dim']), points=int(match['points']))
    try:
        t = float(match['time'])
    except ValueError:
        raise DomainError(f'{path} has an unreadable time stamp') from None
    body = raw[match.end():]
    if len(body) != 8 * grid.size:
        raise GridMismatch(f'{path} holds {len(body)} bytes of data, expected {8 * grid.size}')
    values = np.frombuffer(body, dtype='<f8').reshape(grid.shape)
    return GridField(grid, values), t
