"""Verification suites run by ``manage.py verify``.

Each suite returns a list of Check records; a suite passes when every check
does. Random instances come from the seeded generator handed in, so a seed
reproduces a summary exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from caputo.exceptions import DomainError
from caputo.grids import SampledPath, TimeGrid
from caputo.operators import (
    caputo_square_gap,
    discrete_ibp_terms,
    ftc_reconstruct_backward,
    ftc_reconstruct_forward,
    left_caputo,
    nonpositive_derivative_bound,
    right_caputo,
)
from caputo.weights import CaputoWeights, build_weights, caputo_scale, weight_identity_residuals
from compactness.interpolants import LinearInterpolant
from compactness.shifts import (
    constant_to_piecewise_gap,
    empirical_shift_constant,
    interpolant_shift_check,
    mu_coefficient_scan,
    mu_envelope,
    piecewise_shift_check,
)
from oracle.functions import SmoothFunction
from oracle.integrals import continuous_left_caputo, ibp_continuous_residual
from solver.classical import backward_euler_reference
from solver.config import REFINEMENT_KNOBS, SolverConfig
from solver.exceptions import SolverError
from solver.ledger import diagnostics
from solver.refinement import refinement_study
from solver.stepping import run
from spectral.fields import GridField, TorusGrid, cosine_series
from spectral.operators import dealiased, frac_laplacian, inner, laplacian, lp_norm

from .rng import make_rng, resolve_seed

logger = logging.getLogger('cli')

SUITES = ('weights', 'caputo', 'ibp', 'compactness', 'spectral', 'solver')
ALPHAS = (0.1, 0.25, 0.5, 0.75, 0.9)
EXPONENTS = (1, 2, math.inf)

Perturbation = Optional[Tuple[int, float]]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    limit: float

    def as_dict(self) -> dict:
        value = float(self.value)
        limit = float(self.limit)
        return {
            'suite': self.suite,
            'name': self.name,
            'passed': bool(self.passed),
            'value': value if math.isfinite(value) else repr(value),
            'limit': limit if math.isfinite(limit) else repr(limit),
        }


def _at_most(suite: str, name: str, value: float, limit: float) -> Check:
    value = float(value)
    return Check(suite, name, bool(value <= limit), value, limit)


def _random_path(rng, n, horizon=1.0) -> SampledPath:
    return SampledPath(grid=TimeGrid.from_horizon(horizon, n), values=rng.standard_normal(n + 1))


def parse_perturbation(text: Optional[str]) -> Perturbation:
    """``"K:DELTA"`` → (K, DELTA)."""
    if not text:
        return None
    try:
        index, delta = text.split(':', 1)
        index, delta = int(index), float(delta)
    except ValueError:
        raise DomainError(f'--perturb-lambda expects K:DELTA, got {text!r}') from None
    if index < 1 or not math.isfinite(delta):
        raise DomainError(f'--perturb-lambda needs K >= 1 and a finite DELTA, got {text!r}')
    return index, delta


def _perturbed(weights: CaputoWeights, perturb: Perturbation) -> CaputoWeights:
    if perturb is None:
        return weights
    index, delta = perturb
    if index > weights.n:
        raise DomainError(f'cannot perturb λ_{index}: table holds {weights.n} weights')
    lambdas = weights.lambdas.copy()
    lambdas[index - 1] += delta
    return CaputoWeights(order=weights.order, lambdas=lambdas)


def weights_suite(rng, perturb: Perturbation = None) -> List[Check]:
    checks = []
    n = 10_000
    k = np.arange(1, n + 1, dtype=float)
    for alpha in ALPHAS:
        weights = _perturbed(build_weights(alpha, n), perturb)
        lam = weights.lambdas
        residual = np.max(np.abs(weight_identity_residuals(weights)))
        checks.append(_at_most('weights', f'identity alpha={alpha}', residual, 1e-10))
        checks.append(_at_most('weights', f'strictly decreasing alpha={alpha}', np.max(np.diff(lam)), -1e-300))
        checks.append(_at_most('weights', f'power bound alpha={alpha}', np.max(lam - k ** -alpha), 0.0))
    classical = _perturbed(build_weights(1.0, 16), perturb)
    checks.append(_at_most('weights', 'classical tail vanishes', np.max(np.abs(classical.lambdas[1:])), 0.0))
    return checks


def caputo_suite(rng, perturb: Perturbation = None) -> List[Check]:
    checks = []
    weights = build_weights(1.0, 128)
    path = _random_path(rng, 128)
    derivative = left_caputo(path, weights).values[1:]
    expected = caputo_scale(weights.order, path.grid.tau) * np.diff(path.values)
    checks.append(Check('caputo', 'classical order is backward difference', bool(np.array_equal(derivative, expected)),
                        float(np.max(np.abs(derivative - expected))), 0.0))

    worst_round_trip = worst_gap = worst_sign = 0.0
    for i in range(1000):
        alpha = (0.25, 0.5, 0.75)[i % 3]
        weights = build_weights(alpha, 64)
        path = _random_path(rng, 64)
        scale = max(1.0, float(np.max(np.abs(path.values))))
        forward = ftc_reconstruct_forward(left_caputo(path, weights), path.values[0], weights).values
        backward = ftc_reconstruct_backward(right_caputo(path, weights), path.values[-1], weights).values
        worst_round_trip = max(worst_round_trip,
                               np.max(np.abs(forward - path.values)) / scale,
                               np.max(np.abs(backward - path.values)) / scale)
        if i % 10 == 0:
            gaps = [caputo_square_gap(path, weights, k) for k in range(1, 65)]
            worst_gap = max(worst_gap, -min(gaps) / scale ** 2)
            decreasing = path.with_values(-np.abs(path.values))
            worst_sign = max(worst_sign, nonpositive_derivative_bound(decreasing, 0.0, weights))
    checks.append(_at_most('caputo', 'ftc round trips', worst_round_trip, 1e-12))
    checks.append(_at_most('caputo', 'square inequality', worst_gap, 1e-12))
    checks.append(_at_most('caputo', 'non-positive derivative keeps values below start', worst_sign, 1e-12))

    for name, f in (('t', SmoothFunction.polynomial([0.0, 1.0])), ('t^2', SmoothFunction.polynomial([0.0, 0.0, 1.0]))):
        for alpha in (0.3, 0.5, 0.8):
            errors = []
            for n in (16, 32, 64, 128):
                grid = TimeGrid.from_horizon(1.0, n)
                discrete = left_caputo(SampledPath.from_function(grid, f), build_weights(alpha, n)).values[1:]
                exact = np.array([continuous_left_caputo(f, t, alpha) for t in grid.times()[1:]])
                errors.append(float(np.max(np.abs(discrete - exact))))
            increases = max(b - a for a, b in zip(errors, errors[1:]))
            checks.append(Check('caputo', f'oracle consistency f={name} alpha={alpha}', increases < 0.0,
                                errors[-1], errors[0]))
    return checks


def ibp_suite(rng, perturb: Perturbation = None) -> List[Check]:
    weights = build_weights(0.6, 16)
    worst = 0.0
    for _ in range(100):
        path = _random_path(rng, 16)
        phi = SmoothFunction.polynomial(rng.standard_normal(3))
        terms = discrete_ibp_terms(path, phi, weights)
        worst = max(worst, terms.residual / terms.scale)
    checks = [_at_most('ibp', 'discrete identity', worst, 1e-10)]
    one = SmoothFunction.constant(1.0)
    checks.append(_at_most('ibp', 'continuous identity, constants',
                           ibp_continuous_residual(one, SmoothFunction.constant(2.0), 0.5, 1.0), 1e-8))
    line = SmoothFunction.polynomial([0.0, 1.0])
    checks.append(_at_most('ibp', 'continuous identity, linear', ibp_continuous_residual(line, line, 0.5, 1.0), 1e-5))
    return checks


def compactness_suite(rng, perturb: Perturbation = None) -> List[Check]:
    checks = []
    for n in (16, 64):
        tables = {alpha: build_weights(alpha, n) for alpha in (0.25, 0.5, 0.75)}
        worst = 0.0
        for _ in range(500):
            path = _random_path(rng, n)
            for weights in tables.values():
                for p in EXPONENTS:
                    worst = max(worst, piecewise_shift_check(path, weights, p).ratio)
        checks.append(_at_most('compactness', f'piecewise shift ratio N={n}', worst, 1.0 + 1e-9))

    worst = worst_gap = 0.0
    tables = {alpha: build_weights(alpha, 16) for alpha in (0.25, 0.5, 0.75)}
    for i in range(1000):
        alpha = (0.25, 0.5, 0.75)[i % 3]
        path = _random_path(rng, 16)
        interp = LinearInterpolant(path)
        tau = path.grid.tau
        for p in EXPONENTS:
            for h in (tau / 2, tau, 2 * tau):
                worst = max(worst, interpolant_shift_check(interp, alpha, h, p).ratio)
            shift = piecewise_shift_check(path, tables[alpha], p).shift_norm
            worst_gap = max(worst_gap, constant_to_piecewise_gap(path, interp, p) - shift)
    checks.append(_at_most('compactness', 'interpolant shift ratio N=16', worst, 1.0 + 1e-9))
    checks.append(_at_most('compactness', 'constant-to-linear gap below shift', worst_gap, 0.0))

    envelope = mu_envelope(0.5)
    scans = {n: mu_coefficient_scan(0.5, n) for n in (8, 32, 128)}
    for n, value in scans.items():
        checks.append(_at_most('compactness', f'mu scan N={n}', value, envelope))
    spread = abs(scans[128] - scans[32]) / max(scans[32], scans[128])
    checks.append(_at_most('compactness', 'mu scan uniform in N', spread, 0.1))
    constant = empirical_shift_constant(0.5, 32)
    checks.append(Check('compactness', 'empirical constant finite', bool(np.isfinite(constant) and constant > 0),
                        constant, math.inf))
    return checks


def spectral_suite(rng, perturb: Perturbation = None) -> List[Check]:
    checks = []
    grid = TorusGrid(1, 32)
    cos1 = GridField.from_function(grid, np.cos)
    cos2 = GridField.from_function(grid, lambda x: np.cos(2 * x))
    error = max(
        lp_norm(frac_laplacian(cos1, 0.3) - cos1, math.inf),
        lp_norm(frac_laplacian(cos2, 0.5) - 2.0 * cos2, math.inf),
    )
    checks.append(_at_most('spectral', 'eigenfunction exactness', error, 1e-12))

    worst_parseval = worst_full = worst_adjoint = 0.0
    for torus in (TorusGrid(1, 64), TorusGrid(2, 16), TorusGrid(3, 8)):
        field = GridField(torus, rng.standard_normal(torus.shape))
        physical = lp_norm(field, 2) ** 2
        spectral = torus.volume * np.sum(np.abs(field.spectrum.coeffs) ** 2)
        worst_parseval = max(worst_parseval, abs(physical - spectral) / physical)

        band = dealiased(field)
        minus_lap = -laplacian(band)
        worst_full = max(worst_full, lp_norm(frac_laplacian(band, 1.0) - minus_lap, math.inf)
                         / lp_norm(minus_lap, math.inf))

        other = dealiased(GridField(torus, rng.standard_normal(torus.shape)))
        left = inner(frac_laplacian(band, 0.6), other)
        right = inner(band, frac_laplacian(other, 0.6))
        worst_adjoint = max(worst_adjoint, abs(left - right) / max(abs(left), 1e-300))
    checks.append(_at_most('spectral', 'parseval', worst_parseval, 1e-10))
    checks.append(_at_most('spectral', 'order one equals minus laplacian', worst_full, 1e-12))
    checks.append(_at_most('spectral', 'self-adjointness', worst_adjoint, 1e-10))
    return checks


def _smooth_data(grid: TorusGrid) -> Tuple[GridField, GridField]:
    mode = (1,) + (0,) * (grid.dim - 1)
    return (cosine_series(grid, 1.0, [(mode, 0.5)]),
            cosine_series(grid, 1.0, [(mode, 0.3)]))


def _smooth_run(config: SolverConfig):
    history, ledger = run(config, *_smooth_data(config.grid))
    return history, ledger, diagnostics(history, ledger, config)


def _acceptance_checks() -> List[Check]:
    config = SolverConfig(alpha=0.5, s=0.75, grid=TorusGrid(1, 64), time=TimeGrid.from_horizon(0.5, 32),
                          rho=1e-2, eps=1e-2)
    _, _, report = _smooth_run(config)
    checks = [Check('solver', f'acceptance run: {verdict}', passed, float(passed), 1.0)
              for verdict, passed in report['verdicts'].items()]
    checks.append(_at_most('solver', 'acceptance run: Picard iterations', report['max_picard_iters'], 30))
    return checks


def _constant_data_checks() -> List[Check]:
    grid = TorusGrid(1, 32)
    config = SolverConfig(alpha=0.5, s=0.75, grid=grid, time=TimeGrid.from_horizon(0.5, 16), rho=1e-2, eps=1e-2)
    a = 2.0
    _, ledger = run(config, GridField.constant(grid, a), GridField.constant(grid, 1.0))
    expected = 0.5 * grid.volume * a ** 3
    return [_at_most('solver', 'constant data: L3 accumulator', abs(ledger.l3_accum[-1] - expected) / expected,
                     1e-12)]


def _resolution_checks() -> List[Check]:
    totals = []
    for points in (32, 64):
        config = SolverConfig(alpha=0.5, s=0.6, grid=TorusGrid(1, points), time=TimeGrid.from_horizon(0.25, 16),
                              rho=1e-2, eps=1e-2)
        totals.append(_smooth_run(config)[1].l3_accum[-1])
    return [_at_most('solver', 'L3 accumulator resolution change', abs(totals[1] - totals[0]) / totals[1], 0.05)]


def _classical_limit_checks() -> List[Check]:
    config = SolverConfig(alpha=1.0, s=1.0, grid=TorusGrid(1, 64), time=TimeGrid.from_horizon(0.5, 64),
                          picard_tol=1e-12)
    history, _, _ = _smooth_run(config)
    reference = backward_euler_reference(history.u[0], history.p[0], config.tau, config.n_steps)
    error = max(
        max(float(np.max(np.abs(history.u[k] - u))), float(np.max(np.abs(history.p[k] - p))))
        for k, (u, p) in enumerate(reference, start=1)
    )
    return [_at_most('solver', 'classical limit matches backward Euler', error, 1e-8)]


def _refinement_checks() -> List[Check]:
    grid = TorusGrid(1, 32)
    config = SolverConfig(alpha=0.5, s=0.75, grid=grid, time=TimeGrid.from_horizon(0.5, 8), rho=1e-2, eps=1e-2)
    u_in, p_in = _smooth_data(grid)
    checks = []
    for knob in REFINEMENT_KNOBS:
        report = refinement_study(config, u_in, p_in, knob, 3)
        checks.append(Check('solver', f'refinement {knob}: differences non-increasing', report.non_increasing,
                            max(report.diffs_u[-1], report.diffs_p[-1]),
                            max(report.diffs_u[-2], report.diffs_p[-2])))
    return checks


def _three_dimensional_checks() -> List[Check]:
    config = SolverConfig(alpha=0.5, s=0.75, grid=TorusGrid(3, 16), time=TimeGrid.from_horizon(0.25, 16),
                          rho=1e-2, eps=1e-2)
    _, _, report = _smooth_run(config)
    return [Check('solver', 'three-dimensional run', report['passed'], float(report['passed']), 1.0)]


SOLVER_BLOCKS: Dict[str, Callable[[], List[Check]]] = {
    'acceptance run': _acceptance_checks,
    'constant data': _constant_data_checks,
    'L3 accumulator resolution': _resolution_checks,
    'classical limit': _classical_limit_checks,
    'refinement': _refinement_checks,
    'three-dimensional run': _three_dimensional_checks,
}


def solver_suite(rng, perturb: Perturbation = None) -> List[Check]:
    """Solver runs; a run that stops with a SolverError becomes one failed check."""
    checks = []
    for name, block in SOLVER_BLOCKS.items():
        try:
            checks.extend(block())
        except SolverError as exc:
            logger.error('Solver check %r stopped: %s', name, exc)
            checks.append(Check('solver', f'{name}: {type(exc).__name__}', False, math.nan, math.nan))
    return checks


SUITE_FUNCTIONS: Dict[str, Callable[..., List[Check]]] = {
    'weights': weights_suite,
    'caputo': caputo_suite,
    'ibp': ibp_suite,
    'compactness': compactness_suite,
    'spectral': spectral_suite,
    'solver': solver_suite,
}


def run_suites(name: str, seed: Optional[int] = None, perturb: Perturbation = None) -> dict:
    """Run one suite or ``all``; returns a JSON-ready summary."""
    if name != 'all' and name not in SUITE_FUNCTIONS:
        raise DomainError(f'unknown suite {name!r}; choose from {SUITES + ("all",)}')
    seed = resolve_seed(seed)
    names = SUITES if name == 'all' else (name,)
    rng = make_rng(seed)
    checks: List[Check] = []
    for suite in names:
        logger.info('Running verification suite %s', suite)
        results = SUITE_FUNCTIONS[suite](rng, perturb)
        failed = [c.name for c in results if not c.passed]
        if failed:
            logger.warning('Suite %s failed: %s', suite, ', '.join(failed))
        checks.extend(results)
    first_failure = next((f'{c.suite}: {c.name}' for c in checks if not c.passed), None)
    return {
        'suite': name,
        'seed': seed,
        'perturbation': list(perturb) if perturb else None,
        'passed': first_failure is None,
        'first_failure': first_failure,
        'checks': [c.as_dict() for c in checks],
    }
