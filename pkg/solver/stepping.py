"""Implicit Euler steps with full Caputo memory.

Every step solves two linear problems that are diagonal in Fourier space,

    (Γ_α τ^{−α} + |n|^{2s} + ε|n|²) p̂_k = [z²]^ − Γ_α τ^{−α} m̂_p
    (Γ_α τ^{−α} + ϱ|n|²) û_k = [div(z⁺∇p_k)]^ − Γ_α τ^{−α} m̂_u

where m is everything in the discrete Caputo sum except the current sample,
and iterates z ↦ u_k to a fixed point starting from z = u_{k−1}.
"""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from caputo.exceptions import DomainError
from caputo.weights import CaputoWeights
from spectral.fields import GridField, Spectrum, VectorField
from spectral.operators import (
    dealias,
    dealiased_product,
    divergence,
    fractional_multiplier,
    gradient,
    lp_norm,
    mean,
    positive_part,
)

from .config import SolverConfig
from .exceptions import InvalidInitialData, NonConvergence
from .history import History, StepReport
from .ledger import EnergyLedger

logger = logging.getLogger('solver')

ROUNDOFF_FACTOR = 64.0


def caputo_memory(values: np.ndarray, k: int, weights: CaputoWeights) -> np.ndarray:
    """Σ_{j=1}^{k−1} λ_{k−j+1}(f_j − f_{j−1}) − f_{k−1}.

    With λ_1 = 1 the discrete Caputo derivative at step k is
    Γ_α τ^{−α}(f_k + memory).
    """
    if not 1 <= k < values.shape[0]:
        raise DomainError(f'step {k} outside 1..{values.shape[0] - 1}')
    memory = -values[k - 1]
    if k > 1:
        memory = memory + np.tensordot(weights.lambdas[k - 1:0:-1], np.diff(values[:k], axis=0), axes=1)
    return memory


def _memory_coeffs(values: np.ndarray, k: int, config: SolverConfig) -> np.ndarray:
    return GridField(config.grid, caputo_memory(values, k, config.weights)).spectrum.coeffs


def _require_step(history: History, k: int) -> None:
    if not 1 <= k <= min(history.filled, history.config.n_steps):
        raise DomainError(f'step {k} needs a history through step {k - 1}; it has {history.filled} steps')


def pressure_step(history: History, k: int, z: GridField, config: SolverConfig,
                  memory: Optional[np.ndarray] = None) -> GridField:
    """p_k for the density iterate z."""
    _require_step(history, k)
    grid = config.grid
    scale = config.memory_scale
    if memory is None:
        memory = _memory_coeffs(history.p, k, config)
    source = dealias((z * z).spectrum).coeffs
    symbol = scale + fractional_multiplier(grid, config.s) + config.eps * grid.k_squared
    return Spectrum(grid, (source - scale * memory) / symbol).to_field()


def density_step(history: History, k: int, z: GridField, p_k: GridField, config: SolverConfig,
                 memory: Optional[np.ndarray] = None) -> GridField:
    """u_k for the iterate z and the pressure p_k it induced."""
    _require_step(history, k)
    grid = config.grid
    scale = config.memory_scale
    if memory is None:
        memory = _memory_coeffs(history.u, k, config)
    z_plus = positive_part(z)
    flux = VectorField(tuple(dealiased_product(z_plus, g) for g in gradient(p_k)))
    drift = divergence(flux).spectrum.coeffs
    return Spectrum(grid, (drift - scale * memory) / (scale + config.rho * grid.k_squared)).to_field()


def _fixed_point_residual(history, k, u_k, p_k, config, memory_u, memory_p) -> float:
    p_star = pressure_step(history, k, u_k, config, memory=memory_p)
    u_star = density_step(history, k, u_k, p_k, config, memory=memory_u)
    return float(np.hypot(lp_norm(u_star - u_k, 2), lp_norm(p_star - p_k, 2)))


def weak_form_residual(history: History, k: int, config: Optional[SolverConfig] = None) -> float:
    """L² size of the preconditioned residual of both step equations at the stored (u_k, p_k).

    Testing against every retained Fourier mode and dividing by the diagonal
    symbol gives exactly the difference between the stored pair and one more
    application of the step maps.
    """
    config = config or history.config
    if not 1 <= k < history.filled:
        raise DomainError(f'step {k} has not been computed')
    return _fixed_point_residual(
        history, k, history.u_field(k), history.p_field(k), config,
        _memory_coeffs(history.u, k, config), _memory_coeffs(history.p, k, config),
    )


def picard_preconditioner(z: GridField, config: SolverConfig) -> np.ndarray:
    """Fourier weights 1/(1 + 2q|n|²/(A(n)B(n))) for the Picard correction.

    A and B are the density and pressure symbols and q is the midrange of
    (z⁺)². About a near-constant z the map z ↦ density_step has the per-mode
    slope −2q|n|²/(AB), which drops below −1 on the high modes. The weights
    lie in (0, 1] and equal 1 on the zero mode.
    """
    grid = config.grid
    scale = config.memory_scale
    z_plus = positive_part(z).samples
    q = 0.5 * (float(z_plus.min()) ** 2 + float(z_plus.max()) ** 2)
    density_symbol = scale + config.rho * grid.k_squared
    pressure_symbol = scale + fractional_multiplier(grid, config.s) + config.eps * grid.k_squared
    return 1.0 / (1.0 + 2.0 * q * grid.k_squared / (density_symbol * pressure_symbol))


def _tolerance(z: GridField, config: SolverConfig) -> float:
    """``picard_tol``, lifted to the round-off level of z when that is larger."""
    return max(config.picard_tol, ROUNDOFF_FACTOR * np.finfo(float).eps * lp_norm(z, 2))


def picard_solve(history: History, k: int, config: SolverConfig) -> tuple[GridField, GridField, StepReport]:
    """Solve step k by damped, preconditioned fixed-point iteration from z = u_{k−1}.

    Each iteration moves z by θ·P(density_step(z) − z), with P from
    :func:`picard_preconditioner`. θ starts at ``picard_damping`` and halves,
    down to 1/64 of it, whenever the correction grows. The step stops once the
    undamped correction ‖P(density_step(z) − z)‖_{L²} is within tolerance,
    which bounds the recorded residual ‖z^{m+1} − z^m‖_{L²} as well.
    Fixed points do not depend on θ or P.
    """
    _require_step(history, k)
    if history.filled != k:
        raise DomainError(f'step {k} cannot be solved once step {history.filled - 1} is stored')
    memory_u = _memory_coeffs(history.u, k, config)
    memory_p = _memory_coeffs(history.p, k, config)
    theta = config.picard_damping
    theta_floor = config.picard_damping / 64.0
    z = history.u_field(k - 1)
    residuals = []
    previous = np.inf
    converged = False
    for iteration in range(1, config.picard_max + 1):
        p = pressure_step(history, k, z, config, memory=memory_p)
        update = density_step(history, k, z, p, config, memory=memory_u)
        correction = (update - z).spectrum.multiply(picard_preconditioner(z, config)).to_field()
        size = lp_norm(correction, 2)
        if not np.isfinite(size):
            residuals.append(size)
            break
        if size > previous and theta > theta_floor:
            theta = max(0.5 * theta, theta_floor)
            logger.debug('step %d iteration %d: correction grew, damping now %.4g', k, iteration, theta)
        previous = size
        z = z + theta * correction
        residuals.append(theta * size)
        if size <= _tolerance(z, config):
            converged = True
            break
    if not converged:
        logger.error('Picard iteration did not converge at step %d: residuals %s', k, residuals[-5:])
        raise NonConvergence(k, residuals)

    u_k = z
    p_k = pressure_step(history, k, u_k, config, memory=memory_p)
    report = StepReport(
        k=k,
        picard_iters=len(residuals),
        picard_residual=residuals[-1],
        min_u=u_k.min(),
        min_p=p_k.min(),
        mean_u=mean(u_k),
        weak_residual=_fixed_point_residual(history, k, u_k, p_k, config, memory_u, memory_p),
    )
    return u_k, p_k, report


def check_initial_data(config: SolverConfig, u_in: GridField, p_in: GridField) -> None:
    for name, f in (('u_in', u_in), ('p_in', p_in)):
        if f.grid != config.grid:
            raise InvalidInitialData(f'{name} lives on {f.grid}, the run uses {config.grid}')
        if not np.all(np.isfinite(f.samples)):
            raise InvalidInitialData(f'{name} has non-finite node values')
        if f.min() <= 0.0:
            raise InvalidInitialData(f'{name} must be strictly positive, minimum is {f.min():.6g}')


def run(config: SolverConfig, u_in: GridField, p_in: GridField) -> tuple[History, EnergyLedger]:
    """Step k = 1..N and return ``(History, EnergyLedger)``."""
    check_initial_data(config, u_in, p_in)
    history = History.start(config, u_in, p_in)
    history.certified = not config.clip_negative
    logger.info(
        'Run: alpha=%s s=%s d=%d M=%d tau=%.6g N=%d rho=%s eps=%s',
        config.alpha.alpha, config.s, config.grid.dim, config.grid.points,
        config.tau, config.n_steps, config.rho, config.eps,
    )
    for k in range(1, config.n_steps + 1):
        u_k, p_k, report = picard_solve(history, k, config)
        if config.clip_negative:
            u_k, p_k = positive_part(u_k), positive_part(p_k)
        history.append(u_k, p_k, report)
        logger.debug('step %d: %d Picard iterations, residual %.3e, weak residual %.3e',
                     k, report.picard_iters, report.picard_residual, report.weak_residual)
    ledger = EnergyLedger.from_history(history)
    logger.info('Run finished: H_0=%.6g H_N=%.6g max Picard iterations %d',
                ledger.energy[0], ledger.energy[-1], int(ledger.picard_iters.max()))
    return history, ledger
