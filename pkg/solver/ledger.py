"""Energy ledger and run diagnostics.

For every step the ledger records the energy H_k = ∫ u_k² + ½|∇p_k|², the
dissipation D_k = ϱ‖∇u_k‖² + ½‖(−Δ)^{s/2}∇p_k‖² + (ε/2)‖Δp_k‖², and its
Caputo-weighted sum S_k = (τ^α/Γ_α) Σ_{i=1}^k (k−i+1)^{α−1} D_i. A converged
run satisfies H_k + S_k ≤ H_0.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from caputo.grids import SampledPath, TimeGrid
from caputo.operators import left_caputo
from caputo.weights import ftc_kernel, ftc_scale
from spectral.operators import energy, hs_seminorm, lp_norm, mean

from .config import SolverConfig
from .history import History

LEDGER_COLUMNS = ('step', 't', 'H', 'S', 'mean_u', 'mean_p', 'min_u', 'min_p', 'l3_accum', 'picard_iters')

MASS_TOL = 1e-12
ENERGY_TOL = 1e-6
ZERO_MODE_TOL = 1e-10
WEAK_RESIDUAL_FACTOR = 10.0


def _fmt(value: float) -> str:
    return f'{float(value):.17g}'


@dataclass(frozen=True)
class EnergyLedger:
    times: np.ndarray
    energy: np.ndarray
    d_u: np.ndarray
    d_p: np.ndarray
    d_e: np.ndarray
    dissipation_sum: np.ndarray
    mean_u: np.ndarray
    mean_p: np.ndarray
    min_u: np.ndarray
    min_p: np.ndarray
    l3_accum: np.ndarray
    picard_iters: np.ndarray
    weak_residual: np.ndarray
    certified: bool = True

    @classmethod
    def from_history(cls, history: History) -> 'EnergyLedger':
        config = history.config
        n = history.last_step
        u_steps, p_steps = history.u_steps, history.p_steps

        h = np.array([energy(u, p) for u, p in zip(u_steps, p_steps)])
        d_u = np.array([config.rho * hs_seminorm(u, 1.0) ** 2 for u in u_steps])
        d_p = np.array([0.5 * hs_seminorm(p, config.s + 1.0) ** 2 for p in p_steps])
        d_e = np.array([0.5 * config.eps * hs_seminorm(p, 2.0) ** 2 for p in p_steps])
        dissipation = d_u + d_p + d_e

        kernel = ftc_kernel(config.alpha, max(n, 1))
        s_sum = np.zeros(n + 1)
        for k in range(1, n + 1):
            s_sum[k] = kernel[k - 1::-1] @ dissipation[1:k + 1]
        s_sum *= ftc_scale(config.alpha, config.tau)

        cubes = np.array([lp_norm(u, 3) ** 3 for u in u_steps])
        l3 = np.concatenate([[0.0], np.cumsum(config.tau * cubes[1:])])

        reports = history.reports
        return cls(
            times=config.time.times()[:n + 1],
            energy=h,
            d_u=d_u,
            d_p=d_p,
            d_e=d_e,
            dissipation_sum=s_sum,
            mean_u=np.array([mean(u) for u in u_steps]),
            mean_p=np.array([mean(p) for p in p_steps]),
            min_u=np.array([u.min() for u in u_steps]),
            min_p=np.array([p.min() for p in p_steps]),
            l3_accum=l3,
            picard_iters=np.array([0] + [r.picard_iters for r in reports], dtype=int),
            weak_residual=np.array([0.0] + [r.weak_residual for r in reports]),
            certified=history.certified,
        )

    @property
    def n_steps(self) -> int:
        return int(self.energy.size - 1)

    @property
    def h0(self) -> float:
        return float(self.energy[0])

    def rows(self) -> list[dict]:
        return [
            {
                'step': k,
                't': float(self.times[k]),
                'H': float(self.energy[k]),
                'S': float(self.dissipation_sum[k]),
                'mean_u': float(self.mean_u[k]),
                'mean_p': float(self.mean_p[k]),
                'min_u': float(self.min_u[k]),
                'min_p': float(self.min_p[k]),
                'l3_accum': float(self.l3_accum[k]),
                'picard_iters': int(self.picard_iters[k]),
            }
            for k in range(self.n_steps + 1)
        ]

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='', encoding='ascii') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(LEDGER_COLUMNS)
            for row in self.rows():
                writer.writerow([
                    value if isinstance(value, int) else _fmt(value)
                    for value in row.values()
                ])
        return path


def zero_mode_identity_gap(history: History) -> float:
    """max_k |D^α_τ(mean p)_k − mean(u_k²)|.

    The pressure equation restricted to the zero Fourier mode is exactly this
    identity, so the gap measures round-off only.
    """
    config = history.config
    n = history.last_step
    if n < 1:
        return 0.0
    grid = config.time if n == config.n_steps else TimeGrid(config.tau, n)
    means = SampledPath(grid, [mean(history.p_field(k)) for k in range(n + 1)])
    derivative = left_caputo(means, config.weights).values
    squares = np.array([mean(history.u_field(k) * history.u_field(k)) for k in range(n + 1)])
    return float(np.max(np.abs(derivative[1:] - squares[1:])))


def pressure_mean_bound(ledger: EnergyLedger, config: SolverConfig) -> float:
    """mean(p_in) + H_0 T^α / (α Γ_α (2π)^d), the L¹ bound of the pressure in mean form."""
    alpha = config.alpha
    horizon = config.tau * ledger.n_steps
    return float(ledger.mean_p[0] + ledger.h0 * horizon ** alpha.alpha
                 / (alpha.alpha * alpha.gamma * config.grid.volume))


def diagnostics(history: History, ledger: EnergyLedger, config: SolverConfig | None = None) -> dict:
    """Per-step rows plus one pass/fail verdict per structural inequality."""
    config = config or history.config
    h0 = ledger.h0
    mass_drift = float(np.max(np.abs(ledger.mean_u - ledger.mean_u[0])))
    energy_excess = float(np.max(ledger.energy + ledger.dissipation_sum - h0 * (1.0 + ENERGY_TOL)))
    min_value = float(min(ledger.min_u.min(), ledger.min_p.min()))
    bound = pressure_mean_bound(ledger, config)
    pressure_excess = float(np.max(ledger.mean_p) - bound - abs(bound) * ENERGY_TOL)
    gap = zero_mode_identity_gap(history)
    gap_scale = max(1.0, float(np.max(np.abs(ledger.mean_p))))
    weak = float(np.max(ledger.weak_residual))

    verdicts = {
        'mass': mass_drift <= MASS_TOL,
        'energy': energy_excess <= 0.0,
        'positivity': min_value >= -config.tol_pos,
        'pressure_mean_bound': pressure_excess <= 0.0,
        'zero_mode_identity': gap <= ZERO_MODE_TOL * gap_scale,
        'weak_residual': weak <= WEAK_RESIDUAL_FACTOR * config.picard_tol,
        'certified': bool(ledger.certified),
    }
    return {
        'rows': ledger.rows(),
        'mass_drift': mass_drift,
        'energy_slack': float(np.min(h0 * (1.0 + ENERGY_TOL) - ledger.energy - ledger.dissipation_sum)),
        'min_value': min_value,
        'pressure_mean_bound': bound,
        'zero_mode_gap': gap,
        'max_weak_residual': weak,
        'l3_accum': float(ledger.l3_accum[-1]),
        'max_picard_iters': int(ledger.picard_iters.max()),
        'verdicts': verdicts,
        'passed': all(verdicts.values()),
    }
