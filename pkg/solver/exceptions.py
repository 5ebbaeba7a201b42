from caputo.exceptions import CaputoError


class SolverError(RuntimeError):
    """Base class for failures while stepping the coupled system."""


class NonConvergence(SolverError):
    """The per-step fixed-point iteration did not reach its tolerance."""

    def __init__(self, step: int, residuals):
        self.step = int(step)
        self.residuals = [float(r) for r in residuals]
        last = self.residuals[-1] if self.residuals else float('nan')
        super().__init__(
            f'Picard iteration failed at step {self.step} after {len(self.residuals)} '
            f'iterations (last residual {last:.3e}); retry with a smaller time step or damping'
        )


class InvalidInitialData(SolverError, CaputoError):
    """Initial density or pressure is not strictly positive, or lives on the wrong grid."""
