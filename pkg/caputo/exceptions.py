"""Errors raised by the numerical apps.

Every error derives from ``ValueError`` so callers that only validate input
can catch one type; the CLI maps them onto exit status 3.
"""


class CaputoError(ValueError):
    """Base class for invalid arguments to the fractional-calculus operators."""


class DomainError(CaputoError):
    """An argument lies outside the domain of the operation (Γ(x) for x ≤ 0, α ∉ (0, 1], ...)."""


class GridMismatch(CaputoError):
    """Paths, weight tables or fields do not share a compatible grid or length."""
