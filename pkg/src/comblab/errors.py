"""Exception hierarchy.

Input problems derive from ``ValueError`` so callers that only care about
"bad argument" can catch that; numerical trouble gets its own branch.
"""

from __future__ import annotations


class CombLabError(Exception):
    """Root of every error raised by this package."""


class LabelError(CombLabError, ValueError):
    """Unknown, duplicate or mismatched subsystem label."""


class DimensionError(CombLabError, ValueError):
    """Shapes or subsystem dimensions do not line up."""


class MalformedInputError(CombLabError, ValueError):
    """A serialized payload could not be decoded."""


class NotHermitianError(CombLabError, ValueError):
    def __init__(self, residual: float, tol: float):
        self.residual = float(residual)
        self.tol = float(tol)
        super().__init__(f"operator is not Hermitian: residual {residual:.3e} > {tol:.1e}")


class NotPSDError(CombLabError, ValueError):
    def __init__(self, min_eig: float, tol: float, what: str = "operator"):
        self.min_eig = float(min_eig)
        self.tol = float(tol)
        super().__init__(f"{what} is not positive semidefinite: min eigenvalue {min_eig:.3e} < -{tol:.1e}")


class RoleError(CombLabError, ValueError):
    """An effect, state or channel does not satisfy the constraint of its role."""


class CausalityError(CombLabError, ValueError):
    """An operator that must be a comb violates the trace hierarchy."""


class HypothesisError(CombLabError, ValueError):
    """A constructive procedure was handed input outside its hypotheses."""


class SolverError(CombLabError, RuntimeError):
    """The SDP solver did not reach a trustworthy answer."""

    def __init__(self, message: str, solution=None):
        super().__init__(message)
        self.solution = solution
