"""Numerical tolerances shared by every module.

Each check in the library compares a residual against one of these fields and
reports the residual alongside its verdict.  Pass a modified copy (for example
``DEFAULT_TOL.replace(causality=1e-6)``) to any function that accepts ``tol``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    eig_reconstruction: float = 1e-9
    psd: float = 1e-9
    trace: float = 1e-9
    causality: float = 1e-9
    causality_loose: float = 0.02
    cptp: float = 1e-9
    unitary: float = 1e-10
    rank: float = 1e-8
    filter_condition: float = 1e8
    zero_probability: float = 1e-12

    def replace(self, **changes: float) -> "Tolerances":
        return dataclasses.replace(self, **changes)


DEFAULT_TOL = Tolerances()
