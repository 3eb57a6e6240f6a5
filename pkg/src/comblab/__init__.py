"""Quantum combs and their entanglement structure."""

from .comb import (
    Channel,
    Circuit,
    Comb,
    Leg,
    born_probability,
    compile_circuit,
    condition,
    link,
    verify_causality,
)
from .config import DEFAULT_TOL, Tolerances
from .entanglement import bisep_inequality, eb_check, gme_witness, ppt_min_eig
from .tensorlab import Operator, kron, partial_trace, partial_transpose

__version__ = "0.1.0"

__all__ = [
    "Channel", "Circuit", "Comb", "Leg", "born_probability", "compile_circuit", "condition", "link",
    "verify_causality", "DEFAULT_TOL", "Tolerances", "bisep_inequality", "eb_check", "gme_witness",
    "ppt_min_eig", "Operator", "kron", "partial_trace", "partial_transpose", "__version__",
]
