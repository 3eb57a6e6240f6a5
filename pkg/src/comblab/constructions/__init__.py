"""Named combs and circuits, and the constructive procedures built on them."""

from .dilation import AuditItem, Dilation, audit_necessary_conditions, dilate, dilation_isometry
from .eb import (
    EbRepresentation,
    MeasurePrepare,
    SeparableExpansion,
    eb_representation,
    full_separable_decomposition,
)
from .examples import (
    circuit_alice_cz,
    circuit_bell_teleport,
    circuit_bob_controls,
    circuit_sqrt_swap,
    example_appg_comb,
    example_bisep_conditional,
    example_bisep_k,
    example_ghz_comb,
    example_sqrt_swap_comb,
    example_w_comb,
    three_party_legs,
)
from .scan import ScanReport, conditional_scan, kernel_available
from .seesaw import SeesawOptions, SeesawResult, SeesawState, seesaw

__all__ = [
    "AuditItem", "Dilation", "audit_necessary_conditions", "dilate", "dilation_isometry",
    "EbRepresentation", "MeasurePrepare", "SeparableExpansion", "eb_representation",
    "full_separable_decomposition",
    "circuit_alice_cz", "circuit_bell_teleport", "circuit_bob_controls", "circuit_sqrt_swap",
    "example_appg_comb", "example_bisep_conditional", "example_bisep_k", "example_ghz_comb",
    "example_sqrt_swap_comb", "example_w_comb", "three_party_legs",
    "ScanReport", "conditional_scan", "kernel_available",
    "SeesawOptions", "SeesawResult", "SeesawState", "seesaw",
]
