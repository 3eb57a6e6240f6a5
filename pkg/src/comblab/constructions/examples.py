"""Named combs and circuits, built exactly from their closed forms."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..comb import IN, OUT, Channel, Circuit, Comb, Leg, choi_of_unitary, compile_circuit, verify_causality
from ..config import DEFAULT_TOL, Tolerances
from ..errors import CausalityError, DimensionError, MalformedInputError
from ..tensorlab import Operator, kron, phi_plus

__all__ = [
    "LETTERS",
    "SQRT_SWAP",
    "APPG_SHA256",
    "MixtureTerm",
    "example_w_comb",
    "example_ghz_comb",
    "example_bisep_k",
    "bisep_k_terms",
    "example_bisep_conditional",
    "bisep_conditional_range",
    "circuit_bob_controls",
    "circuit_alice_cz",
    "circuit_bell_teleport",
    "circuit_sqrt_swap",
    "example_sqrt_swap_comb",
    "example_appg_comb",
    "three_party_legs",
    "alternating_legs",
]

LETTERS = "ABCDEFGH"
_S2 = 1 / np.sqrt(2)

SQRT_SWAP = 0.5 * np.array(
    [[2, 0, 0, 0], [0, 1 + 1j, 1 - 1j, 0], [0, 1 - 1j, 1 + 1j, 0], [0, 0, 0, 2]], dtype=complex
)
SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
CZ = np.diag([1, 1, 1, -1]).astype(complex)

APPG_SHA256 = "5148714722d6eda22bf231b0a63986398fc6edfe1c1e45240595274c655bb9e8"


def three_party_legs(labels=("A", "B", "C")) -> tuple[Leg, ...]:
    """Measured, fed in, measured."""
    a, b, c = labels
    return (Leg(a, OUT, 1), Leg(b, IN, 1), Leg(c, OUT, 2))


def _basis(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def _op(m: np.ndarray, labels) -> Operator:
    return Operator(m, (2,) * len(labels), tuple(labels))


def _z(label: str, bit: int) -> Operator:
    m = np.zeros((2, 2), dtype=complex)
    m[bit, bit] = 1
    return Operator(m, (2,), (label,))


# --------------------------------------------------------------------------
# Three-party examples
# --------------------------------------------------------------------------

def example_w_comb() -> Comb:
    """Rank-two comb ``|s1><s1| + |s2><s2|`` built on W-like vectors."""
    s1 = _basis("001") * _S2 + (_basis("010") + _basis("100")) / 2
    s2 = _basis("110") * _S2 + 1j * (_basis("101") - _basis("011")) / 2
    return Comb(_op(_proj(s1) + _proj(s2), "ABC"), three_party_legs())


def alternating_legs(labels) -> tuple[Leg, ...]:
    """Legs whose roles alternate backwards from a measured final leg."""
    legs = []
    n = len(labels)
    for k, label in enumerate(labels):
        back = n - 1 - k
        legs.append(Leg(label, OUT if back % 2 == 0 else IN, k // 2 + 1))
    return tuple(legs)


def _ghz_legs(n: int) -> tuple[Leg, ...]:
    return alternating_legs(LETTERS[:n])


def example_ghz_comb(n: int = 3) -> Comb:
    """The ``n``-party GHZ-type family.

    The operator is ``2^{-(n-3)/2} |GHZ><GHZ| + 2^{-(n-1)/2} (1 - |0..0><0..0| -
    |1..1><1..1|) (x) |0><0|`` with the last factor on the final leg.  Its trace
    is ``2^{(n-1)/2}``, which is a proper-comb normalization only for odd
    ``n``; the value is recorded on the returned comb.
    """
    if not isinstance(n, (int, np.integer)) or not 3 <= n <= 8:
        raise DimensionError(f"n must be an integer between 3 and 8, got {n!r}")
    d = 2 ** n
    ghz = np.zeros((d, d), dtype=complex)
    ghz[np.ix_([0, d - 1], [0, d - 1])] = 0.5  # exact entries, no rounded sqrt(2) products
    rest = np.eye(2 ** (n - 1), dtype=complex)
    rest[0, 0] = rest[-1, -1] = 0
    m = 2.0 ** (-(n - 3) / 2) * ghz + 2.0 ** (-(n - 1) / 2) * np.kron(rest, np.diag([1, 0]))
    op = Operator(m, (2,) * n, tuple(LETTERS[:n]))
    assert op.dim == d
    return Comb(op, _ghz_legs(n), normalization=2.0 ** ((n - 1) / 2))


@dataclass(frozen=True)
class MixtureTerm:
    """One term ``weight * state`` of an explicit decomposition, PPT across ``cut``."""

    weight: float
    state: Operator
    cut: tuple[str, ...]


def _check_open_unit(p: float, lo: float = 0.0, hi: float = 1.0) -> float:
    p = float(p)
    if not lo < p < hi:
        raise DimensionError(f"p must lie strictly between {lo:.6g} and {hi:.6g}, got {p}")
    return p


def bisep_k_terms(p: float) -> list[MixtureTerm]:
    """Decomposition of :func:`example_bisep_k` into two product terms.

    Each state has unit trace; the weights sum to the comb's trace of 2.
    """
    p = _check_open_unit(p)
    t1 = kron(_z("A", 0), phi_plus("BC"))
    t2 = kron(Operator.identity((2,), ("B",)) / 2, phi_plus("AC"))
    return [MixtureTerm(2 * p, t1, ("A",)), MixtureTerm(2 * (1 - p), t2, ("B",))]


def example_bisep_k(p: float) -> Comb:
    """``2p |0><0|_A (x) Phi+_BC + (1-p) 1_B (x) Phi+_AC`` for ``0 < p < 1``.

    A mixture of two biseparable terms, so it is never genuinely multipartite
    entangled, yet for ``p > 1/3`` it is NPT across ``C:AB``.
    """
    terms = bisep_k_terms(p)
    total = terms[0].state * terms[0].weight + terms[1].state * terms[1].weight
    return Comb(total, three_party_legs())


def bisep_conditional_range() -> tuple[float, float]:
    return ((np.sqrt(33) - 3) / 12, 0.5)


def example_bisep_conditional(p: float) -> Comb:
    """A biseparable comb that is conditionally NPT on every pair.

    Valid for ``(sqrt(33) - 3)/12 < p < 1/2``.
    """
    lo, hi = bisep_conditional_range()
    p = _check_open_unit(p, lo, hi)
    phi_m = np.zeros((4, 4), dtype=complex)
    phi_m[0, 0] = phi_m[3, 3] = 0.5
    phi_m[0, 3] = phi_m[3, 0] = -0.5
    t1 = kron(_z("A", 0), phi_plus("BC")).matrix
    pc = phi_plus("AC").matrix.reshape(2, 2, 2, 2)
    t2 = np.einsum("acAC,bB->abcABC", pc, np.eye(2)).reshape(8, 8)
    mix = (np.kron(phi_plus("AB").matrix, np.diag([1, 0])) + np.kron(phi_m, np.diag([0, 1]))
           + _proj(_basis("010")) + _proj(_basis("101")))
    m = 2 * p * t1 + p * t2 + (1 - 2 * p) / 2 * mix
    return Comb(_op(m, "ABC"), three_party_legs())


# --------------------------------------------------------------------------
# Circuits with conditional behavior
# --------------------------------------------------------------------------

def _three_party_circuit(step: Channel) -> Circuit:
    return Circuit(phi_plus("AR"), (step,), three_party_legs())


def circuit_bob_controls() -> Circuit:
    """Bob's computational-basis input decides whether ``R`` reaches ``C`` intact.

    On ``|0>`` the environment is routed to ``C`` unchanged; on ``|1>`` it
    passes through a completely dephasing channel.
    """
    route = kron(_z("B", 0), phi_plus("RC", normalized=False))
    deph = np.diag([1, 0, 0, 1]).astype(complex)
    dephase = kron(_z("B", 1), Operator(deph, (2, 2), ("C", "R")))
    op = route + dephase
    return _three_party_circuit(Channel(op, ("B", "R"), ("C",)))


def circuit_alice_cz() -> Circuit:
    """Controlled-Z from the environment onto the system; the environment is then lost."""
    step = choi_of_unitary(CZ, ("R", "B"), ("R2", "C"))
    return _three_party_circuit(step)


def circuit_bell_teleport() -> Circuit:
    """Bell measurement on ``B`` and ``R`` with the outcome announced on ``C``."""
    bell = phi_plus("BR").transpose()
    flip = (Operator.identity((2, 2), ("B", "R")) - phi_plus("BR")).transpose()
    op = kron(_z("C", 0), bell) + kron(_z("C", 1), flip)
    return _three_party_circuit(Channel(op, ("B", "R"), ("C",)))


# --------------------------------------------------------------------------
# Four-party example and published data
# --------------------------------------------------------------------------

def circuit_sqrt_swap(full_swap: bool = False) -> Circuit:
    """Two square-root-of-swap gates between the system and a qubit memory.

    ``A`` and ``C`` are fed in, ``B`` and ``D`` come out; the memory starts in
    ``|0>`` and is discarded at the end.
    """
    u = SWAP if full_swap else SQRT_SWAP
    init = _z("E0", 0)
    s1 = choi_of_unitary(u, ("A", "E0"), ("B", "E1"))
    s2 = choi_of_unitary(u, ("C", "E1"), ("D", "E2"))
    legs = (Leg("A", IN, 1), Leg("B", OUT, 1), Leg("C", IN, 2), Leg("D", OUT, 2))
    return Circuit(init, (s1, s2), legs)


def example_sqrt_swap_comb(full_swap: bool = False) -> Comb:
    return compile_circuit(circuit_sqrt_swap(full_swap))


def example_appg_comb(tol: Tolerances = DEFAULT_TOL, check: bool = True) -> Comb:
    """Load the rounded three-decimal comb shipped with the package.

    The data file is checked against a fixed SHA-256 digest, and causality is
    verified in loose mode because of the rounding.
    """
    from ..comb import comb_from_dict

    raw = resources.files("comblab").joinpath("data/appg_comb.json").read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != APPG_SHA256:
        raise MalformedInputError(f"data file checksum mismatch: {digest}")
    c = comb_from_dict(json.loads(raw))
    if check:
        rep = verify_causality(c, tol, loose=True)
        if not rep.passed:
            raise CausalityError(f"shipped comb fails loose causality: {rep.levels}")
    return c
