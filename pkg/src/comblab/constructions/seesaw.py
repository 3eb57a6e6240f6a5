"""Alternating search for a GME comb with no conditional entanglement.

The search alternates two convex problems on three-qubit combs (legs measured
``A``, fed-in ``B``, measured ``C``):

1. the optimal decomposable witness ``W`` for the current comb;
2. the comb minimizing ``tr(W Y)`` among proper combs whose conditioned pairs
   stay PPT with margin ``eps`` for a finite family of effects on each party.

The conditioned pair is affine in the Bloch vector of the effect.  The family
used here is the vertex set of a polytope circumscribing the Bloch sphere,
so imposing the constraint on the vertices imposes it on every projective
effect.  Each step can only lower the witness value once the comb is
feasible, and a candidate is accepted after a fresh independent scan.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.spatial import ConvexHull

from ..comb import Comb, compile_circuit, verify_causality
from ..config import DEFAULT_TOL, Tolerances
from ..entanglement import gme_witness
from ..errors import DimensionError, SolverError
from ..sdp import SdpOptions, maximize_lmi
from ..tensorlab import PAULI_X, PAULI_Y, PAULI_Z, Operator
from .examples import three_party_legs
from .randomized import random_two_step_circuit
from .scan import ScanReport, conditional_scan

log = logging.getLogger(__name__)

__all__ = ["SeesawOptions", "SeesawState", "SeesawResult", "seesaw", "circumscribed_effects",
           "causal_parametrization", "conditional_ppt_blocks"]

_LABELS = ("A", "B", "C")
_PAULIS = (np.eye(2, dtype=complex), PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class SeesawOptions:
    iterations: int = 30
    eps_margin: float = 0.01
    scan_constraint_count: int = 1000
    target: float = -1e-4
    scan_samples: int = 500_000
    scan_seed: int = 12345
    stall: float = 1e-7
    sdp: SdpOptions = field(default_factory=SdpOptions)


@dataclass
class SeesawState:
    """Current iterate and everything needed to audit how it was reached."""

    comb: Comb
    witness: Operator | None
    iteration: int
    effects: np.ndarray  # Bloch vectors (beyond the unit sphere), one row per effect
    eps: float
    trace: list[dict] = field(default_factory=list)


@dataclass
class SeesawResult:
    candidate: Comb | None
    state: SeesawState
    witness_value: float
    scan: ScanReport | None
    status: str  # "candidate" | "no-candidate"
    elapsed: float

    def audit(self) -> dict:
        return {
            "status": self.status,
            "witness_value": self.witness_value,
            "iterations": self.state.iteration,
            "eps": self.state.eps,
            "effects_per_party": int(self.state.effects.shape[0]),
            "trace": self.state.trace,
            "scan": self.scan.to_dict() if self.scan is not None else None,
            "elapsed": self.elapsed,
        }


def circumscribed_effects(count: int) -> np.ndarray:
    """Fibonacci-sphere directions scaled so their hull contains the unit ball."""
    if count < 8:
        raise ValueError("need at least 8 directions")
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    r = np.sqrt(1 - z * z)
    ph = np.pi * (1 + 5 ** 0.5) * i
    pts = np.stack([r * np.cos(ph), r * np.sin(ph), z], axis=1)
    hull = ConvexHull(pts)
    inradius = float((-hull.equations[:, 3]).min())
    return pts / inradius


def _herm_basis(d: int) -> np.ndarray:
    out = []
    for i in range(d):
        e = np.zeros((d, d), complex)
        e[i, i] = 1
        out.append(e)
    s = 1 / np.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), complex)
            e[i, j] = e[j, i] = s
            out.append(e)
            e = np.zeros((d, d), complex)
            e[i, j], e[j, i] = -1j * s, 1j * s
            out.append(e)
    return np.array(out)


def causal_parametrization() -> tuple[np.ndarray, np.ndarray]:
    """``(Y0, N)`` with proper qubit combs exactly ``{Y0 + sum y_i N_i >= 0}``.

    ``Y0 = 1/4`` and the ``N_i`` span the traceless directions that keep
    ``tr_C Y = rho_A (x) 1_B``.
    """
    basis = _herm_basis(8)
    rows = []
    for h in basis:
        t = h.reshape(2, 2, 2, 2, 2, 2)
        red = np.einsum("abcdec->abde", t).reshape(4, 4)
        rho = np.einsum("abdb->ad", red.reshape(2, 2, 2, 2)) / 2
        viol = red - np.kron(rho, np.eye(2))
        rows.append(np.concatenate([viol.real.ravel(), viol.imag.ravel(), [np.trace(h).real]]))
    M = np.array(rows).T
    null = sla.null_space(M)
    N = np.einsum("sk,sij->kij", null, basis)
    return np.eye(8, dtype=complex) / 4, N


def _pauli_parts(Y: np.ndarray, party: int) -> np.ndarray:
    """Partially transposed ``tr_X[Y (s/2 (x) 1)]`` for the four Pauli ``s``; shape ``(..., 4, 4, 4)``."""
    t = Y.reshape(Y.shape[:-2] + (2, 2, 2, 2, 2, 2))
    out = []
    for s in _PAULIS:
        h = s / 2
        if party == 0:
            m = np.einsum("ji,...ibcjde->...bcde", h, t)
        elif party == 1:
            m = np.einsum("ji,...aicdje->...acde", h, t)
        else:
            m = np.einsum("ji,...abidej->...abde", h, t)
        # transpose on the first remaining qubit: swap its row and column index
        m = np.swapaxes(m, -4, -2)
        out.append(m.reshape(m.shape[:-4] + (4, 4)))
    return np.stack(out, axis=-3)


def conditional_ppt_blocks(Y: np.ndarray, effects: np.ndarray, eps: float) -> list[np.ndarray]:
    """For each party, ``PT(Y_v) - eps tr(Y_v) 1`` for every Bloch vector ``v``.

    ``Y`` may carry leading batch axes; the result per party has shape
    ``(..., n_effects, 4, 4)``.
    """
    coeff = np.concatenate([np.ones((effects.shape[0], 1)), effects], axis=1)
    blocks = []
    for party in range(3):
        parts = _pauli_parts(Y, party)
        m = np.einsum("vk,...kij->...vij", coeff, parts)
        tr = np.einsum("...ii->...", m).real
        blocks.append(m - eps * tr[..., None, None] * np.eye(4))
    return blocks


def _state_step(W: np.ndarray, Y0: np.ndarray, N: np.ndarray, effects: np.ndarray, eps: float,
                options: SdpOptions) -> tuple[np.ndarray, float]:
    c = -np.real(np.einsum("ij,kji->k", W, N))
    blocks = [("comb", Y0, N)]
    f0 = conditional_ppt_blocks(Y0, effects, eps)
    fi = conditional_ppt_blocks(N, effects, eps)
    for party in range(3):
        for v in range(effects.shape[0]):
            blocks.append((f"{_LABELS[party]}{v}", f0[party][v], fi[party][:, v]))
    res = maximize_lmi(c, blocks, options)
    if res.status != "optimal":
        raise SolverError(f"state step ended with status {res.status}", res.solution)
    Y = Y0 + np.einsum("k,kij->ij", res.y, N)
    Y = (Y + Y.conj().T) / 2
    return Y, float(np.real(np.trace(W @ Y)))


def seesaw(dims=(2, 2, 2), seed: int = 0, options: SeesawOptions | None = None,
           tol: Tolerances = DEFAULT_TOL) -> SeesawResult:
    """Search for a three-qubit comb that is GME yet conditionally PPT on every pair.

    The first comb comes from a circuit with a Haar-random pure initial
    state and a Haar-random two-qubit unitary.  Returns a candidate only if
    the witness value drops below ``options.target`` and an independent scan
    finds every conditioned pair PPT.
    """
    if tuple(dims) != (2, 2, 2):
        raise DimensionError(f"the search is implemented for three qubits, got dims {tuple(dims)}")
    opts = options or SeesawOptions()
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    start = compile_circuit(random_two_step_circuit(rng, pure=True), tol)
    Y0, N = causal_parametrization()
    effects = circumscribed_effects(opts.scan_constraint_count)
    state = SeesawState(start, None, 0, effects, opts.eps_margin)
    Y = start.op.matrix
    best_val = np.inf
    scan = None
    status = "no-candidate"
    value = np.inf
    for it in range(1, opts.iterations + 1):
        rep = gme_witness(Operator(Y, (2, 2, 2), _LABELS), tol, opts.sdp, psd_tol=1e-7)
        if rep.status != "optimal":
            state.trace.append({"iteration": it, "event": "witness-solver", "status": rep.status})
            break
        value = rep.value
        W = rep.witness.matrix
        state.witness = rep.witness
        entry = {"iteration": it, "witness_value": value}
        if it > 1 and value < opts.target:
            scan = conditional_scan(state.comb, opts.scan_samples, opts.scan_seed, sampling="haar")
            entry["scan_minima"] = scan.minima
            state.trace.append(entry)
            if scan.all_positive:
                status = "candidate"
                break
        try:
            Y_new, tw = _state_step(W, Y0, N, effects, opts.eps_margin, opts.sdp)
        except SolverError as exc:
            entry["state_step"] = str(exc)
            state.trace.append(entry)
            break
        Y = Y_new
        state.comb = Comb(Operator(Y, (2, 2, 2), _LABELS), three_party_legs())
        causal = verify_causality(state.comb, tol.replace(causality=1e-6, psd=1e-6))
        entry.update(state_value=tw / 2, causality_residual=causal.max_residual, min_eig=causal.min_eig)
        if "scan_minima" not in entry:
            state.trace.append(entry)
        state.iteration = it
        if it > 1 and best_val - tw / 2 < opts.stall:
            best_val = min(best_val, tw / 2)
            if value >= opts.target:
                state.trace.append({"iteration": it, "event": "stalled"})
                break
        best_val = min(best_val, tw / 2)
    state.iteration = max(state.iteration, len(state.trace))
    cand = state.comb if status == "candidate" else None
    if cand is not None:
        rep = verify_causality(cand, tol.replace(causality=1e-6, psd=1e-6))
        if not rep.passed:
            status, cand = "no-candidate", None
            state.trace.append({"event": "causality", "levels": rep.levels})
    return SeesawResult(cand, state, float(value), scan, status, time.perf_counter() - t0)
