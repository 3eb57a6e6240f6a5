"""Conditional-entanglement scan over projective effects on one party.

For each party ``X`` of a three-qubit comb the operator left on the other two
after inserting ``P`` on ``X`` is ``tr_X[Y (P (x) 1)]``.  It is linear in the
Bloch vector of ``P``, so the four operators obtained from ``1`` and the Pauli
matrices (already partially transposed) are computed once and every sample
only needs a weighted sum and a 4x4 eigenvalue.

Samples are shared by the three parties.  The reduction is an argmin over a
per-sample array, so ties resolve to the smallest sample index regardless of
how the work was split.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..comb import Comb
from ..config import DEFAULT_TOL, Tolerances
from ..errors import DimensionError, LabelError
from ..tensorlab import PAULI_X, PAULI_Y, PAULI_Z, Operator, partial_transpose
from ..comb import link

try:  # compiled kernel, built from _scan_kernel.pyx when Cython is available
    from .._scan_kernel import min_eig_batch as _kernel_min_eig
except ImportError:  # pragma: no cover - exercised when the extension is absent
    _kernel_min_eig = None

log = logging.getLogger(__name__)

__all__ = ["ScanReport", "conditional_scan", "sample_angles", "pauli_components",
           "kernel_available", "min_eig_batch", "scan_threads"]

_CHUNK = 65536


def kernel_available() -> bool:
    return _kernel_min_eig is not None


def scan_threads() -> int:
    """Worker count from ``COMBLAB_THREADS`` (default 1)."""
    raw = os.environ.get("COMBLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer COMBLAB_THREADS=%r", raw)
        return 1


@dataclass
class ScanReport:
    minima: dict[str, float]
    argmin: dict[str, dict]
    samples: int
    skipped: dict[str, int]
    seed: int
    sampling: str
    backend: str
    threads: int
    elapsed: float = 0.0
    grid: dict = field(default_factory=dict)

    @property
    def all_positive(self) -> bool:
        return all(v > 0 for v in self.minima.values())

    def to_dict(self) -> dict:
        return {
            "minima": self.minima,
            "argmin": self.argmin,
            "samples": self.samples,
            "skipped": self.skipped,
            "seed": self.seed,
            "sampling": self.sampling,
            "backend": self.backend,
            "threads": self.threads,
            "all_positive": self.all_positive,
            "grid": self.grid,
        }


def sample_angles(samples: int, seed: int, sampling: str = "rectangle") -> tuple[np.ndarray, np.ndarray]:
    """``(theta, phi)`` arrays.

    ``"rectangle"`` draws both angles uniformly from ``[0, pi] x [0, 2 pi]``;
    since the z component is ``sin(theta)`` this covers the upper half of the
    Bloch sphere non-uniformly.  ``"haar"`` draws uniformly from the whole
    sphere, with ``theta`` in ``[-pi/2, pi/2]``.
    """
    rng = np.random.default_rng(seed)
    if sampling == "rectangle":
        phi = rng.uniform(0, 2 * np.pi, samples)
        theta = rng.uniform(0, np.pi, samples)
    elif sampling == "haar":
        phi = rng.uniform(0, 2 * np.pi, samples)
        theta = np.arcsin(rng.uniform(-1, 1, samples))
    else:
        raise ValueError(f"unknown sampling {sampling!r}")
    return theta, phi


def pauli_components(c: Comb, party: str) -> tuple[np.ndarray, tuple[str, str]]:
    """Partially transposed ``tr_X[Y (s (x) 1)] / 2`` for ``s`` in ``(1, X, Y, Z)``.

    Returns an array ``(4, 4, 4)`` and the remaining labels; the transpose is
    taken on the first remaining label.
    """
    if c.op.dims != (2, 2, 2):
        raise DimensionError(f"scan needs a three-qubit comb, got dims {c.op.dims}")
    if party not in c.labels:
        raise LabelError(f"comb has no party {party!r}")
    rest = tuple(l for l in c.labels if l != party)
    out = np.empty((4, 4, 4), dtype=complex)
    for k, s in enumerate((np.eye(2, dtype=complex), PAULI_X, PAULI_Y, PAULI_Z)):
        # link with s^T contracts as tr_X[Y (s (x) 1)]
        m = link(c.op, Operator(s.T / 2, (2,), (party,)))
        out[k] = partial_transpose(m, [rest[0]]).matrix
    return out, rest


def _numpy_min_eig(basis: np.ndarray, coeffs: np.ndarray, out_min: np.ndarray, out_trace: np.ndarray,
                   threads: int = 1) -> None:
    n = coeffs.shape[0]

    def work(lo: int, hi: int) -> None:
        mats = np.einsum("nk,kij->nij", coeffs[lo:hi], basis)
        out_trace[lo:hi] = np.einsum("nii->n", mats).real
        out_min[lo:hi] = np.linalg.eigvalsh(mats)[:, 0]

    bounds = [(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(lambda b: work(*b), bounds))
    else:
        for b in bounds:
            work(*b)


def min_eig_batch(basis: np.ndarray, coeffs: np.ndarray, threads: int = 1,
                  backend: str = "auto") -> tuple[np.ndarray, np.ndarray, str]:
    """Smallest eigenvalue and trace of ``sum_k coeffs[i, k] basis[k]`` for every ``i``."""
    basis = np.ascontiguousarray(basis, dtype=complex)
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    n = coeffs.shape[0]
    out_min = np.empty(n)
    out_trace = np.empty(n)
    if backend == "auto":
        backend = "compiled" if _kernel_min_eig is not None else "numpy"
    if backend == "compiled":
        if _kernel_min_eig is None:
            raise RuntimeError("compiled scan kernel is not available in this installation")
        _kernel_min_eig(basis, coeffs, out_min, out_trace, int(threads))
    elif backend == "numpy":
        _numpy_min_eig(basis, coeffs, out_min, out_trace, threads)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return out_min, out_trace, backend


def conditional_scan(
    c: Comb,
    samples: int = 500_000,
    seed: int = 42,
    party: str = "all",
    sampling: str = "rectangle",
    threads: int | None = None,
    backend: str = "auto",
    tol: Tolerances = DEFAULT_TOL,
) -> ScanReport:
    """Smallest PPT eigenvalue of the normalized conditioned pair, per party.

    The result is keyed by the remaining pair, e.g. ``"AB|C"`` for effects on
    ``C``.  Samples whose conditioned operator has trace below
    ``tol.zero_probability`` are skipped and counted.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    parties = list(c.labels) if party == "all" else [party]
    threads = scan_threads() if threads is None else max(1, int(threads))
    t0 = time.perf_counter()
    theta, phi = sample_angles(samples, seed, sampling)
    coeffs = np.stack([np.ones(samples), np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi),
                       np.sin(theta)], axis=1)
    minima, argmin, skipped = {}, {}, {}
    used = backend
    for x in parties:
        basis, rest = pauli_components(c, x)
        lam, tr, used = min_eig_batch(basis, coeffs, threads, backend)
        ok = tr > tol.zero_probability
        vals = np.where(ok, lam / np.where(ok, tr, 1.0), np.inf)
        key = "".join(rest) + "|" + x
        skipped[key] = int((~ok).sum())
        if not ok.any():
            minima[key] = float("nan")
            argmin[key] = {}
            continue
        i = int(np.argmin(vals))
        minima[key] = float(vals[i])
        argmin[key] = {"index": i, "theta": float(theta[i]), "phi": float(phi[i])}
    grid = {"theta": [0.0, np.pi] if sampling == "rectangle" else [-np.pi / 2, np.pi / 2],
            "phi": [0.0, 2 * np.pi],
            "effect": "(1 + cos(theta)cos(phi) X + cos(theta)sin(phi) Y + sin(theta) Z)/2",
            "transpose_on": "first remaining label"}
    return ScanReport(minima, argmin, samples, skipped, int(seed), sampling, used, threads,
                      time.perf_counter() - t0, grid)
