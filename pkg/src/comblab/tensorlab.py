"""Dense multipartite operators and the handful of tensor operations on them.

The first label is the most significant tensor factor, so an operator on
``("A", "B", "C")`` is written in the basis ``|0_A 0_B 0_C>, |0_A 0_B 1_C>, ...``.
Operators are immutable: every operation returns a fresh value.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    DimensionError,
    LabelError,
    MalformedInputError,
    NotHermitianError,
    NotPSDError,
)

log = logging.getLogger(__name__)

__all__ = [
    "Operator",
    "StateVector",
    "EigenDecomposition",
    "kron",
    "partial_trace",
    "partial_transpose",
    "permute_subsystems",
    "herm_eig",
    "hermiticity_residual",
    "min_eig",
    "purify",
    "ket",
    "phi_plus",
    "identity",
    "operator_to_dict",
    "operator_from_dict",
    "read_operator",
    "write_operator",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _check_labels(dims: tuple[int, ...], labels: tuple[str, ...]) -> None:
    if len(dims) != len(labels):
        raise LabelError(f"{len(labels)} labels for {len(dims)} subsystems")
    if len(set(labels)) != len(labels):
        raise LabelError(f"labels must be distinct, got {labels}")
    for d in dims:
        if int(d) != d or d < 1:
            raise DimensionError(f"subsystem dimensions must be positive integers, got {dims}")


@dataclass(frozen=True, eq=False)
class Operator:
    """A square complex matrix acting on labelled tensor factors."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(str(l) for l in self.labels)
        _check_labels(dims, labels)
        m = np.asarray(self.matrix, dtype=complex)
        n = int(np.prod(dims)) if dims else 1
        if m.ndim == 0 and n == 1:
            m = m.reshape(1, 1)
        if m.shape != (n, n):
            raise DimensionError(f"matrix shape {m.shape} does not match dims {dims} (expected {n}x{n})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", _freeze(m))

    # -- construction helpers -------------------------------------------------
    @classmethod
    def scalar(cls, value: complex) -> "Operator":
        return cls(np.array([[value]], dtype=complex), (), ())

    @classmethod
    def identity(cls, dims: Sequence[int], labels: Sequence[str]) -> "Operator":
        n = int(np.prod(dims)) if len(dims) else 1
        return cls(np.eye(n, dtype=complex), tuple(dims), tuple(labels))

    # -- basic properties -----------------------------------------------------
    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_scalar(self) -> bool:
        return not self.dims

    @property
    def value(self) -> complex:
        """The single entry of a scalar operator."""
        if not self.is_scalar:
            raise DimensionError("value is only defined for operators without subsystems")
        return complex(self.matrix[0, 0])

    def dim_of(self, label: str) -> int:
        try:
            return self.dims[self.labels.index(label)]
        except ValueError:
            raise LabelError(f"unknown label {label!r}; operator has {self.labels}") from None

    def dims_of(self, labels: Iterable[str]) -> int:
        return int(np.prod([self.dim_of(l) for l in labels])) if labels else 1

    def tensor(self) -> np.ndarray:
        """Matrix reshaped to one row and one column axis per subsystem."""
        return self.matrix.reshape(self.dims + self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.dims, self.labels)

    def transpose(self) -> "Operator":
        return Operator(self.matrix.T, self.dims, self.labels)

    def with_matrix(self, matrix: np.ndarray) -> "Operator":
        return Operator(matrix, self.dims, self.labels)

    def relabel(self, mapping: Mapping[str, str]) -> "Operator":
        for old in mapping:
            self.dim_of(old)
        return Operator(self.matrix, self.dims, tuple(mapping.get(l, l) for l in self.labels))

    def hermitian_part(self) -> "Operator":
        return self.with_matrix((self.matrix + self.matrix.conj().T) / 2)

    def normalized(self) -> "Operator":
        t = self.trace().real
        if t <= 0:
            raise DimensionError("cannot normalize an operator with non-positive trace")
        return self.with_matrix(self.matrix / t)

    def aligned(self, other: "Operator") -> "Operator":
        """``other`` reordered to this operator's label order."""
        if set(other.labels) != set(self.labels):
            raise LabelError(f"label sets differ: {self.labels} vs {other.labels}")
        if other.labels != self.labels:
            other = permute_subsystems(other, self.labels)
        if other.dims != self.dims:
            raise DimensionError(f"dims differ: {self.dims} vs {other.dims}")
        return other

    def allclose(self, other: "Operator", atol: float = 1e-10) -> bool:
        return bool(np.abs(self.matrix - self.aligned(other).matrix).max(initial=0.0) <= atol)

    def distance(self, other: "Operator") -> float:
        """Max-norm distance after aligning labels."""
        return float(np.abs(self.matrix - self.aligned(other).matrix).max(initial=0.0))

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        return self.with_matrix(self.matrix + self.aligned(other).matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        return self.with_matrix(self.matrix - self.aligned(other).matrix)

    def __neg__(self) -> "Operator":
        return self.with_matrix(-self.matrix)

    def __mul__(self, c: complex) -> "Operator":
        if isinstance(c, Operator):
            return NotImplemented
        return self.with_matrix(self.matrix * c)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "Operator":
        return self.with_matrix(self.matrix / c)

    def __matmul__(self, other: "Operator") -> "Operator":
        """Ordinary matrix product on identical spaces."""
        return self.with_matrix(self.matrix @ self.aligned(other).matrix)

    def __repr__(self) -> str:
        return f"Operator(labels={self.labels}, dims={self.dims})"


class StateVector:
    """A ket on labelled tensor factors."""

    __slots__ = ("amplitudes", "dims", "labels")

    def __init__(self, amplitudes: np.ndarray, dims: Sequence[int], labels: Sequence[str]):
        dims = tuple(int(d) for d in dims)
        labels = tuple(str(l) for l in labels)
        _check_labels(dims, labels)
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = int(np.prod(dims)) if dims else 1
        if amps.shape != (n,):
            raise DimensionError(f"{amps.size} amplitudes for dims {dims}")
        if not np.all(np.isfinite(amps)):
            raise DimensionError("amplitudes must be finite")
        amps.setflags(write=False)
        self.amplitudes = amps
        self.dims = dims
        self.labels = labels

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm - 1.0) <= 1e-12

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm, self.dims, self.labels)

    def projector(self) -> Operator:
        return Operator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims, self.labels)

    def __repr__(self) -> str:
        return f"StateVector(labels={self.labels}, dims={self.dims}, norm={self.norm:.6g})"


# -- index helpers ------------------------------------------------------------

def _indices(x: Operator, labels: Iterable[str]) -> list[int]:
    labels = list(labels)
    out = []
    for l in labels:
        if l not in x.labels:
            raise LabelError(f"unknown label {l!r}; operator has {x.labels}")
        out.append(x.labels.index(l))
    if len(set(out)) != len(out):
        raise LabelError(f"repeated label in {labels}")
    return out


def kron(*ops: Operator) -> Operator:
    """Tensor product; labels are concatenated in argument order."""
    if not ops:
        return Operator.scalar(1.0)
    m = ops[0].matrix
    dims = list(ops[0].dims)
    labels = list(ops[0].labels)
    for op in ops[1:]:
        clash = set(labels) & set(op.labels)
        if clash:
            raise LabelError(f"kron of operators sharing labels {sorted(clash)}")
        m = np.kron(m, op.matrix)
        dims += op.dims
        labels += op.labels
    return Operator(m, dims, labels)


def partial_trace(x: Operator, over: Iterable[str]) -> Operator:
    idx = set(_indices(x, over))
    n = len(x.dims)
    keep = [i for i in range(n) if i not in idx]
    sub_in = list(range(n)) + [n + i if i not in idx else i for i in range(n)]
    sub_out = keep + [n + i for i in keep]
    t = np.einsum(x.tensor(), sub_in, sub_out)
    dims = tuple(x.dims[i] for i in keep)
    d = int(np.prod(dims)) if dims else 1
    return Operator(t.reshape(d, d), dims, tuple(x.labels[i] for i in keep))


def partial_transpose(x: Operator, on: Iterable[str]) -> Operator:
    idx = set(_indices(x, on))
    n = len(x.dims)
    axes = [n + i if i in idx else i for i in range(n)] + [i if i in idx else n + i for i in range(n)]
    return x.with_matrix(x.tensor().transpose(axes).reshape(x.dim, x.dim))


def permute_subsystems(x: Operator, new_order: Sequence[str]) -> Operator:
    new_order = list(new_order)
    if sorted(new_order) != sorted(x.labels):
        raise LabelError(f"{new_order} is not a permutation of {x.labels}")
    perm = _indices(x, new_order)
    n = len(x.dims)
    t = x.tensor().transpose(perm + [n + p for p in perm])
    return Operator(t.reshape(x.dim, x.dim), tuple(x.dims[p] for p in perm), tuple(new_order))


# -- spectra ------------------------------------------------------------------

def _as_matrix(x: Operator | np.ndarray) -> np.ndarray:
    return x.matrix if isinstance(x, Operator) else np.asarray(x, dtype=complex)


def hermiticity_residual(x: Operator | np.ndarray) -> float:
    m = _as_matrix(x)
    return float(np.abs(m - m.conj().T).max(initial=0.0))


class EigenDecomposition(tuple):
    """``(values, vectors)`` pair that also remembers the Hermiticity residual."""

    def __new__(cls, values: np.ndarray, vectors: np.ndarray, residual: float):
        obj = super().__new__(cls, (values, vectors))
        obj.residual = residual
        return obj

    @property
    def values(self) -> np.ndarray:
        return self[0]

    @property
    def vectors(self) -> np.ndarray:
        return self[1]


def herm_eig(x: Operator | np.ndarray, tol: Tolerances = DEFAULT_TOL) -> EigenDecomposition:
    """Eigen-decomposition of the Hermitian part of ``x``, eigenvalues ascending."""
    m = _as_matrix(x)
    res = hermiticity_residual(m)
    if res > tol.hermitian:
        raise NotHermitianError(res, tol.hermitian)
    log.debug("herm_eig: hermiticity residual %.3e", res)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return EigenDecomposition(w, v, res)


def min_eig(x: Operator | np.ndarray, tol: Tolerances = DEFAULT_TOL) -> float:
    m = _as_matrix(x)
    res = hermiticity_residual(m)
    if res > tol.hermitian:
        raise NotHermitianError(res, tol.hermitian)
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def purify(rho: Operator, tol: Tolerances = DEFAULT_TOL, ancilla: str = "anc") -> StateVector:
    """Minimal purification; the ancilla dimension equals the numerical rank."""
    if rho.trace().real <= 0:
        raise DimensionError("purify needs an operator with positive trace")
    w, v = herm_eig(rho, tol)
    if w[0] < -tol.psd:
        raise NotPSDError(w[0], tol.psd, "state to purify")
    keep = w > tol.rank * max(w[-1], 1.0)
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    r = max(len(w), 1)
    psi = (v * np.sqrt(np.clip(w, 0, None))) if len(w) else np.zeros((rho.dim, 1))
    if ancilla in rho.labels:
        raise LabelError(f"ancilla label {ancilla!r} already used")
    return StateVector(psi.reshape(-1), rho.dims + (r,), rho.labels + (ancilla,))


# -- common objects -----------------------------------------------------------

def ket(bits: str, labels: Sequence[str] | None = None, dims: Sequence[int] | None = None) -> StateVector:
    """Computational basis ket, e.g. ``ket("001")`` on three qubits."""
    dims = tuple(dims) if dims is not None else (2,) * len(bits)
    labels = tuple(labels) if labels is not None else tuple(f"q{i}" for i in range(len(dims)))
    digits = [int(b) for b in bits]
    idx = int(np.ravel_multi_index(digits, dims)) if dims else 0
    amps = np.zeros(int(np.prod(dims)) if dims else 1, dtype=complex)
    amps[idx] = 1.0
    return StateVector(amps, dims, labels)


def phi_plus(labels: Sequence[str], d: int = 2, normalized: bool = True) -> Operator:
    """Maximally entangled projector; unnormalized version has trace ``d``."""
    v = np.eye(d, dtype=complex).reshape(-1)
    m = np.outer(v, v)
    if normalized:
        m = m / d
    return Operator(m, (d, d), tuple(labels))


def identity(dims: Sequence[int], labels: Sequence[str]) -> Operator:
    return Operator.identity(dims, labels)


# -- JSON ---------------------------------------------------------------------

def operator_to_dict(x: Operator) -> dict:
    m = x.matrix
    return {
        "dims": list(x.dims),
        "labels": list(x.labels),
        "matrix": np.stack([m.real, m.imag], axis=-1).tolist(),
    }


def operator_from_dict(payload: Mapping) -> Operator:
    try:
        dims = payload["dims"]
        labels = payload["labels"]
        raw = payload["matrix"]
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"operator payload missing field: {exc}") from None
    if not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool) and d > 0 for d in dims):
        raise MalformedInputError(f"dims must be a list of positive integers, got {dims!r}")
    if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
        raise MalformedInputError("labels must be a list of strings")
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise MalformedInputError("matrix entries must be [re, im] pairs of numbers") from None
    n = int(np.prod(dims)) if dims else 1
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise MalformedInputError(f"matrix must be square with [re, im] entries, got shape {arr.shape}")
    if arr.shape[0] != n:
        raise MalformedInputError(f"matrix side {arr.shape[0]} does not match prod(dims) = {n}")
    try:
        return Operator(arr[..., 0] + 1j * arr[..., 1], dims, labels)
    except (LabelError, DimensionError) as exc:
        raise MalformedInputError(str(exc)) from None


def read_operator(path: str | Path) -> Operator:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON ({exc})") from None
    return operator_from_dict(payload)


def write_operator(x: Operator, path: str | Path) -> None:
    Path(path).write_text(json.dumps(operator_to_dict(x)))
