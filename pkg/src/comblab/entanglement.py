"""Entanglement criteria for states and combs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .comb import IN, OUT, Assemblage, Channel, Circuit, link
from .config import DEFAULT_TOL, Tolerances
from .errors import DimensionError, LabelError, NotPSDError, RoleError, SolverError
from .sdp import SdpOptions, SdpProblem, SdpSolution, maximize_lmi, solve
from .tensorlab import (
    Operator,
    StateVector,
    kron,
    min_eig,
    partial_trace,
    partial_transpose,
)

__all__ = [
    "CutSpec",
    "WitnessReport",
    "BisepResult",
    "EbVerdict",
    "LhsResult",
    "ppt_min_eig",
    "bisep_inequality",
    "gme_witness",
    "witness_expectation",
    "ghz_slocc_witness",
    "pure_tangle",
    "local_filter",
    "eb_check",
    "sigma_map",
    "lhs_feasibility",
    "bipartitions",
    "hermitian_basis",
]

GME_MARGIN = 1e-6


# --------------------------------------------------------------------------
# Cuts
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CutSpec:
    """A bipartition ``left : right`` of a label set, or the GME marker."""

    left: tuple[str, ...] = ()
    right: tuple[str, ...] = ()
    gme: bool = False

    def __post_init__(self) -> None:
        if self.gme:
            return
        if not self.left or not self.right:
            raise LabelError("both sides of a cut must be nonempty")
        if set(self.left) & set(self.right):
            raise LabelError(f"cut sides overlap: {self.left} vs {self.right}")

    @classmethod
    def parse(cls, text: str, labels: Sequence[str] | None = None) -> "CutSpec":
        """Parse ``"A:BC"`` (single-character labels) or ``"A,B:C"``."""
        if text.strip().upper() == "GME":
            return cls(gme=True)
        if text.count(":") != 1:
            raise LabelError(f"cut {text!r} must contain exactly one ':'")
        sides = []
        for part in text.split(":"):
            part = part.strip()
            names = [p.strip() for p in part.split(",")] if "," in part else list(part)
            sides.append(tuple(n for n in names if n))
        return cls(sides[0], sides[1])

    def check_covers(self, labels: Sequence[str]) -> None:
        if self.gme:
            return
        if sorted(self.left + self.right) != sorted(labels):
            raise LabelError(f"cut {self} does not cover labels {tuple(labels)}")

    def __str__(self) -> str:
        return "GME" if self.gme else f"{''.join(self.left)}:{''.join(self.right)}"


CutSpec.GME = CutSpec(gme=True)


def _as_cut(cut, labels: Sequence[str]) -> CutSpec:
    if isinstance(cut, CutSpec):
        c = cut
    elif isinstance(cut, str):
        c = CutSpec.parse(cut)
    else:
        left = tuple(cut)
        c = CutSpec(left, tuple(l for l in labels if l not in left))
    c.check_covers(labels)
    return c


def ppt_min_eig(rho: Operator, cut) -> float:
    """Smallest eigenvalue of the partial transpose across ``cut``."""
    c = _as_cut(cut, rho.labels)
    if c.gme:
        raise LabelError("ppt_min_eig needs a bipartite cut")
    return min_eig(partial_transpose(rho, c.left))


# --------------------------------------------------------------------------
# Biseparability inequality
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BisepResult:
    lhs: float
    rhs: float
    violated: bool

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.violated))


def bisep_inequality(rho: Operator, margin: float = 1e-12) -> BisepResult:
    """Compare ``|rho_{0..0,1..1}|`` with the diagonal bound valid for biseparable qubit states."""
    if any(d != 2 for d in rho.dims):
        raise DimensionError(f"bisep_inequality needs qubits, got dims {rho.dims}")
    n = len(rho.dims)
    m = rho.matrix
    full = 2 ** n - 1
    lhs = float(abs(m[0, full]))
    diag = np.real(np.diag(m))
    total = 0.0
    for i in range(1, full):
        total += np.sqrt(max(diag[i], 0.0) * max(diag[full ^ i], 0.0))
    rhs = 0.5 * total
    return BisepResult(lhs, float(rhs), bool(lhs > rhs + margin))


# --------------------------------------------------------------------------
# GME witness program
# --------------------------------------------------------------------------

def bipartitions(labels: Sequence[str]) -> list[tuple[str, ...]]:
    """One side of every bipartition: the smaller side, or the one holding the first label on ties."""
    labels = tuple(labels)
    n = len(labels)
    out = []
    for k in range(1, n // 2 + 1):
        for side in itertools.combinations(labels, k):
            if 2 * k == n and labels[0] not in side:
                continue
            out.append(side)
    return out


def hermitian_basis(d: int) -> sp.csr_matrix:
    """Rows are flattened ``E_ii``, ``E_ij + E_ji`` and ``i(E_ij - E_ji)`` for ``i < j``."""
    rows, cols, vals = [], [], []
    r = 0
    for i in range(d):
        rows.append(r), cols.append(i * d + i), vals.append(1.0)
        r += 1
    for i in range(d):
        for j in range(i + 1, d):
            rows += [r, r]
            cols += [i * d + j, j * d + i]
            vals += [1.0, 1.0]
            r += 1
            rows += [r, r]
            cols += [i * d + j, j * d + i]
            vals += [1j, -1j]
            r += 1
    return sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(d * d, d * d))


def _pt_permutation(dims: Sequence[int], labels: Sequence[str], side: Sequence[str]) -> np.ndarray:
    n = len(dims)
    idx = {l: i for i, l in enumerate(labels)}
    on = {idx[l] for l in side}
    axes = [n + i if i in on else i for i in range(n)] + [i if i in on else n + i for i in range(n)]
    d = int(np.prod(dims))
    return np.arange(d * d).reshape(tuple(dims) * 2).transpose(axes).reshape(-1)


@dataclass
class WitnessReport:
    witness: Operator
    value: float
    decompositions: dict[str, tuple[Operator, Operator]]
    scale: float
    status: str
    solver: dict = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if self.status != "optimal":
            return "no-verdict"
        if self.value < -GME_MARGIN:
            return "GME"
        if self.value >= 0:
            return "PPT-mixture"
        return "inconclusive"

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "verdict": self.verdict,
            "scale": self.scale,
            "status": self.status,
            "decomposition_residuals": self.residuals,
            "solver": self.solver,
        }


def gme_witness(
    rho: Operator,
    tol: Tolerances = DEFAULT_TOL,
    options: SdpOptions | None = None,
    psd_tol: float | None = None,
) -> WitnessReport:
    """Optimal fully decomposable witness for ``rho`` normalized to unit trace.

    Minimizes ``tr(W rho)`` over ``W = Q_M + P_M^{T_M}`` for every bipartition
    ``M`` with ``P_M, Q_M >= 0`` and ``tr W = 1``.  A negative value certifies
    that ``rho`` is not a PPT mixture and hence is genuinely multipartite
    entangled.  ``psd_tol`` relaxes the positivity precondition for rounded
    input data.
    """
    if len(rho.labels) < 2:
        raise LabelError("gme_witness needs at least two parties")
    scale = rho.trace().real
    if scale <= 0:
        raise DimensionError("input must have positive trace")
    lam = min_eig(rho, tol)
    ptol = tol.psd if psd_tol is None else psd_tol
    if lam < -ptol * scale:
        raise NotPSDError(lam, ptol, "gme_witness input")
    rho_n = rho.matrix / scale
    dims, labels = rho.dims, rho.labels
    d = int(np.prod(dims))
    sides = bipartitions(labels)
    K = len(sides)
    perms = [_pt_permutation(dims, labels, s) for s in sides]
    B = hermitian_basis(d)
    nb = B.shape[0]
    m = (K - 1) * nb + 1
    zero = sp.csr_matrix((nb, d * d), dtype=complex)
    ident = sp.csr_matrix(np.eye(d, dtype=complex).reshape(1, -1))

    coefficients = {}
    objective = {}
    blocks = []
    for k, perm in enumerate(perms):
        BT = B[:, perm]
        if k == 0:
            Q = sp.vstack([B] * (K - 1) + [ident])
            P = sp.vstack([BT] * (K - 1) + [ident])
            objective["Q0"] = rho_n
            objective["P0"] = rho_n.reshape(-1)[perm].reshape(d, d)
        else:
            Q = sp.vstack([(-B if j == k - 1 else zero) for j in range(K - 1)] + [sp.csr_matrix((1, d * d))])
            P = sp.vstack([(-BT if j == k - 1 else zero) for j in range(K - 1)] + [sp.csr_matrix((1, d * d))])
        coefficients[f"P{k}"] = sp.csr_matrix(P)
        coefficients[f"Q{k}"] = sp.csr_matrix(Q)
        blocks += [(f"P{k}", d), (f"Q{k}", d)]
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    prob = SdpProblem(blocks, objective, coefficients, rhs)
    sol = solve(prob, options)

    def pt(x: np.ndarray, k: int) -> np.ndarray:
        return x.reshape(-1)[perms[k]].reshape(d, d)

    W = sol.primal["Q0"] + pt(sol.primal["P0"], 0)
    W = (W + W.conj().T) / 2
    witness = Operator(W, dims, labels)
    decomp, residuals = {}, {}
    for k, side in enumerate(sides):
        P, Q = sol.primal[f"P{k}"], sol.primal[f"Q{k}"]
        name = "".join(side) + ":" + "".join(l for l in labels if l not in side)
        decomp[name] = (Operator(P, dims, labels), Operator(Q, dims, labels))
        residuals[name] = float(np.abs(W - Q - pt(P, k)).max())
    value = float(np.real(np.trace(W @ rho_n)))
    return WitnessReport(witness, value, decomp, scale, sol.status, sol.summary(), residuals)


def witness_expectation(w: Operator, rho: Operator) -> float:
    """``tr(W rho) / tr(rho)``."""
    r = w.aligned(rho)
    tr = r.trace().real
    if tr == 0:
        raise DimensionError("state has zero trace")
    return float(np.real(np.trace(w.matrix @ r.matrix)) / tr)


def ghz_slocc_witness(labels: Sequence[str] = ("A", "B", "C")) -> Operator:
    """``3/4 - |GHZ><GHZ|``: nonnegative on every state of the W class."""
    ghz = np.zeros(8, dtype=complex)
    ghz[0] = ghz[7] = 1 / np.sqrt(2)
    return Operator(0.75 * np.eye(8) - np.outer(ghz, ghz.conj()), (2, 2, 2), tuple(labels))


def pure_tangle(psi: StateVector) -> float:
    """Three-tangle ``4 |Det a|`` from Cayley's hyperdeterminant."""
    if psi.dims != (2, 2, 2):
        raise DimensionError(f"pure_tangle needs three qubits, got dims {psi.dims}")
    if not psi.is_normalized:
        raise DimensionError(f"state must be normalized (norm {psi.norm:.12g})")
    a = psi.amplitudes.reshape(2, 2, 2)
    d1 = (a[0, 0, 0] ** 2 * a[1, 1, 1] ** 2 + a[0, 0, 1] ** 2 * a[1, 1, 0] ** 2
          + a[0, 1, 0] ** 2 * a[1, 0, 1] ** 2 + a[1, 0, 0] ** 2 * a[0, 1, 1] ** 2)
    d2 = (a[0, 0, 0] * a[1, 1, 1] * a[0, 1, 1] * a[1, 0, 0]
          + a[0, 0, 0] * a[1, 1, 1] * a[1, 0, 1] * a[0, 1, 0]
          + a[0, 0, 0] * a[1, 1, 1] * a[1, 1, 0] * a[0, 0, 1]
          + a[0, 1, 1] * a[1, 0, 0] * a[1, 0, 1] * a[0, 1, 0]
          + a[0, 1, 1] * a[1, 0, 0] * a[1, 1, 0] * a[0, 0, 1]
          + a[1, 0, 1] * a[0, 1, 0] * a[1, 1, 0] * a[0, 0, 1])
    d3 = (a[0, 0, 0] * a[1, 1, 0] * a[1, 0, 1] * a[0, 1, 1]
          + a[1, 1, 1] * a[0, 0, 1] * a[0, 1, 0] * a[1, 0, 0])
    return float(4 * abs(d1 - 2 * d2 + 4 * d3))


def local_filter(rho: Operator, filters: Sequence[np.ndarray] | Mapping[str, np.ndarray],
                 tol: Tolerances = DEFAULT_TOL) -> Operator:
    """``A rho A^dag / tr(A rho A^dag)`` with ``A`` the product of local filters."""
    if isinstance(filters, Mapping):
        try:
            mats = [np.asarray(filters[l], dtype=complex) for l in rho.labels]
        except KeyError as exc:
            raise LabelError(f"no filter for label {exc}") from None
    else:
        mats = [np.asarray(f, dtype=complex) for f in filters]
    if len(mats) != len(rho.dims):
        raise DimensionError(f"{len(mats)} filters for {len(rho.dims)} parties")
    A = np.eye(1, dtype=complex)
    for f, dim in zip(mats, rho.dims):
        if f.shape != (dim, dim):
            raise DimensionError(f"filter of shape {f.shape} for a subsystem of dimension {dim}")
        cond = np.linalg.cond(f)
        if not np.isfinite(cond) or cond > tol.filter_condition:
            raise RoleError(f"filter is singular or ill conditioned (condition number {cond:.3g})")
        A = np.kron(A, f)
    out = A @ rho.matrix @ A.conj().T
    tr = np.trace(out).real
    if tr <= tol.zero_probability:
        raise RoleError("filtered operator has vanishing trace")
    return rho.with_matrix(out / tr)


# --------------------------------------------------------------------------
# Entanglement breaking and the Sigma map
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EbVerdict:
    verdict: str
    min_eig: float
    total_dim: int

    def __str__(self) -> str:
        return self.verdict


def eb_check(choi: Channel | Operator, inputs: Sequence[str] | None = None,
             tol: Tolerances = DEFAULT_TOL) -> EbVerdict:
    """PPT test on a Choi operator across the input/output cut."""
    if isinstance(choi, Channel):
        op, inputs = choi.op, choi.inputs
    else:
        op = choi
        if inputs is None:
            if len(op.labels) != 2:
                raise LabelError("give the input labels for a Choi operator with more than two factors")
            inputs = op.labels[-1:]
    lam = min_eig(op, tol)
    if lam < -tol.psd * max(1.0, op.trace().real):
        raise NotPSDError(lam, tol.psd, "Choi operator")
    ptm = ppt_min_eig(op, tuple(inputs))
    scale = max(1.0, op.trace().real)
    if ptm < -tol.psd * scale:
        return EbVerdict("not-EB", ptm, op.dim)
    if op.dim <= 6:
        return EbVerdict("EB", ptm, op.dim)
    return EbVerdict("PPT-inconclusive", ptm, op.dim)


def _two_step_roles(circuit: Circuit) -> tuple[str, str, str]:
    if len(circuit.steps) != 1:
        raise DimensionError(f"expected a two-step circuit with one channel, got {len(circuit.steps)} channels")
    dirs = [l.direction for l in circuit.legs]
    if dirs != [OUT, IN, OUT]:
        raise DimensionError(f"expected legs out/in/out, got {dirs}")
    a, b, c = (l.label for l in circuit.legs)
    return a, b, c


def sigma_map(circuit: Circuit, tol: Tolerances = DEFAULT_TOL) -> Channel:
    """Channel ``omega -> tr_env L(rho_env (x) omega)`` from the fed-in leg to the last leg.

    The Choi operator is assembled column by column from the action on
    ``|i><j|``, which does not pass through the compiled comb.
    """
    a, b, c = _two_step_roles(circuit)
    circuit.validate(tol)
    step = circuit.steps[0]
    if b not in step.inputs or c not in step.outputs:
        raise LabelError(f"the channel must map {b!r} (and the environment) to {c!r}")
    rho_env = partial_trace(circuit.initial, [a])
    db = step.op.dim_of(b)
    dc = step.op.dim_of(c)
    env_out = [l for l in step.outputs if l != c]
    choi = np.zeros((dc, db, dc, db), dtype=complex)
    for i in range(db):
        for j in range(db):
            e = np.zeros((db, db), dtype=complex)
            e[i, j] = 1
            arg = kron(rho_env, Operator(e, (db,), (b,)))
            out = link(step.op, arg)
            if env_out:
                out = partial_trace(out, env_out)
            choi[:, i, :, j] = out.matrix
    op = Operator(choi.reshape(dc * db, dc * db), (dc, db), (c, b))
    return Channel(op, (b,), (c,))


# --------------------------------------------------------------------------
# Channel steering
# --------------------------------------------------------------------------

@dataclass
class LhsResult:
    verdict: str
    margin: float
    model: dict[tuple[int, ...], Operator]
    solution: SdpSolution | None

    @property
    def unsteerable(self) -> bool:
        return self.verdict == "unsteerable"


def _herm_coords(d: int) -> np.ndarray:
    """Orthonormal Hermitian basis as an array ``(d*d, d, d)``."""
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
            e[i, j], e[j, i] = 1j * s, -1j * s
            out.append(e)
    return np.array(out)


def lhs_feasibility(asm: Assemblage, margin: float = 1e-8, options: SdpOptions | None = None) -> LhsResult:
    """Search for a local hidden model ``K^{a|x} = sum_lambda D_lambda(a|x) K^lambda``.

    Maximizes ``t`` with ``K^lambda >= t 1`` over all deterministic response
    functions; a model exists iff ``t* >= 0`` (up to ``margin``).
    """
    settings = asm.settings
    outcomes = [asm.outcomes(x) for x in settings]
    if len(settings) > 4 or any(len(o) > 4 for o in outcomes):
        raise DimensionError("at most 4 settings with at most 4 outcomes each")
    ref = asm.channel
    d = ref.dim
    basis = _herm_coords(d)
    nb = basis.shape[0]

    def coords(op: Operator) -> np.ndarray:
        m = ref.aligned(op).matrix
        return np.real(np.einsum("sij,ji->s", basis, m))

    strategies = list(itertools.product(*outcomes))
    L = len(strategies)
    E_rows, f = [], []
    for xi, x in enumerate(settings):
        for a in outcomes[xi]:
            sel = np.array([1.0 if lam[xi] == a else 0.0 for lam in strategies])
            E_rows.append(np.kron(sel, np.eye(nb)))
            f.append(coords(asm.members[(x, a)]))
    E = np.vstack(E_rows)
    f = np.concatenate(f)
    z0, *_ = np.linalg.lstsq(E, f, rcond=None)
    resid = float(np.abs(E @ z0 - f).max())
    if resid > 1e-8 * (1 + np.abs(f).max()):
        raise RoleError(f"assemblage members are inconsistent with a common channel (residual {resid:.2e})")
    N = sla.null_space(E)
    p = N.shape[1] + 1

    def herm(z: np.ndarray) -> np.ndarray:
        return np.einsum("s,sij->ij", z, basis)

    blocks = []
    for li in range(L):
        sl = slice(li * nb, (li + 1) * nb)
        F0 = herm(z0[sl])
        F = np.empty((p, d, d), dtype=complex)
        for j in range(N.shape[1]):
            F[j] = herm(N[sl, j])
        F[-1] = -np.eye(d)
        blocks.append((f"K{li}", F0, F))
    c = np.zeros(p)
    c[-1] = 1.0
    res = maximize_lmi(c, blocks, options)
    if res.status != "optimal":
        raise SolverError(f"steering program ended with status {res.status}: {res.solution.message}", res.solution)
    t = float(res.y[-1])
    model = {}
    for li, lam in enumerate(strategies):
        z = z0[li * nb:(li + 1) * nb] + N[li * nb:(li + 1) * nb] @ res.y[:-1]
        model[lam] = Operator(herm(z), ref.dims, ref.labels)
    verdict = "unsteerable" if t >= -margin else "steerable"
    return LhsResult(verdict, t, model, res.solution)
