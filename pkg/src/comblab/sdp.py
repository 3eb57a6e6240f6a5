"""Small dense semidefinite programs over Hermitian blocks.

Standard form::

    minimize    sum_k tr(C_k X_k)
    subject to  sum_k tr(A_ik X_k) = b_i      for every constraint row i
                X_k >= 0

with dual ``maximize b.y  s.t.  S_k = C_k - sum_i y_i A_ik >= 0``.

Complex Hermitian blocks are mapped to real symmetric blocks of twice the size
via ``[[Re, -Im], [Im, Re]]``; the coefficients are embedded with a factor 1/2
so that objective and constraint values are unchanged.  The two copies stay
tied because every coefficient lies in the image of the embedding, and the
iterates are projected back onto that image after each step to remove drift.

The algorithm is a primal-dual path-following method with Nesterov-Todd
scaling and a Mehrotra predictor-corrector step.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DimensionError, NotHermitianError
from .tensorlab import Operator

log = logging.getLogger(__name__)

__all__ = [
    "SdpProblem",
    "SdpOptions",
    "SdpSolution",
    "LmiResult",
    "solve",
    "maximize_lmi",
    "complex_to_real_embedding",
    "real_to_complex",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max-iter"


def complex_to_real_embedding(h: Operator | np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric ``2d x 2d`` matrix with the spectrum of ``h`` doubled."""
    m = h.matrix if isinstance(h, Operator) else np.asarray(h, dtype=complex)
    res = float(np.abs(m - m.conj().T).max(initial=0.0))
    if res > tol:
        raise NotHermitianError(res, tol)
    return _embed(m)


def _embed(m: np.ndarray) -> np.ndarray:
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def real_to_complex(r: np.ndarray) -> np.ndarray:
    """Inverse of the embedding, averaging the two copies."""
    n = r.shape[-1] // 2
    re = (r[..., :n, :n] + r[..., n:, n:]) / 2
    im = (r[..., n:, :n] - r[..., :n, n:]) / 2
    return re + 1j * im


def _tie(r: np.ndarray) -> np.ndarray:
    """Project a stack of real blocks onto the image of the embedding."""
    n = r.shape[-1] // 2
    re = (r[..., :n, :n] + r[..., n:, n:]) / 2
    im = (r[..., n:, :n] - r[..., :n, n:]) / 2
    out = np.empty_like(r)
    out[..., :n, :n] = re
    out[..., n:, n:] = re
    out[..., n:, :n] = im
    out[..., :n, n:] = -im
    return out


# --------------------------------------------------------------------------
# Problem data
# --------------------------------------------------------------------------

@dataclass
class SdpProblem:
    """Block SDP.

    ``coefficients[label]`` holds the constraint coefficients for one block,
    one row per constraint, either as an ``(m, n, n)`` array or as a sparse
    ``(m, n*n)`` matrix whose rows are row-major flattenings of ``A_ik``.
    Blocks listed in ``real_blocks`` are real symmetric; all others are
    complex Hermitian.
    """

    blocks: list[tuple[str, int]]
    objective: dict[str, np.ndarray]
    coefficients: dict[str, np.ndarray | sp.spmatrix]
    rhs: np.ndarray
    real_blocks: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        labels = [b for b, _ in self.blocks]
        if len(set(labels)) != len(labels):
            raise DimensionError("block labels must be distinct")
        m = self.num_constraints
        for label, n in self.blocks:
            c = self.objective.get(label)
            if c is not None and np.shape(c) != (n, n):
                raise DimensionError(f"objective for {label!r} has shape {np.shape(c)}, expected {(n, n)}")
            a = self.coefficients.get(label)
            if a is None:
                continue
            if sp.issparse(a):
                if a.shape != (m, n * n):
                    raise DimensionError(f"coefficients for {label!r} have shape {a.shape}, expected {(m, n * n)}")
            elif np.shape(a) != (m, n, n):
                raise DimensionError(f"coefficients for {label!r} have shape {np.shape(a)}, expected {(m, n, n)}")
        unknown = (set(self.objective) | set(self.coefficients)) - set(labels)
        if unknown:
            raise DimensionError(f"data given for undeclared blocks {sorted(unknown)}")

    @property
    def num_constraints(self) -> int:
        return int(self.rhs.size)

    @classmethod
    def from_rows(
        cls,
        blocks: Sequence[tuple[str, int]],
        objective: Mapping[str, np.ndarray | Operator],
        rows: Sequence[tuple[Mapping[str, np.ndarray | Operator], float]],
        real_blocks: frozenset[str] = frozenset(),
    ) -> "SdpProblem":
        """Build from an explicit list of ``({label: A_ik}, b_i)`` rows."""
        sizes = dict(blocks)
        entries: dict[str, tuple[list, list, list]] = {b: ([], [], []) for b in sizes}
        for i, (coeffs, _) in enumerate(rows):
            for label, a in coeffs.items():
                a = a.matrix if isinstance(a, Operator) else np.asarray(a)
                if label not in sizes:
                    raise DimensionError(f"row {i} refers to undeclared block {label!r}")
                flat = a.reshape(-1)
                nz = np.flatnonzero(flat)
                r, c, v = entries[label]
                r.extend([i] * len(nz))
                c.extend(nz.tolist())
                v.extend(flat[nz].tolist())
        m = len(rows)
        coefficients = {}
        for label, n in blocks:
            r, c, v = entries[label]
            if r:
                coefficients[label] = sp.csr_matrix((np.asarray(v, dtype=complex), (r, c)), shape=(m, n * n))
        obj = {k: (v.matrix if isinstance(v, Operator) else np.asarray(v, dtype=complex)) for k, v in objective.items()}
        return cls(list(blocks), obj, coefficients, np.array([b for _, b in rows], dtype=float), real_blocks)

    def check_hermitian(self, tol: float = 1e-10) -> float:
        worst = 0.0
        for label, n in self.blocks:
            c = self.objective.get(label)
            if c is not None:
                worst = max(worst, float(np.abs(c - np.conj(c).T).max(initial=0.0)))
            a = self.coefficients.get(label)
            if a is None:
                continue
            if sp.issparse(a):
                perm = np.arange(n * n).reshape(n, n).T.reshape(-1)
                diff = a - a[:, perm].conj()
                worst = max(worst, float(abs(diff).max()) if diff.nnz else 0.0)
            else:
                worst = max(worst, float(np.abs(a - np.conj(a).transpose(0, 2, 1)).max(initial=0.0)))
        if worst > tol:
            raise NotHermitianError(worst, tol)
        return worst


@dataclass(frozen=True)
class SdpOptions:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 150
    stall_iters: int = 30
    divergence: float = 1e6
    step_fraction: float = 0.98
    rank_tol: float = 1e-10
    max_size: int = 65536  # summed embedded block sizes


@dataclass
class SdpSolution:
    primal: dict[str, np.ndarray]
    dual: np.ndarray
    slack: dict[str, np.ndarray]
    objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    status: str
    iterations: int
    min_eig_primal: float
    min_eig_slack: float
    message: str = ""
    dropped_rows: list[int] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def kkt_residual(self) -> float:
        """Largest of the primal/dual residuals and the relative gap."""
        return max(self.primal_residual, self.dual_residual, self.gap / (1.0 + abs(self.objective)))

    def summary(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "objective": self.objective,
            "dual_objective": self.dual_objective,
            "gap": self.gap,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "min_eig_primal": self.min_eig_primal,
            "min_eig_slack": self.min_eig_slack,
            "message": self.message,
        }


# --------------------------------------------------------------------------
# Internal real-embedded representation
# --------------------------------------------------------------------------

class _Group:
    """Blocks of one real size sharing a storage scheme.

    Dense groups hold coefficients as ``(g, m, n, n)``; sparse groups hold a
    single block with a CSR matrix of shape ``(m, n*n)``.
    """

    def __init__(self, labels, n, tied, C, dense=None, sparse=None, cplx=None):
        self.labels = labels
        self.n = n
        self.tied = tied
        self.C = C
        self.dense = dense
        self.sparse = sparse
        # complex coefficients of tied blocks, used for a cheaper Schur product
        self.cplx = cplx

    @property
    def g(self) -> int:
        return len(self.labels)

    def apply(self, X: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return np.einsum("gmij,gij->m", self.dense, X, optimize=True)
        return self.sparse @ X[0].reshape(-1)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return np.einsum("gmij,m->gij", self.dense, y, optimize=True)
        return (self.sparse.T @ y).reshape(1, self.n, self.n)

    def schur(self, W: np.ndarray) -> np.ndarray:
        if self.cplx is not None:
            # For tied blocks tr(A_i W A_j W) = Re tr(a_i U a_j U) / 2 where a is the
            # complex coefficient and U the complex form of W.
            U = real_to_complex(W)
            if self.dense is not None:
                T = U[:, None] @ self.cplx @ U[:, None]
                return 0.5 * np.real(np.tensordot(self.cplx, np.swapaxes(T, -1, -2), axes=([0, 2, 3], [0, 2, 3])))
            d = U.shape[-1]
            K = np.kron(U[0], U[0].T)
            V = self.cplx @ K.T
            return 0.5 * np.real(np.asarray(self.cplx @ V.conj().T))
        if self.dense is not None:
            g, m, n, _ = self.dense.shape
            T = W[:, None] @ self.dense @ W[:, None]
            return np.tensordot(T, self.dense, axes=([0, 2, 3], [0, 2, 3]))
        K = np.kron(W[0], W[0])
        T = self.sparse @ K
        return np.asarray((self.sparse @ T.T))

    def row_norms_sq(self) -> np.ndarray:
        if self.dense is not None:
            return np.einsum("gmij,gmij->m", self.dense, self.dense)
        return np.asarray(self.sparse.multiply(self.sparse).sum(axis=1)).reshape(-1)

    def scale_rows(self, s: np.ndarray) -> None:
        if self.dense is not None:
            self.dense = self.dense * s[None, :, None, None]
            if self.cplx is not None:
                self.cplx = self.cplx * s[None, :, None, None]
        else:
            self.sparse = sp.diags(s) @ self.sparse
            if self.cplx is not None:
                self.cplx = sp.csr_matrix(sp.diags(s) @ self.cplx)

    def select_rows(self, keep: np.ndarray) -> None:
        if self.dense is not None:
            self.dense = self.dense[:, keep]
            if self.cplx is not None:
                self.cplx = self.cplx[:, keep]
        else:
            self.sparse = self.sparse[keep]
            if self.cplx is not None:
                self.cplx = self.cplx[keep]


def _embed_sparse(a: sp.spmatrix, n: int) -> sp.csr_matrix:
    """Row-wise embedding of complex coefficients (times 1/2)."""
    a = a.tocoo()
    i, j = np.divmod(a.col, n)
    re, im = a.data.real / 2, a.data.imag / 2
    N = 2 * n
    rows = np.concatenate([a.row] * 4)
    cols = np.concatenate([i * N + j, (n + i) * N + (n + j), i * N + (n + j), (n + i) * N + j])
    vals = np.concatenate([re, re, -im, im])
    out = sp.csr_matrix((vals, (rows, cols)), shape=(a.shape[0], N * N))
    out.eliminate_zeros()
    return out


def _build_groups(p: SdpProblem) -> tuple[list[_Group], list[tuple[str, int, bool]]]:
    m = p.num_constraints
    layout = []
    dense_by_size: dict[int, list] = {}
    groups: list[_Group] = []
    for label, n in p.blocks:
        is_real = label in p.real_blocks
        nr = n if is_real else 2 * n
        layout.append((label, n, is_real))
        C = p.objective.get(label)
        C = np.zeros((n, n), complex) if C is None else np.asarray(C, dtype=complex)
        Cr = C.real.copy() if is_real else _embed(C) / 2
        Cr = (Cr + Cr.T) / 2
        a = p.coefficients.get(label)
        if a is None:
            a = sp.csr_matrix((m, n * n), dtype=complex)
        if sp.issparse(a):
            ar = sp.csr_matrix(a.real) if is_real else _embed_sparse(a, n)
            cp = None if is_real else sp.csr_matrix(a, dtype=complex)
            groups.append(_Group([label], nr, not is_real, Cr[None], sparse=ar, cplx=cp))
        else:
            a = np.asarray(a, dtype=complex)
            if is_real:
                ar = a.real
            else:
                ar = np.empty((m, nr, nr))
                ar[:, :n, :n] = a.real / 2
                ar[:, n:, n:] = a.real / 2
                ar[:, :n, n:] = -a.imag / 2
                ar[:, n:, :n] = a.imag / 2
            dense_by_size.setdefault((nr, is_real), []).append((label, Cr, ar, None if is_real else a))
    for (nr, is_real), items in dense_by_size.items():
        labels = [it[0] for it in items]
        C = np.stack([it[1] for it in items])
        A = np.stack([it[2] for it in items])
        cp = None if is_real else np.stack([it[3] for it in items])
        groups.append(_Group(labels, nr, not is_real, C, dense=A, cplx=cp))
    return groups, layout


# --------------------------------------------------------------------------
# Solver
# --------------------------------------------------------------------------

def _sym(x: np.ndarray) -> np.ndarray:
    return (x + np.swapaxes(x, -1, -2)) / 2


def _max_step(L_inv_sqrt: np.ndarray, dhat: np.ndarray) -> float:
    """Largest alpha with Lambda + alpha*dhat >= 0 (Lambda diagonal)."""
    t = L_inv_sqrt[:, :, None] * dhat * L_inv_sqrt[:, None, :]
    lo = np.linalg.eigvalsh(_sym(t))[:, 0].min()
    return np.inf if lo >= 0 else -1.0 / lo


def _independent_rows(groups: list[_Group], m: int, tol: float) -> np.ndarray | None:
    """Return kept row indices if some rows are dependent, else ``None``."""
    G = np.zeros((m, m))
    for grp in groups:
        if grp.dense is not None:
            flat = grp.dense.transpose(1, 0, 2, 3).reshape(m, -1)
            G += flat @ flat.T
        else:
            G += np.asarray((grp.sparse @ grp.sparse.T).todense())
    try:
        L = np.linalg.cholesky(G)
        d = np.abs(np.diag(L))
        if d.min() > np.sqrt(tol) * d.max():
            return None
    except np.linalg.LinAlgError:
        pass
    _, R, piv = sla.qr(G, pivoting=True, mode="economic")
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * diag[0])) if diag.size else 0
    return np.sort(piv[:rank])


def solve(p: SdpProblem, options: SdpOptions | None = None) -> SdpSolution:
    """Solve ``p``; the returned residuals are recomputed on the original data."""
    opt = options or SdpOptions()
    p.check_hermitian()
    groups, layout = _build_groups(p)
    total = sum(g.n * g.g for g in groups)
    if total > opt.max_size:
        raise DimensionError(f"embedded problem too large ({total} > {opt.max_size})")
    b = p.rhs.copy()
    m = b.size
    rows = np.arange(m)
    dropped: list[int] = []

    if m:
        keep = _independent_rows(groups, m, opt.rank_tol)
        if keep is not None:
            dropped = sorted(set(range(m)) - set(keep.tolist()))
            warnings.warn(f"removed {len(dropped)} linearly dependent constraint rows", RuntimeWarning, stacklevel=2)
            for grp in groups:
                grp.select_rows(keep)
            rows = keep
            b = b[keep]
            m = b.size

    # row and objective normalization
    norms = np.sqrt(sum(g.row_norms_sq() for g in groups)) if m else np.zeros(0)
    norms[norms == 0] = 1.0
    row_scale = 1.0 / norms
    for grp in groups:
        grp.scale_rows(row_scale)
    bs = b * row_scale
    c_norm = np.sqrt(sum(float(np.sum(g.C ** 2)) for g in groups))
    c_scale = 1.0 / c_norm if c_norm > 0 else 1.0
    Cs = [g.C * c_scale for g in groups]

    Xs, y, Ss, it, status, msg = _ipm(groups, Cs, bs, opt, total)

    # unscale
    y_orig = np.zeros(p.num_constraints)
    y_orig[rows] = y * row_scale / c_scale
    Ss = [s / c_scale for s in Ss]
    return _package(p, layout, groups, Xs, Ss, y_orig, status, it, msg, dropped)


def _ipm(groups, Cs, b, opt: SdpOptions, total: int):
    m = b.size
    ng = len(groups)
    nrank = float(total)

    def A(X):
        out = np.zeros(m)
        for grp, x in zip(groups, X):
            out += grp.apply(x)
        return out

    def AT(y):
        return [grp.adjoint(y) for grp in groups]

    def inner(X, S):
        return float(sum(np.einsum("gij,gij->", x, s) for x, s in zip(X, S)))

    def tie(Z):
        return [_tie(z) if grp.tied else z for grp, z in zip(groups, Z)]

    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + np.sqrt(sum(float(np.sum(c ** 2)) for c in Cs))
    xi = max(1.0, max((1.0 + abs(bi)) for bi in b) if m else 1.0)
    eta = max(1.0, np.sqrt(sum(float(np.sum(c ** 2)) for c in Cs)))
    X = [xi * np.broadcast_to(np.eye(grp.n), (grp.g, grp.n, grp.n)).copy() for grp in groups]
    S = [eta * np.broadcast_to(np.eye(grp.n), (grp.g, grp.n, grp.n)).copy() for grp in groups]
    y = np.zeros(m)

    # sparse complex blocks share one Schur product per iteration
    tied_sparse = [grp.cplx for grp in groups if grp.cplx is not None and grp.dense is None]
    A_tied = sp.hstack(tied_sparse).tocsr() if tied_sparse else None
    Vh = np.empty((A_tied.shape[1], m), dtype=complex) if tied_sparse else None

    best = np.inf
    best_it = 0
    status, msg = MAX_ITER, "iteration limit reached"
    it = 0
    for it in range(1, opt.max_iter + 1):
        rp = b - A(X)
        ATy = AT(y)
        Rd = [c - a - s for c, a, s in zip(Cs, ATy, S)]
        pobj = inner(Cs, X)
        dobj = float(b @ y)
        mu = inner(X, S) / nrank
        pres = np.linalg.norm(rp) / bnorm
        dres = np.sqrt(sum(float(np.sum(r ** 2)) for r in Rd)) / cnorm
        gap = abs(pobj - dobj)
        log.debug("it %3d pobj %.9e dobj %.9e pres %.2e dres %.2e gap %.2e", it, pobj, dobj, pres, dres, gap)
        if pres <= opt.tol_feas and dres <= opt.tol_feas and gap <= opt.tol_gap * (1 + abs(pobj)) \
                and mu * nrank <= opt.tol_gap * (1 + abs(pobj)) * 10:
            status, msg = OPTIMAL, "converged"
            break
        if it > 5 and dobj > opt.divergence and dres <= 1e-3:
            status, msg = INFEASIBLE, "dual objective diverged: primal infeasible"
            break
        if it > 5 and pobj < -opt.divergence and pres <= 1e-3:
            status, msg = INFEASIBLE, "primal objective diverged: dual infeasible"
            break
        merit = max(pres, dres, gap / (1 + abs(pobj)))
        if merit < best * (1 - 1e-3):
            best, best_it = merit, it
        elif it - best_it >= opt.stall_iters:
            status, msg = MAX_ITER, "no progress in merit function"
            break

        # Nesterov-Todd scaling per group
        try:
            L1 = [np.linalg.cholesky(x) for x in X]
            L2 = [np.linalg.cholesky(s) for s in S]
        except np.linalg.LinAlgError:
            status, msg = MAX_ITER, "iterate lost positive definiteness"
            break
        R, Rinv, lam, W = [], [], [], []
        for l1, l2 in zip(L1, L2):
            U, lm, Vt = np.linalg.svd(np.swapaxes(l2, -1, -2) @ l1)
            isq = 1.0 / np.sqrt(lm)
            r = (l1 @ np.swapaxes(Vt, -1, -2)) * isq[:, None, :]
            rinv = isq[:, :, None] * (np.swapaxes(U, -1, -2) @ np.swapaxes(l2, -1, -2))
            R.append(r)
            Rinv.append(rinv)
            lam.append(lm)
            W.append(_sym(r @ np.swapaxes(r, -1, -2)))

        M = np.zeros((m, m))
        off = 0
        for grp, w in zip(groups, W):
            if grp.cplx is not None and grp.dense is None:
                U = real_to_complex(w[0])
                dd = grp.cplx.shape[1]
                np.conjugate((grp.cplx @ np.kron(U, U.T).T).T, out=Vh[off:off + dd])
                off += dd
            else:
                M += grp.schur(w)
        if A_tied is not None:
            M += 0.5 * np.real(np.asarray(A_tied @ Vh))
        M = _sym(M)
        chol = _factor(M)
        if chol is None:
            status, msg = MAX_ITER, "Schur complement factorization failed"
            break

        WRdW = [w @ rd @ w for w, rd in zip(W, Rd)]

        def direction(D):
            RDR = [r @ d @ np.swapaxes(r, -1, -2) for r, d in zip(R, D)]
            rhs = rp - A([a - c for a, c in zip(RDR, WRdW)])
            dy = _solve(chol, rhs)
            ATdy = AT(dy)
            dS = [rd - a for rd, a in zip(Rd, ATdy)]
            dX = [_sym(a - w @ ds @ w) for a, w, ds in zip(RDR, W, dS)]
            return tie(dX), dy, tie([_sym(d) for d in dS])

        def scaled(dX, dS):
            dXh = [_sym(ri @ dx @ np.swapaxes(ri, -1, -2)) for ri, dx in zip(Rinv, dX)]
            dSh = [_sym(np.swapaxes(r, -1, -2) @ ds @ r) for r, ds in zip(R, dS)]
            return dXh, dSh

        def steps(dXh, dSh):
            ap = min([_max_step(1 / np.sqrt(l), d) for l, d in zip(lam, dXh)] + [np.inf])
            ad = min([_max_step(1 / np.sqrt(l), d) for l, d in zip(lam, dSh)] + [np.inf])
            return ap, ad

        # predictor
        D_aff = [-(l[:, :, None] * np.eye(l.shape[1])[None]) for l in lam]
        dXa, dya, dSa = direction(D_aff)
        dXah, dSah = scaled(dXa, dSa)
        ap, ad = steps(dXah, dSah)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = inner([x + ap * dx for x, dx in zip(X, dXa)], [s + ad * ds for s, ds in zip(S, dSa)]) / nrank
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # corrector
        D = []
        for l, dxh, dsh in zip(lam, dXah, dSah):
            n = l.shape[1]
            rhs = -(dxh @ dsh + dsh @ dxh) / 2
            diag = sigma * mu - l ** 2
            rhs[:, np.arange(n), np.arange(n)] += diag
            D.append(2 * rhs / (l[:, :, None] + l[:, None, :]))
        dX, dy, dS = direction(D)
        dXh, dSh = scaled(dX, dS)
        ap, ad = steps(dXh, dSh)
        ap = min(1.0, opt.step_fraction * ap)
        ad = min(1.0, opt.step_fraction * ad)
        X = tie([_sym(x + ap * dx) for x, dx in zip(X, dX)])
        y = y + ad * dy
        S = tie([_sym(s + ad * ds) for s, ds in zip(S, dS)])
    return X, y, S, it, status, msg


def _factor(M: np.ndarray):
    if M.size == 0:
        return ("empty", None)
    try:
        return ("chol", sla.cho_factor(M, lower=True, check_finite=False))
    except (np.linalg.LinAlgError, sla.LinAlgError):
        pass
    scale = max(np.abs(np.diag(M)).max(), 1e-300)
    for reg in (1e-14, 1e-12, 1e-10):
        try:
            return ("chol", sla.cho_factor(M + reg * scale * np.eye(M.shape[0]), lower=True, check_finite=False))
        except (np.linalg.LinAlgError, sla.LinAlgError):
            continue
    try:
        return ("lu", sla.lu_factor(M, check_finite=False))
    except (ValueError, sla.LinAlgError):
        return None


def _solve(fact, rhs: np.ndarray) -> np.ndarray:
    kind, f = fact
    if kind == "empty":
        return rhs
    if kind == "chol":
        return sla.cho_solve(f, rhs, check_finite=False)
    return sla.lu_solve(f, rhs, check_finite=False)


def _package(p, layout, groups, Xs, Ss, y, status, it, msg, dropped) -> SdpSolution:
    where = {}
    for gi, grp in enumerate(groups):
        for k, label in enumerate(grp.labels):
            where[label] = (gi, k)
    primal, slack = {}, {}
    for label, n, is_real in layout:
        gi, k = where[label]
        xr, sr = Xs[gi][k], Ss[gi][k]
        if is_real:
            primal[label], slack[label] = xr.copy(), sr.copy()
        else:
            primal[label] = real_to_complex(xr)
            slack[label] = 2 * real_to_complex(sr)

    # residuals on the original complex data
    m = p.num_constraints
    Ax = np.zeros(m)
    ATy = {}
    pobj = 0.0
    for label, n, _ in layout:
        X = primal[label]
        a = p.coefficients.get(label)
        if a is not None:
            if sp.issparse(a):
                Ax += np.real(a @ X.T.reshape(-1))
                ATy[label] = np.asarray(a.T @ y).reshape(n, n)
            else:
                Ax += np.real(np.einsum("mij,ji->m", a, X))
                ATy[label] = np.einsum("mij,m->ij", a, y)
        else:
            ATy[label] = np.zeros((n, n))
        C = p.objective.get(label)
        if C is not None:
            pobj += float(np.real(np.trace(C @ X)))
    dobj = float(p.rhs @ y)
    pres = float(np.linalg.norm(Ax - p.rhs) / (1 + np.linalg.norm(p.rhs)))
    dres_sq, cn_sq = 0.0, 0.0
    mins_x, mins_s = [], []
    for label, n, _ in layout:
        C = p.objective.get(label)
        C = np.zeros((n, n)) if C is None else C
        dres_sq += float(np.sum(np.abs(C - ATy[label] - slack[label]) ** 2))
        cn_sq += float(np.sum(np.abs(C) ** 2))
        mins_x.append(np.linalg.eigvalsh(primal[label])[0])
        mins_s.append(np.linalg.eigvalsh(slack[label])[0])
    dres = float(np.sqrt(dres_sq) / (1 + np.sqrt(cn_sq)))
    return SdpSolution(
        primal=primal,
        dual=y,
        slack=slack,
        objective=pobj,
        dual_objective=dobj,
        gap=abs(pobj - dobj),
        primal_residual=pres,
        dual_residual=dres,
        status=status,
        iterations=it,
        min_eig_primal=float(min(mins_x, default=0.0)),
        min_eig_slack=float(min(mins_s, default=0.0)),
        message=msg,
        dropped_rows=dropped,
    )


# --------------------------------------------------------------------------
# Linear matrix inequalities
# --------------------------------------------------------------------------

@dataclass
class LmiResult:
    y: np.ndarray
    value: float
    solution: SdpSolution

    @property
    def status(self) -> str:
        return self.solution.status


def maximize_lmi(
    c: np.ndarray,
    blocks: Sequence[tuple[str, np.ndarray, np.ndarray]],
    options: SdpOptions | None = None,
    real_blocks: frozenset[str] = frozenset(),
) -> LmiResult:
    """Maximize ``c.y`` subject to ``F0_k + sum_i y_i F_ik >= 0`` for every block.

    Each block is ``(label, F0, F)`` with ``F`` of shape ``(len(c), n, n)``.
    """
    c = np.asarray(c, dtype=float)
    layout, obj, coeffs = [], {}, {}
    for label, F0, F in blocks:
        F0 = np.asarray(F0)
        F = np.asarray(F)
        if F.shape != (c.size,) + F0.shape:
            raise DimensionError(f"block {label!r}: F has shape {F.shape}, expected {(c.size,) + F0.shape}")
        layout.append((label, F0.shape[0]))
        obj[label] = F0
        coeffs[label] = -F
    prob = SdpProblem(layout, obj, coeffs, c, real_blocks)
    sol = solve(prob, options)
    return LmiResult(sol.dual.copy(), float(c @ sol.dual), sol)
