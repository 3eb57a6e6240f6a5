"""Circuit realizations of two-step combs.

A comb ``Y`` on legs ``a`` (measured), ``b`` (fed in), ``c`` (measured) has
``tr_c Y = rho_a (x) 1_b``.  Purifying both sides gives

    Y = |Y><Y|  with  |Y> = (Psi (x) 1)(V^T)            (matrix form)

where ``Psi = psi (x) 1_b`` purifies ``rho_a (x) 1_b``.  Because ``Psi`` has
full column rank the matching map is unique, ``V^T = pinv(Psi) Y``, and the
marginal condition forces it to be an isometry from ``(r, b)`` to ``(c, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..comb import IN, OUT, Channel, Circuit, Comb, choi_of_isometry, compile_circuit, link, verify_causality
from ..config import DEFAULT_TOL, Tolerances
from ..errors import CausalityError, DimensionError
from ..tensorlab import Operator, herm_eig, partial_trace, partial_transpose
from ..entanglement import ppt_min_eig

__all__ = ["Dilation", "AuditItem", "dilate", "dilation_isometry", "audit_necessary_conditions", "fresh_label"]


def fresh_label(base: str, taken) -> str:
    label = base
    while label in taken:
        label += "'"
    return label


@dataclass
class Dilation:
    circuit: Circuit
    isometry: np.ndarray  # maps (env, fed-in leg) to (last leg, discarded wire)
    env_label: str
    discard_label: str
    residual: float


def _roles(c: Comb) -> tuple[str, str, str]:
    dirs = [l.direction for l in c.legs]
    if dirs != [OUT, IN, OUT]:
        raise DimensionError(f"dilation needs legs measured/fed-in/measured, got {dirs}")
    a, b, cc = (l.label for l in c.legs)
    return a, b, cc


def _purification_matrix(rho: np.ndarray, tol: Tolerances) -> np.ndarray:
    """``psi`` with ``psi psi^dag = rho``; square root when ``rho`` has full rank."""
    w, v = herm_eig(rho, tol)
    keep = w > tol.rank * max(w[-1], 1.0)
    if keep.all():
        return (v * np.sqrt(w)) @ v.conj().T
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    return v * np.sqrt(w)


def dilation_isometry(c: Comb, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(psi, V)`` for a causal comb normalized to ``d_b``."""
    a, b, cc = _roles(c)
    da, db, dc = (c.op.dim_of(x) for x in (a, b, cc))
    scale = c.op.trace().real / db  # 1 for a normalized comb
    y_op = c.op * (1 / scale)
    rho_a = partial_trace(y_op, [b, cc]).matrix / db
    psi = _purification_matrix(rho_a, tol)
    r = psi.shape[1]
    w, v = herm_eig(y_op, tol)
    keep = w > tol.rank * max(w[-1], 1.0)
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    vec = v * np.sqrt(w)  # columns |y_k> on (a, b, c)
    k = vec.shape[1]
    Y = vec.reshape(da * db, dc * k)  # rows (a, b), columns (c, k)
    Psi = np.einsum("ar,bB->abrB", psi, np.eye(db)).reshape(da * db, r * db)
    X = np.linalg.pinv(Psi) @ Y
    V = X.T  # (c, k) x (r, b)
    return psi, V


def dilate(c: Comb, tol: Tolerances = DEFAULT_TOL, env: str = "R", discard: str = "D") -> Dilation:
    """A circuit whose compiled comb is ``c``.

    The environment carries the purification of the first marginal and the
    discarded wire has dimension ``rank(c)``.  Raises :class:`CausalityError`
    if ``c`` is not a proper comb.
    """
    a, b, cc = _roles(c)
    rep = verify_causality(c, tol)
    if not rep.passed:
        raise CausalityError(f"cannot dilate a non-causal operator: {rep.levels}, min eig {rep.min_eig:.2e}")
    psi, V = dilation_isometry(c, tol)
    da, db, dc = (c.op.dim_of(x) for x in (a, b, cc))
    r, k = psi.shape[1], V.shape[0] // dc
    iso_res = float(np.abs(V.conj().T @ V - np.eye(V.shape[1])).max())
    if iso_res > 1e-8:
        raise CausalityError(f"matching map is not an isometry (residual {iso_res:.2e})")
    taken = set(c.labels)
    env = fresh_label(env, taken)
    discard = fresh_label(discard, taken | {env})
    vec = psi.reshape(-1)
    initial = Operator(np.outer(vec, vec.conj()), (da, r), (a, env))
    step = choi_of_isometry(V, (env, b), (cc, discard), (r, db), (dc, k))
    circuit = Circuit(initial, (step,), c.legs)
    scale = c.op.trace().real / db
    rebuilt = compile_circuit(circuit, tol)
    residual = rebuilt.op.distance(c.op * (1 / scale))
    return Dilation(circuit, V, env, discard, residual)


@dataclass(frozen=True)
class AuditItem:
    name: str
    min_eig: float

    @property
    def entangled(self) -> bool:
        return self.min_eig < -1e-9


def audit_necessary_conditions(circuit: Circuit) -> list[AuditItem]:
    """Entanglement checks on the building blocks of a one-channel circuit.

    The four items are: the initial state across (leg, environment), and the
    reduced channel with a ``|0><0|`` inserted on the fed-in leg, on the
    environment, or on the final leg.  A process can only be conditionally
    entangled on every pair if all four come out entangled.
    """
    if len(circuit.steps) != 1:
        raise DimensionError("audit expects a single channel")
    a, b, cc = (l.label for l in circuit.legs)
    env = [l for l in circuit.initial.labels if l != a]
    if len(env) != 1:
        raise DimensionError("initial state must live on the first leg and one environment wire")
    r = env[0]
    step = circuit.steps[0]
    extra = [l for l in step.outputs if l != cc]
    L = partial_trace(step.op, extra) if extra else step.op

    def zero(label: str) -> Operator:
        d = L.dim_of(label)
        m = np.zeros((d, d), dtype=complex)
        m[0, 0] = 1
        return Operator(m, (d,), (label,))

    items = [AuditItem(f"initial state {a}:{r}", ppt_min_eig(circuit.initial, (a,)))]
    for label, keep in ((b, (r, cc)), (r, (b, cc)), (cc, (b, r))):
        x = link(L, zero(label))
        items.append(AuditItem(f"|0><0|_{label} linked with channel, {keep[0]}:{keep[1]}", ppt_min_eig(x, (keep[0],))))
    return items
