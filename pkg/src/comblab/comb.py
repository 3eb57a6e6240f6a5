"""Quantum combs: link product, causality hierarchy, circuits and conditioning.

Leg directions are seen from the process.  An ``"out"`` leg carries a system
*out of* the process to an experimenter who measures it (Alice and Charlie in
a three-party comb); an ``"in"`` leg carries a system that an experimenter
feeds *into* the process (Bob).  The trace of a normalized comb is the product
of its ``"in"`` leg dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    CausalityError,
    DimensionError,
    LabelError,
    MalformedInputError,
    NotPSDError,
    RoleError,
)
from .tensorlab import (
    Operator,
    kron,
    min_eig,
    operator_from_dict,
    operator_to_dict,
    partial_trace,
    permute_subsystems,
)

__all__ = [
    "Leg",
    "Comb",
    "Channel",
    "Circuit",
    "Assemblage",
    "CausalityReport",
    "link",
    "link_all",
    "verify_causality",
    "compile_circuit",
    "choi_of_unitary",
    "choi_of_isometry",
    "choi_of_kraus",
    "identity_channel",
    "condition",
    "born_probability",
    "build_assemblage",
    "comb_to_dict",
    "comb_from_dict",
    "circuit_to_dict",
    "circuit_from_dict",
]

IN, OUT = "in", "out"


# --------------------------------------------------------------------------
# Link product
# --------------------------------------------------------------------------

def link(f: Operator, g: Operator) -> Operator:
    """Link product: contract shared labels as ``tr(F G^T)``, tensor the rest.

    Output labels are ``f``'s unshared labels followed by ``g``'s.
    """
    shared = [l for l in f.labels if l in g.labels]
    for l in shared:
        if f.dim_of(l) != g.dim_of(l):
            raise DimensionError(f"label {l!r} has dimension {f.dim_of(l)} vs {g.dim_of(l)}")
    if not shared:
        return kron(f, g)
    names = list(dict.fromkeys(list(f.labels) + list(g.labels)))
    row = {l: i for i, l in enumerate(names)}
    col = {l: len(names) + i for i, l in enumerate(names)}
    out_labels = [l for l in f.labels if l not in shared] + [l for l in g.labels if l not in shared]
    sub_f = [row[l] for l in f.labels] + [col[l] for l in f.labels]
    sub_g = [row[l] for l in g.labels] + [col[l] for l in g.labels]
    sub_o = [row[l] for l in out_labels] + [col[l] for l in out_labels]
    t = np.einsum(f.tensor(), sub_f, g.tensor(), sub_g, sub_o, optimize=True)
    dims = [f.dim_of(l) if l in f.labels else g.dim_of(l) for l in out_labels]
    d = int(np.prod(dims)) if dims else 1
    return Operator(t.reshape(d, d), dims, out_labels)


def link_all(ops: Iterable[Operator]) -> Operator:
    """Fold ``link`` left to right."""
    it = iter(ops)
    acc = next(it)
    for op in it:
        acc = link(acc, op)
    return acc


# --------------------------------------------------------------------------
# Combs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Leg:
    label: str
    direction: str
    step: int = 0

    def __post_init__(self) -> None:
        if self.direction not in (IN, OUT):
            raise RoleError(f"leg direction must be 'in' or 'out', got {self.direction!r}")


def _leg_groups(legs: Sequence[Leg]) -> list[tuple[str, list[str]]]:
    groups: list[tuple[str, list[str]]] = []
    for leg in legs:
        if groups and groups[-1][0] == leg.direction:
            groups[-1][1].append(leg.label)
        else:
            groups.append((leg.direction, [leg.label]))
    return groups


@dataclass(frozen=True, eq=False)
class Comb:
    """A process operator with leg metadata.

    ``normalization`` is the expected trace.  It defaults to the product of
    ``"in"`` leg dimensions; operators that are a fixed multiple of a proper
    comb can declare their actual trace here.
    """

    op: Operator
    legs: tuple[Leg, ...]
    normalization: float | None = None

    def __post_init__(self) -> None:
        legs = tuple(self.legs)
        labels = [l.label for l in legs]
        if sorted(labels) != sorted(self.op.labels):
            raise LabelError(f"legs {labels} do not match operator labels {self.op.labels}")
        op = self.op if tuple(labels) == self.op.labels else permute_subsystems(self.op, labels)
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "legs", legs)
        if self.normalization is None:
            object.__setattr__(self, "normalization", float(self.input_dim))

    @property
    def labels(self) -> tuple[str, ...]:
        return self.op.labels

    @property
    def input_dim(self) -> int:
        """Product of ``"in"`` leg dimensions (the trace of a normalized comb)."""
        return int(np.prod([self.op.dim_of(l.label) for l in self.legs if l.direction == IN] or [1]))

    def leg(self, label: str) -> Leg:
        for l in self.legs:
            if l.label == label:
                return l
        raise LabelError(f"comb has no leg {label!r}")

    def with_op(self, op: Operator) -> "Comb":
        return Comb(op, self.legs, self.normalization)


@dataclass
class CausalityReport:
    passed: bool
    levels: list[tuple[str, float]]
    min_eig: float
    tolerance: float
    loose: bool = False

    @property
    def max_residual(self) -> float:
        return max((r for _, r in self.levels), default=0.0)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "levels": [{"condition": n, "residual": r} for n, r in self.levels],
            "min_eig": self.min_eig,
            "tolerance": self.tolerance,
            "loose": self.loose,
        }


def verify_causality(c: Comb, tol: Tolerances = DEFAULT_TOL, loose: bool = False) -> CausalityReport:
    """Check positivity and the nested partial-trace conditions of a comb.

    Working from the latest leg backwards, tracing the last measured group
    must leave the identity on the preceding fed-in group tensored with a
    lower-order comb.  The last level compares the remaining scalar with
    ``normalization / input_dim``.
    """
    tau = tol.causality_loose if loose else tol.causality
    psd_tol = tol.causality_loose if loose else tol.psd
    levels: list[tuple[str, float]] = []
    try:
        lam = min_eig(c.op, tol.replace(hermitian=max(tol.hermitian, tau)))
    except Exception:
        lam = -np.inf
    groups = _leg_groups(c.legs)
    cur = c.op
    while groups:
        direction, labels = groups.pop()
        if direction == OUT:
            cur = partial_trace(cur, labels)
            if not groups:
                break
            direction, labels_in = groups.pop()
            name = f"tr_{''.join(labels)} = 1_{''.join(labels_in)} (x) lower"
        else:
            labels_in = labels
            name = f"1_{''.join(labels_in)} (x) lower"
        d = cur.dims_of(labels_in)
        lower = partial_trace(cur, labels_in) / d
        rebuilt = kron(Operator.identity([cur.dim_of(l) for l in labels_in], labels_in), lower)
        levels.append((name, cur.distance(rebuilt)))
        cur = lower
    expected = c.normalization / c.input_dim
    levels.append(("normalization", abs(cur.value - expected)))
    passed = lam >= -psd_tol and all(r <= tau for _, r in levels)
    return CausalityReport(bool(passed), levels, float(lam), tau, loose)


# --------------------------------------------------------------------------
# Channels
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Channel:
    """Choi operator of a CP map from ``inputs`` to ``outputs``."""

    op: Operator
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if sorted(self.inputs + self.outputs) != sorted(self.op.labels):
            raise LabelError(f"inputs {self.inputs} and outputs {self.outputs} must cover {self.op.labels}")

    def tp_residual(self) -> float:
        """Max-norm distance of ``tr_out`` from the identity on the inputs."""
        red = partial_trace(self.op, self.outputs)
        ident = Operator.identity(red.dims, red.labels)
        return red.distance(ident)

    def is_cptp(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.tp_residual() <= tol.cptp and min_eig(self.op, tol) >= -tol.psd

    def apply(self, rho: Operator) -> Operator:
        """Action on an operator defined on (a superset of) the input labels."""
        return link(self.op, rho)


def identity_channel(inp: str, out: str, d: int = 2) -> Channel:
    v = np.eye(d, dtype=complex).reshape(-1)
    return Channel(Operator(np.outer(v, v), (d, d), (out, inp)), (inp,), (out,))


def choi_of_isometry(
    v: np.ndarray,
    inputs: Sequence[str],
    outputs: Sequence[str],
    in_dims: Sequence[int] | None = None,
    out_dims: Sequence[int] | None = None,
) -> Channel:
    """Rank-one Choi ``(V (x) 1)|Phi~+><Phi~+|(V (x) 1)^dag`` with outputs first."""
    v = np.asarray(v, dtype=complex)
    in_dims = _guess_dims(v.shape[1], inputs, in_dims)
    out_dims = _guess_dims(v.shape[0], outputs, out_dims)
    vec = v.reshape(-1)  # sum_i V|i> (x) |i>
    op = Operator(np.outer(vec, vec.conj()), tuple(out_dims) + tuple(in_dims), tuple(outputs) + tuple(inputs))
    return Channel(op, tuple(inputs), tuple(outputs))


def choi_of_unitary(u: np.ndarray, inputs: Sequence[str], outputs: Sequence[str],
                    dims: Sequence[int] | None = None, tol: Tolerances = DEFAULT_TOL) -> Channel:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary must be square, got {u.shape}")
    res = float(np.abs(u @ u.conj().T - np.eye(u.shape[0])).max())
    if res > tol.unitary:
        raise RoleError(f"matrix is not unitary (residual {res:.2e})")
    return choi_of_isometry(u, inputs, outputs, dims, dims)


def choi_of_kraus(kraus: Sequence[np.ndarray], inputs: Sequence[str], outputs: Sequence[str],
                  in_dims: Sequence[int] | None = None, out_dims: Sequence[int] | None = None) -> Channel:
    ops = [choi_of_isometry(k, inputs, outputs, in_dims, out_dims).op for k in kraus]
    total = ops[0]
    for o in ops[1:]:
        total = total + o
    return Channel(total, tuple(inputs), tuple(outputs))


def _guess_dims(n: int, labels: Sequence[str], dims: Sequence[int] | None) -> tuple[int, ...]:
    if dims is not None:
        dims = tuple(int(d) for d in dims)
        if int(np.prod(dims)) != n or len(dims) != len(labels):
            raise DimensionError(f"dims {dims} inconsistent with size {n} and labels {tuple(labels)}")
        return dims
    if len(labels) == 1:
        return (n,)
    if n == 2 ** len(labels):
        return (2,) * len(labels)
    raise DimensionError(f"cannot infer subsystem dims of size {n} for labels {tuple(labels)}")


# --------------------------------------------------------------------------
# Circuits
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Circuit:
    """Initial system-environment state followed by channels.

    Labels are wires: a channel consumes the wires named by its inputs and
    creates the wires named by its outputs.  Wires listed in ``legs`` are the
    comb's open legs; every other wire left at the end is discarded.
    """

    initial: Operator
    steps: tuple[Channel, ...]
    legs: tuple[Leg, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "legs", tuple(self.legs))

    def validate(self, tol: Tolerances = DEFAULT_TOL) -> None:
        tr = self.initial.trace()
        if abs(tr - 1) > tol.trace:
            raise RoleError(f"initial state has trace {tr.real:.6g}, expected 1")
        lam = min_eig(self.initial, tol)
        if lam < -tol.psd:
            raise NotPSDError(lam, tol.psd, "initial state")
        for k, step in enumerate(self.steps):
            res = step.tp_residual()
            if res > tol.cptp:
                raise RoleError(f"step {k} is not trace preserving (residual {res:.2e})")
            lam = min_eig(step.op, tol)
            if lam < -tol.psd:
                raise NotPSDError(lam, tol.psd, f"step {k} Choi operator")


def compile_circuit(circuit: Circuit, tol: Tolerances = DEFAULT_TOL, check: bool = True) -> Comb:
    """Fold the circuit into a comb and check the result is causal."""
    circuit.validate(tol)
    acc = circuit.initial
    for step in circuit.steps:
        acc = link(acc, step.op)
    leg_labels = [l.label for l in circuit.legs]
    missing = set(leg_labels) - set(acc.labels)
    if missing:
        raise LabelError(f"legs {sorted(missing)} are not open wires of the circuit")
    env = [l for l in acc.labels if l not in leg_labels]
    if env:
        acc = partial_trace(acc, env)
    comb = Comb(acc, circuit.legs)
    if check:
        rep = verify_causality(comb, tol)
        if not rep.passed:
            raise CausalityError(f"compiled operator violates causality: {rep.levels}, min eig {rep.min_eig:.2e}")
    return comb


# --------------------------------------------------------------------------
# Conditioning and probabilities
# --------------------------------------------------------------------------

def _check_effect(c: Comb, leg: str, effect: Operator, tol: Tolerances) -> Leg:
    info = c.leg(leg)
    if effect.labels != (leg,):
        raise LabelError(f"effect must be defined on exactly the leg {leg!r}, got {effect.labels}")
    if effect.dims != (c.op.dim_of(leg),):
        raise DimensionError(f"effect dims {effect.dims} do not match leg {leg!r}")
    lam = min_eig(effect, tol)
    if lam < -tol.psd:
        raise RoleError(f"effect on {leg!r} is not positive (min eigenvalue {lam:.2e})")
    if info.direction == IN:
        if abs(effect.trace() - 1) > tol.trace:
            raise RoleError(f"state fed into {leg!r} must have unit trace, got {effect.trace().real:.6g}")
    else:
        top = np.linalg.eigvalsh(effect.hermitian_part().matrix)[-1]
        if top > 1 + tol.psd:
            raise RoleError(f"POVM element on {leg!r} exceeds the identity (max eigenvalue {top:.6g})")
    return info


def condition(c: Comb, leg: str, effect: Operator, tol: Tolerances = DEFAULT_TOL) -> Operator:
    """Unnormalized operator left after acting on one leg.

    On an ``"out"`` leg ``effect`` is a POVM element ``E`` and the result is
    ``tr_X[Y (E (x) 1)]``; on an ``"in"`` leg it is the state fed in.  The trace
    of the result is the probability weight of the event.
    """
    info = _check_effect(c, leg, effect, tol)
    if info.direction == OUT:
        return link(c.op, effect.transpose())
    return link(c.op, effect)


def born_probability(c: Comb, chois: Sequence[Operator]) -> float:
    """Probability ``Y * (M_1 (x) ... (x) M_k)`` for instrument Choi operators.

    Each ``M_j`` is a Choi operator on some of the legs and together they must
    cover every leg exactly once.  A POVM element ``E`` enters as ``E^T``, a
    state fed in enters as itself, and the identity channel between two legs
    as the unnormalized maximally entangled operator.
    """
    seen: list[str] = []
    for m in chois:
        seen += list(m.labels)
    if sorted(seen) != sorted(c.labels):
        raise DimensionError(f"effects cover {sorted(seen)} but the comb has legs {sorted(c.labels)}")
    acc = c.op
    for m in chois:
        acc = link(acc, m)
    val = acc.value
    return float(val.real)


# --------------------------------------------------------------------------
# Assemblages
# --------------------------------------------------------------------------

@dataclass
class Assemblage:
    """Members ``K^{a|x}`` keyed by ``(x, a)``, plus the channel they sum to."""

    members: dict[tuple[int, int], Operator]
    channel: Operator

    @property
    def settings(self) -> list[int]:
        return sorted({x for x, _ in self.members})

    def outcomes(self, x: int) -> list[int]:
        return sorted(a for xx, a in self.members if xx == x)

    def no_signalling_residual(self) -> float:
        worst = 0.0
        for x in self.settings:
            total = None
            for a in self.outcomes(x):
                total = self.members[(x, a)] if total is None else total + self.members[(x, a)]
            worst = max(worst, total.distance(self.channel))
        return worst


def build_assemblage(c: Comb, povms: Sequence[Sequence[Operator]], leg: str | None = None,
                     tol: Tolerances = DEFAULT_TOL) -> Assemblage:
    """Condition ``c`` on each outcome of each POVM on an ``"out"`` leg."""
    leg = leg or next(l.label for l in c.legs if l.direction == OUT)
    if c.leg(leg).direction != OUT:
        raise RoleError(f"assemblages are built from measurements on an 'out' leg, {leg!r} is 'in'")
    members = {}
    for x, povm in enumerate(povms):
        total = None
        for a, e in enumerate(povm):
            total = e if total is None else total + e
            members[(x, a)] = condition(c, leg, e, tol)
        ident = Operator.identity(total.dims, total.labels)
        res = total.distance(ident)
        if res > tol.trace:
            raise RoleError(f"POVM {x} does not sum to the identity (residual {res:.2e})")
    channel = partial_trace(c.op, [leg])
    asm = Assemblage(members, channel)
    return asm


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

def _legs_to_list(legs: Sequence[Leg]) -> list[dict]:
    return [{"label": l.label, "dir": l.direction, "step": l.step} for l in legs]


def _legs_from_list(raw) -> tuple[Leg, ...]:
    try:
        return tuple(Leg(str(d["label"]), str(d["dir"]), int(d.get("step", 0))) for d in raw)
    except (KeyError, TypeError, ValueError, RoleError) as exc:
        raise MalformedInputError(f"bad leg list: {exc}") from None


def comb_to_dict(c: Comb) -> dict:
    out = operator_to_dict(c.op)
    out["legs"] = _legs_to_list(c.legs)
    if c.normalization != c.input_dim:
        out["normalization"] = c.normalization
    return out


def comb_from_dict(payload: Mapping) -> Comb:
    op = operator_from_dict(payload)
    if "legs" not in payload:
        raise MalformedInputError("comb payload needs a 'legs' list")
    try:
        return Comb(op, _legs_from_list(payload["legs"]), payload.get("normalization"))
    except LabelError as exc:
        raise MalformedInputError(str(exc)) from None


def circuit_to_dict(c: Circuit) -> dict:
    return {
        "initial": operator_to_dict(c.initial),
        "steps": [dict(operator_to_dict(s.op), inputs=list(s.inputs), outputs=list(s.outputs)) for s in c.steps],
        "legs": _legs_to_list(c.legs),
    }


def circuit_from_dict(payload: Mapping) -> Circuit:
    try:
        initial = operator_from_dict(payload["initial"])
        steps = []
        for s in payload["steps"]:
            steps.append(Channel(operator_from_dict(s), tuple(s["inputs"]), tuple(s["outputs"])))
        return Circuit(initial, tuple(steps), _legs_from_list(payload["legs"]))
    except (KeyError, TypeError, LabelError) as exc:
        raise MalformedInputError(f"bad circuit payload: {exc}") from None
