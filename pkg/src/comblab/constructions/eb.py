"""Circuits with an entanglement-breaking channel on a chosen wire.

Each construction starts from an explicit separable decomposition of a
three-party comb (legs measured ``a``, fed-in ``b``, measured ``c``) and
returns a circuit containing a measure-and-prepare channel whose compiled comb
is the input.  No decomposition is searched for.

* ``"C:AB"``: terms ``(p, xi_ab, eta_c)`` with ``Y = d_b sum p xi (x) eta``.
  The primed wire has one level per term; no claim of minimality is made.
* ``"A:BC"``: terms ``(rho_a, G_bc)`` with ``Y = sum rho (x) G``.  With
  ``method="dual"`` the states must be linearly independent and the channels
  are recovered through the dual set; with ``method="channels"`` every ``G`` must
  already be proportional to a channel.
* ``"B:AC"``: terms ``(p, E_b, G_ac)`` with unit-trace ``E`` and ``G``,
  ``Y = d_b sum p E (x) G``, and linearly independent ``E``.

:func:`full_separable_decomposition` expands a circuit holding two
measure-and-prepare channels into explicit product terms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..comb import IN, OUT, Channel, Circuit, Comb, Leg, compile_circuit, condition, link, verify_causality
from ..config import DEFAULT_TOL, Tolerances
from ..entanglement import CutSpec
from ..errors import CausalityError, DimensionError, HypothesisError
from ..tensorlab import Operator, kron, partial_trace
from .dilation import dilate, fresh_label
from .randomized import random_channel, random_density, random_povm, random_pure

__all__ = [
    "MeasurePrepare",
    "EbRepresentation",
    "ProductTerm",
    "SeparableExpansion",
    "eb_representation",
    "full_separable_decomposition",
    "informationally_complete_states",
    "informationally_complete_povm",
    "random_c_ab_instance",
    "random_a_bc_instance",
    "random_b_ac_instance",
    "random_two_eb_circuit",
]

_DECOMP_TOL = 1e-8


@dataclass(frozen=True)
class MeasurePrepare:
    """Measure ``inp`` with ``effects`` and prepare the matching ``states`` on ``out``."""

    inp: str
    out: str
    effects: tuple[Operator, ...]
    states: tuple[Operator, ...]

    def term(self, k: int) -> Operator:
        return kron(self.states[k], self.effects[k].transpose())

    def channel(self) -> Channel:
        op = self.term(0)
        for k in range(1, len(self.effects)):
            op = op + self.term(k)
        return Channel(op, (self.inp,), (self.out,))

    def __len__(self) -> int:
        return len(self.effects)


@dataclass
class EbRepresentation:
    splitting: str
    method: str
    circuit: Circuit
    eb: MeasurePrepare
    primed_dim: int
    residual: float
    details: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _basis_op(label: str, d: int, k: int) -> Operator:
    m = np.zeros((d, d), dtype=complex)
    m[k, k] = 1
    return Operator(m, (d,), (label,))


def _roles(c: Comb) -> tuple[str, str, str]:
    if [l.direction for l in c.legs] != [OUT, IN, OUT]:
        raise DimensionError("EB representations are defined for measured/fed-in/measured combs")
    return tuple(l.label for l in c.legs)  # type: ignore[return-value]


def _lone_party(splitting, labels: Sequence[str]) -> str:
    cut = splitting if isinstance(splitting, CutSpec) else CutSpec.parse(str(splitting))
    cut.check_covers(labels)
    if len(cut.left) == 1:
        return cut.left[0]
    if len(cut.right) == 1:
        return cut.right[0]
    raise DimensionError(f"splitting {cut} does not isolate one party")


def _require_psd(x: Operator, what: str, tol: Tolerances) -> None:
    lam = float(np.linalg.eigvalsh(x.hermitian_part().matrix)[0])
    if lam < -tol.psd * max(1.0, x.trace().real):
        raise HypothesisError(f"{what} is not positive semidefinite (min eigenvalue {lam:.2e})")


def _check_reconstruction(c: Comb, total: Operator) -> float:
    res = c.op.distance(total)
    if res > _DECOMP_TOL * max(1.0, np.abs(c.op.matrix).max()):
        raise HypothesisError(f"the supplied decomposition does not reproduce the comb (residual {res:.2e})")
    return res


def _independence(ops: Sequence[Operator], what: str, tol: Tolerances) -> np.ndarray:
    """Column matrix of vectorized ``ops``; refuses linearly dependent sets."""
    R = np.stack([o.matrix.reshape(-1) for o in ops], axis=1)
    s = np.linalg.svd(R, compute_uv=False)
    if len(ops) > R.shape[0] or s[-1] < tol.rank * s[0]:
        smallest = 0.0 if len(ops) > R.shape[0] else s[-1] / s[0]
        raise HypothesisError(
            f"hypothesis failed: the {what} are linearly dependent "
            f"(relative smallest singular value {smallest:.2e} < {tol.rank:.0e})"
        )
    return R


def _duals(R: np.ndarray) -> np.ndarray:
    """Columns ``D`` with ``D^dag R = 1``, i.e. ``tr(x_a Delta_b^dag) = delta_ab``."""
    return R @ np.linalg.inv(R.conj().T @ R)


def informationally_complete_states(d: int) -> list[np.ndarray]:
    """``d^2`` pure states spanning the operator space: basis states and pairwise superpositions."""
    out = []
    eye = np.eye(d, dtype=complex)
    for i in range(d):
        out.append(np.outer(eye[i], eye[i]))
    for i in range(d):
        for j in range(i + 1, d):
            for phase in (1, 1j):
                v = (eye[i] + phase * eye[j]) / np.sqrt(2)
                out.append(np.outer(v, v.conj()))
    return out


def informationally_complete_povm(d: int) -> list[np.ndarray]:
    states = informationally_complete_states(d)
    s = sum(states)
    w, v = np.linalg.eigh(s)
    inv = (v / np.sqrt(w)) @ v.conj().T
    return [inv @ x @ inv for x in states]


def _expand(target: np.ndarray, frame: Sequence[np.ndarray]) -> np.ndarray:
    """Real coefficients of a Hermitian ``target`` in a Hermitian spanning ``frame``."""
    F = np.stack([f.reshape(-1) for f in frame], axis=1)
    coef, *_ = np.linalg.lstsq(F, target.reshape(-1), rcond=None)
    return coef.real


def _finish(c: Comb, circuit: Circuit, tol: Tolerances) -> float:
    rebuilt = compile_circuit(circuit, tol)
    return rebuilt.op.distance(c.op)


def _dilate_proper(tilde: Comb, tol: Tolerances, taken: set[str]):
    rep = verify_causality(tilde, tol.replace(causality=max(tol.causality, 1e-8)))
    if not rep.passed:
        raise HypothesisError(f"intermediate comb is not causal ({rep.levels}); decomposition inconsistent")
    try:
        return dilate(tilde, tol.replace(causality=max(tol.causality, 1e-8)),
                      env=fresh_label("R", taken), discard=fresh_label("D", taken))
    except CausalityError as exc:
        raise HypothesisError(str(exc)) from None


# --------------------------------------------------------------------------
# the three splittings
# --------------------------------------------------------------------------

def _eb_on_last(c: Comb, terms, tol: Tolerances) -> EbRepresentation:
    a, b, cc = _roles(c)
    db = c.op.dim_of(b)
    if not terms:
        raise HypothesisError("empty decomposition")
    total = None
    for p, xi, eta in terms:
        if p < 0:
            raise HypothesisError("weights must be nonnegative")
        _require_psd(xi, "a term on the first two legs", tol)
        _require_psd(eta, "a state on the last leg", tol)
        t = kron(xi, eta) * (db * p)
        total = t if total is None else total + t
    res0 = _check_reconstruction(c, total)
    n = len(terms)
    primed = fresh_label(cc + "'", set(c.labels))
    tilde_op = None
    for k, (p, xi, _) in enumerate(terms):
        t = kron(xi, _basis_op(primed, n, k)) * (db * p)
        tilde_op = t if tilde_op is None else tilde_op + t
    tilde = Comb(tilde_op, (Leg(a, OUT, 1), Leg(b, IN, 1), Leg(primed, OUT, 2)))
    dil = _dilate_proper(tilde, tol, set(c.labels) | {primed})
    eb = MeasurePrepare(primed, cc, tuple(_basis_op(primed, n, k) for k in range(n)),
                        tuple(eta.normalized() for _, _, eta in terms))
    circuit = Circuit(dil.circuit.initial, dil.circuit.steps + (eb.channel(),), c.legs)
    return EbRepresentation("C:AB", "flag", circuit, eb, n, _finish(c, circuit, tol),
                            {"decomposition_residual": res0})


def _eb_on_first(c: Comb, terms, tol: Tolerances, method: str) -> EbRepresentation:
    a, b, cc = _roles(c)
    da, db = c.op.dim_of(a), c.op.dim_of(b)
    if not terms:
        raise HypothesisError("empty decomposition")
    total = None
    for rho, g in terms:
        _require_psd(rho, "a state on the first leg", tol)
        _require_psd(g, "an operator on the last two legs", tol)
        t = kron(rho, g)
        total = t if total is None else total + t
    res0 = _check_reconstruction(c, total)
    rhos = [rho.normalized() for rho, _ in terms]
    details = {"decomposition_residual": res0}
    n = len(terms)

    if method == "dual":
        R = _independence(rhos, "first-leg states", tol)
        D = _duals(R)
        povm = informationally_complete_povm(da)
        frame = [p for p in povm]
        conditioned = [condition(c, a, Operator(p, (da,), (a,)), tol) for p in povm]
        q = np.array([f.trace().real / db for f in conditioned])
        gs, mus = [], []
        for k in range(n):
            delta = D[:, k].reshape(da, da)
            coef = _expand(delta, frame)
            g = conditioned[0] * coef[0]
            for j in range(1, len(coef)):
                g = g + conditioned[j] * coef[j]
            gs.append(g)
            mus.append(float(coef @ q))
        details["dual_coefficient_sums"] = mus
    elif method == "channels":
        # absorb the trace of each state into its partner
        gs = [g * rho.trace().real for rho, g in terms]
        mus = []
        for k, g in enumerate(gs):
            red = partial_trace(g, [cc])
            mu = red.trace().real / db
            res = red.distance(Operator.identity(red.dims, red.labels) * mu)
            if res > _DECOMP_TOL:
                raise HypothesisError(f"hypothesis failed: term {k} is not proportional to a channel (residual {res:.2e})")
            mus.append(mu)
    else:
        raise ValueError(f"unknown method {method!r}")

    for k, (g, mu) in enumerate(zip(gs, mus)):
        if mu <= tol.rank:
            raise HypothesisError(f"hypothesis failed: term {k} has non-positive weight {mu:.2e}")
        red = partial_trace(g, [cc])
        res = red.distance(Operator.identity(red.dims, red.labels) * mu)
        if res > 1e-7:
            raise HypothesisError(f"term {k} is not proportional to a channel (residual {res:.2e})")
    details["weights"] = mus

    taken = set(c.labels)
    env = fresh_label("R", taken)
    primed = fresh_label(a + "'", taken | {env})
    init = None
    for k, mu in enumerate(mus):
        t = kron(_basis_op(primed, n, k), _basis_op(env, n, k)) * mu
        init = t if init is None else init + t
    init = init * (1 / sum(mus))
    eb = MeasurePrepare(primed, a, tuple(_basis_op(primed, n, k) for k in range(n)), tuple(rhos))
    L = None
    for k, (g, mu) in enumerate(zip(gs, mus)):
        t = kron(_basis_op(env, n, k), g * (1 / mu))
        L = t if L is None else L + t
    L = L.hermitian_part()
    step = Channel(L, (b, env), (cc,))
    circuit = Circuit(init, (eb.channel(), step), c.legs)
    return EbRepresentation("A:BC", method, circuit, eb, n, _finish(c, circuit, tol), details)


def _eb_on_middle(c: Comb, terms, tol: Tolerances) -> EbRepresentation:
    a, b, cc = _roles(c)
    db = c.op.dim_of(b)
    if not terms:
        raise HypothesisError("empty decomposition")
    total = None
    for p, e, g in terms:
        if p <= 0:
            raise HypothesisError("weights must be positive")
        _require_psd(e, "a term on the fed-in leg", tol)
        _require_psd(g, "a term on the measured legs", tol)
        t = kron(e, g) * (db * p)
        total = t if total is None else total + t
    res0 = _check_reconstruction(c, total)
    es = [e for _, e, _ in terms]
    R = _independence(es, "fed-in leg operators", tol)
    D = _duals(R)
    states = informationally_complete_states(db)
    n = len(terms)
    fed = [condition(c, b, Operator(s.conj(), (db,), (b,)), tol) for s in states]
    gs, sums = [], []
    for k, (p, _, _) in enumerate(terms):
        delta_dag = D[:, k].reshape(db, db).conj().T
        coef = _expand(delta_dag, states)
        g = fed[0] * coef[0]
        for j in range(1, len(coef)):
            g = g + fed[j] * coef[j]
        gs.append(g * (1 / (db * p)))
        sums.append(float(coef.sum()))
    taken = set(c.labels)
    primed = fresh_label(b + "'", taken)
    tilde_op = None
    for k, g in enumerate(gs):
        t = kron(_basis_op(primed, n, k), g)
        tilde_op = t if tilde_op is None else tilde_op + t
    tilde = Comb(tilde_op.hermitian_part(), (Leg(a, OUT, 1), Leg(primed, IN, 1), Leg(cc, OUT, 2)))
    dil = _dilate_proper(tilde, tol, taken | {primed})
    effects = tuple((e * (db * p)).transpose() for p, e, _ in terms)
    eb = MeasurePrepare(b, primed, effects, tuple(_basis_op(primed, n, k) for k in range(n)))
    circuit = Circuit(dil.circuit.initial, (eb.channel(),) + dil.circuit.steps, c.legs)
    details = {"decomposition_residual": res0, "dual_trace_sums": sums}
    return EbRepresentation("B:AC", "dual", circuit, eb, n, _finish(c, circuit, tol), details)


def eb_representation(c: Comb, splitting, decomposition, method: str = "dual",
                      tol: Tolerances = DEFAULT_TOL) -> EbRepresentation:
    """Build a circuit with a measure-and-prepare channel on the isolated party's wire.

    ``splitting`` names the isolated party, e.g. ``"C:AB"``.  Raises
    :class:`HypothesisError` when the decomposition does not reproduce ``c``
    or violates the construction's hypotheses.
    """
    a, b, cc = _roles(c)
    lone = _lone_party(splitting, c.labels)
    if lone == cc:
        return _eb_on_last(c, list(decomposition), tol)
    if lone == a:
        return _eb_on_first(c, list(decomposition), tol, method)
    return _eb_on_middle(c, list(decomposition), tol)


# --------------------------------------------------------------------------
# Two measure-and-prepare channels
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductTerm:
    weight: float
    factors: tuple[Operator, ...]  # unit trace, one per leg


@dataclass
class SeparableExpansion:
    terms: list[ProductTerm]
    residual: float
    product_residual: float


def full_separable_decomposition(circuit: Circuit, eb: Sequence[MeasurePrepare],
                                 tol: Tolerances = DEFAULT_TOL) -> SeparableExpansion:
    """Expand a circuit containing measure-and-prepare steps into product terms.

    Every step of ``circuit`` whose Choi operator equals one of ``eb`` is
    replaced, term by term, by its rank-one pieces.  When the channels sit on
    two different cuts each resulting term factorizes over the legs; otherwise
    :class:`HypothesisError` is raised.
    """
    legs = [l.label for l in circuit.legs]
    slots = []
    for mp in eb:
        ch = mp.channel()
        idx = [i for i, s in enumerate(circuit.steps) if s.op.labels and set(s.op.labels) == set(ch.op.labels)
               and s.op.distance(ch.op) <= 1e-12]
        if not idx:
            raise HypothesisError(f"no circuit step matches the channel {mp.inp}->{mp.out}")
        slots.append((idx[0], mp))
    target = compile_circuit(circuit, tol)
    terms: list[ProductTerm] = []
    worst = 0.0
    total = None
    for choice in itertools.product(*[range(len(mp)) for _, mp in slots]):
        repl = {i: mp.term(k) for (i, mp), k in zip(slots, choice)}
        acc = circuit.initial
        for i, step in enumerate(circuit.steps):
            acc = link(acc, repl.get(i, step.op))
        env = [l for l in acc.labels if l not in legs]
        x = partial_trace(acc, env) if env else acc
        total = x if total is None else total + x
        w = x.trace().real
        if w <= tol.zero_probability:
            continue
        factors = tuple(partial_trace(x, [m for m in legs if m != l]) * (1 / w) for l in legs)
        prod = kron(*factors) * w
        worst = max(worst, x.distance(prod))
        terms.append(ProductTerm(w, factors))
    if worst > 1e-9 * max(1.0, target.op.trace().real):
        raise HypothesisError(f"terms do not factorize over the legs (residual {worst:.2e}); "
                              "the channels must cut two different parties away")
    rebuilt = None
    for t in terms:
        x = kron(*t.factors) * t.weight
        rebuilt = x if rebuilt is None else rebuilt + x
    residual = target.op.distance(rebuilt)
    return SeparableExpansion(terms, residual, worst)


# --------------------------------------------------------------------------
# random instances
# --------------------------------------------------------------------------

def _qubit(m: np.ndarray, label: str) -> Operator:
    return Operator(m, (m.shape[0],), (label,))


def random_c_ab_instance(rng: np.random.Generator, n_terms: int = 3):
    """Comb separable across C:AB together with its decomposition.

    A random comb with an ``n_terms``-level last leg is read out in the
    computational basis, and each outcome is replaced by a random state.
    """
    init = Operator(random_density(4, rng), (2, 2), ("A", "R"))
    step = random_channel(("B", "R"), ("F",), (2, 2), (n_terms,), rng)
    base = compile_circuit(Circuit(init, (step,), (Leg("A", OUT, 1), Leg("B", IN, 1), Leg("F", OUT, 2))))
    terms = []
    total = None
    for k in range(n_terms):
        blk = link(base.op, _basis_op("F", n_terms, k))
        w = blk.trace().real / 2
        xi = blk * (1 / blk.trace().real)
        eta = _qubit(random_density(2, rng), "C")
        terms.append((w, xi, eta))
        t = kron(xi, eta) * (2 * w)
        total = t if total is None else total + t
    from .examples import three_party_legs
    return Comb(total.hermitian_part(), three_party_legs()), terms


def random_a_bc_instance(rng: np.random.Generator, n_terms: int = 4):
    """``sum rho_k (x) mu_k G_k`` with independent qubit states and random channels."""
    from .examples import three_party_legs
    mu = rng.dirichlet(np.ones(n_terms))
    terms, total = [], None
    for k in range(n_terms):
        rho = _qubit(random_density(2, rng), "A")
        g = random_channel(("B",), ("C",), (2,), (2,), rng).op * mu[k]
        terms.append((rho, g))
        t = kron(rho, g)
        total = t if total is None else total + t
    return Comb(total.hermitian_part(), three_party_legs()), terms


def random_b_ac_instance(rng: np.random.Generator, n_terms: int = 4):
    """``d_b sum p E (x) G`` with a random POVM on the fed-in leg and a common marginal on A."""
    from .examples import three_party_legs
    povm = random_povm(2, n_terms, rng)
    psi = random_pure(4, rng)
    base = Operator(np.outer(psi, psi.conj()), (2, 2), ("A", "R"))
    terms, total = [], None
    for m in povm:
        w = np.trace(m).real / 2
        e = _qubit(m / np.trace(m).real, "B")
        g = link(base, random_channel(("R",), ("C",), (2,), (2,), rng).op)
        terms.append((w, e, g))
        t = kron(e, g) * (2 * w)
        total = t if total is None else total + t
    return Comb(total.hermitian_part(), three_party_legs()), terms


def _random_mp(inp: str, out: str, rng: np.random.Generator, n: int = 3) -> MeasurePrepare:
    povm = random_povm(2, n, rng)
    return MeasurePrepare(inp, out, tuple(_qubit(m, inp) for m in povm),
                          tuple(_qubit(random_density(2, rng), out) for _ in range(n)))


def random_two_eb_circuit(rng: np.random.Generator, wires: tuple[str, str]):
    """Random qubit circuit with measure-and-prepare channels on two of ``A``, ``R``, ``B``, ``C``."""
    from .examples import three_party_legs
    wires = tuple(wires)
    a_lbl = "A'" if "A" in wires else "A"
    r_lbl = "R'" if "R" in wires else "R"
    b_lbl = "B'" if "B" in wires else "B"
    c_lbl = "C'" if "C" in wires else "C"
    init = Operator(random_density(4, rng), (2, 2), (a_lbl, r_lbl))
    pre, post = [], []
    eb = []
    if "A" in wires:
        mp = _random_mp("A'", "A", rng)
        pre.append(mp.channel())
        eb.append(mp)
    if "R" in wires:
        mp = _random_mp("R'", "R", rng)
        pre.append(mp.channel())
        eb.append(mp)
    if "B" in wires:
        mp = _random_mp("B", "B'", rng)
        pre.append(mp.channel())
        eb.append(mp)
    step = random_channel((b_lbl, "R"), (c_lbl,), (2, 2), (2,), rng)
    if "C" in wires:
        mp = _random_mp("C'", "C", rng)
        post.append(mp.channel())
        eb.append(mp)
    circuit = Circuit(init, tuple(pre) + (step,) + tuple(post), three_party_legs())
    return circuit, eb
