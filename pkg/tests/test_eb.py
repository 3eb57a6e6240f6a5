import numpy as np
import pytest

from comblab.comb import Comb, compile_circuit
from comblab.constructions.eb import (
    eb_representation,
    full_separable_decomposition,
    informationally_complete_povm,
    informationally_complete_states,
    random_a_bc_instance,
    random_b_ac_instance,
    random_c_ab_instance,
    random_two_eb_circuit,
)
from comblab.constructions.examples import bisep_k_terms, example_bisep_k, example_w_comb
from comblab.entanglement import eb_check
from comblab.errors import HypothesisError
from comblab.tensorlab import Operator, kron


def _is_eb(mp) -> bool:
    """Measure-and-prepare structure: a POVM on the input, states on the output."""
    d = mp.effects[0].dim
    povm_ok = np.allclose(sum(e.matrix for e in mp.effects), np.eye(d), atol=1e-9)
    psd_ok = all(np.linalg.eigvalsh(x.matrix)[0] >= -1e-9 for x in mp.effects + mp.states)
    unit = all(abs(s.trace() - 1) <= 1e-9 for s in mp.states)
    ch = mp.channel()
    ppt = eb_check(ch.op, ch.inputs).verdict != "not-EB"
    return povm_ok and psd_ok and unit and ppt


def test_frames_span():
    for d in (2, 3):
        s = informationally_complete_states(d)
        assert len(s) == d * d
        assert np.linalg.matrix_rank(np.stack([x.reshape(-1) for x in s])) == d * d
        povm = informationally_complete_povm(d)
        assert np.allclose(sum(povm), np.eye(d))
        assert min(np.linalg.eigvalsh(p)[0] for p in povm) >= -1e-12


def test_c_ab(rng):
    for _ in range(10):
        c, terms = random_c_ab_instance(rng)
        rep = eb_representation(c, "C:AB", terms)
        assert rep.residual <= 1e-9
        assert rep.primed_dim == len(terms)
        assert _is_eb(rep.eb)


@pytest.mark.parametrize("method", ["dual", "channels"])
def test_a_bc(rng, method):
    for _ in range(10):
        c, terms = random_a_bc_instance(rng)
        rep = eb_representation(c, "A:BC", terms, method=method)
        assert rep.residual <= 1e-9
        assert np.isclose(sum(rep.details["weights"]), 1)
        assert _is_eb(rep.eb)


def test_a_bc_dual_needs_independence(rng):
    c, terms = random_a_bc_instance(rng, n_terms=5)  # five qubit states are always dependent
    with pytest.raises(HypothesisError, match="linearly dependent"):
        eb_representation(c, "A:BC", terms, method="dual")


def test_b_ac(rng):
    for _ in range(10):
        c, terms = random_b_ac_instance(rng)
        rep = eb_representation(c, "B:AC", terms)
        assert rep.residual <= 1e-9
        assert _is_eb(rep.eb)


def test_explicit_biseparable_terms():
    c = example_bisep_k(0.6)
    t0 = bisep_k_terms(0.6)[0]
    assert t0 is not None  # the explicit mixture exists; it splits along two different cuts
    with pytest.raises(HypothesisError):
        eb_representation(c, "C:AB", [(1.0, Operator.identity((2, 2), ("A", "B")) * 0.25,
                                          Operator.identity((2,), ("C",)) * 0.5)])


def test_wrong_decomposition_rejected():
    c = example_w_comb()
    rho = Operator(np.eye(2) / 2, (2,), ("A",))
    g = Operator(np.eye(4) / 2, (2, 2), ("B", "C"))
    with pytest.raises(HypothesisError, match="reproduce"):
        eb_representation(c, "A:BC", [(rho, g * 2)])


def test_splitting_must_isolate_one_party():
    c, terms = random_c_ab_instance(np.random.default_rng(1))
    with pytest.raises(Exception):
        eb_representation(c, "AB:CD", terms)


@pytest.mark.parametrize("wires", [("A", "B"), ("A", "C"), ("R", "B"), ("R", "C"), ("B", "C")])
def test_two_channels_give_full_separability(rng, wires):
    circuit, eb = random_two_eb_circuit(rng, wires)
    exp = full_separable_decomposition(circuit, eb)
    assert exp.residual <= 1e-10
    assert exp.product_residual <= 1e-10
    for t in exp.terms:
        assert t.weight > 0
        for f in t.factors:
            assert abs(f.trace() - 1) <= 1e-10
            assert np.linalg.eigvalsh(f.matrix)[0] >= -1e-10
    total = sum(t.weight for t in exp.terms)
    assert total == pytest.approx(compile_circuit(circuit).op.trace().real)
