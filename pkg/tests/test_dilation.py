import numpy as np
import pytest

from comblab.comb import Comb, compile_circuit, verify_causality
from comblab.constructions.dilation import audit_necessary_conditions, dilate, fresh_label
from comblab.constructions.examples import (
    circuit_bob_controls,
    example_bisep_conditional,
    example_bisep_k,
    example_ghz_comb,
    example_w_comb,
)
from comblab.constructions.randomized import random_two_step_circuit
from comblab.errors import CausalityError, DimensionError
from comblab.tensorlab import Operator


def test_fresh_label():
    assert fresh_label("R", {"A", "B"}) == "R"
    assert fresh_label("R", {"R", "R'"}) == "R''"


@pytest.mark.parametrize("maker", [example_w_comb, lambda: example_ghz_comb(3), lambda: example_bisep_k(0.6),
                                   lambda: example_bisep_conditional(0.45)])
def test_examples_round_trip(maker):
    c = maker()
    d = dilate(c)
    assert d.residual <= 1e-10
    V = d.isometry
    assert np.abs(V.conj().T @ V - np.eye(V.shape[1])).max() <= 1e-10
    assert compile_circuit(d.circuit).op.distance(c.op) <= 1e-10


def test_random_round_trip(rng):
    for _ in range(20):
        c = compile_circuit(random_two_step_circuit(rng))
        d = dilate(c)
        assert d.residual <= 1e-9
        # discarded wire never needs more levels than the rank
        assert d.isometry.shape[0] // 2 == np.linalg.matrix_rank(c.op.matrix, tol=1e-10)


def test_labels_avoid_clashes():
    c = example_w_comb()
    d = dilate(c, env="A", discard="B")
    assert d.env_label not in c.labels and d.discard_label not in c.labels
    assert d.env_label != d.discard_label


def test_rejects_non_causal():
    c = example_w_comb()
    bad = Comb(c.op * 2 - Operator.identity(c.op.dims, c.op.labels) * 0.1, c.legs)
    with pytest.raises(CausalityError):
        dilate(bad)


def test_rejects_wrong_roles():
    from comblab.constructions.examples import example_sqrt_swap_comb

    with pytest.raises(DimensionError):
        dilate(example_sqrt_swap_comb())


def test_audit_on_entangled_blocks():
    items = audit_necessary_conditions(circuit_bob_controls())
    assert len(items) == 4
    assert items[0].entangled


def test_audit_of_dilated_w_comb():
    d = dilate(example_w_comb())
    items = audit_necessary_conditions(d.circuit)
    assert all(isinstance(i.min_eig, float) for i in items)
