import numpy as np
import pytest

from comblab.comb import Channel, Circuit, build_assemblage, choi_of_kraus, compile_circuit, identity_channel
from comblab.constructions.examples import example_ghz_comb, example_w_comb, three_party_legs
from comblab.constructions.randomized import random_density, random_pure, random_unitary
from comblab.entanglement import (
    CutSpec,
    bisep_inequality,
    eb_check,
    ghz_slocc_witness,
    gme_witness,
    lhs_feasibility,
    local_filter,
    ppt_min_eig,
    pure_tangle,
    sigma_map,
    witness_expectation,
)
from comblab.errors import DimensionError, LabelError, NotPSDError, RoleError
from comblab.tensorlab import PAULI_X, PAULI_Z, Operator, StateVector, kron, phi_plus

from conftest import random_biseparable, random_herm, z_effect

ABC = ("A", "B", "C")


def ghz_state() -> Operator:
    v = np.zeros(8, dtype=complex)
    v[0] = v[7] = 1 / np.sqrt(2)
    return Operator(np.outer(v, v.conj()), (2, 2, 2), ABC)


def w_vector() -> np.ndarray:
    v = np.zeros(8, dtype=complex)
    v[[1, 2, 4]] = 1 / np.sqrt(3)
    return v


def test_cut_parsing():
    c = CutSpec.parse("A:BC")
    assert c.left == ("A",) and c.right == ("B", "C")
    assert CutSpec.parse("AB,C:D".replace("AB,C", "A,B")).left == ("A", "B")
    assert CutSpec.parse("gme").gme
    with pytest.raises(LabelError):
        CutSpec.parse("ABC")
    with pytest.raises(LabelError):
        CutSpec.parse("A:A")


def test_ppt_complementary_cuts_agree(rng):
    rho = Operator(random_herm(rng, 8), (2, 2, 2), ABC)
    for left in ("A", "B", "C"):
        right = "".join(x for x in "ABC" if x != left)
        assert ppt_min_eig(rho, f"{left}:{right}") == pytest.approx(ppt_min_eig(rho, f"{right}:{left}"), abs=1e-12)


def test_ppt_values():
    assert ppt_min_eig(phi_plus("AB"), "A:B") == pytest.approx(-0.5)
    assert ppt_min_eig(Operator(np.eye(4) / 4, (2, 2), ("A", "B")), ("A",)) == pytest.approx(0.25)
    with pytest.raises(LabelError):
        ppt_min_eig(phi_plus("AB"), "A:C")


def test_bisep_inequality_ghz_and_random(rng):
    lhs, rhs, violated = bisep_inequality(ghz_state())
    assert lhs == pytest.approx(0.5, rel=1e-15) and rhs == 0.0 and violated
    for _ in range(50):
        assert not bisep_inequality(random_biseparable(rng)).violated
    with pytest.raises(DimensionError):
        bisep_inequality(Operator(np.eye(3), (3,), ("A",)))


def test_gme_signs():
    assert gme_witness(ghz_state()).value == pytest.approx(-1 / 6, abs=1e-7)
    assert gme_witness(Operator(np.eye(8) / 8, (2, 2, 2), ABC)).value == pytest.approx(0.125, abs=1e-7)
    rep = gme_witness(example_w_comb().op)
    assert rep.verdict == "GME" and rep.scale == pytest.approx(2.0)


def test_gme_scale_invariance():
    w = example_w_comb().op
    a, b = gme_witness(w), gme_witness(w * 7.5)
    assert a.value == pytest.approx(b.value, abs=1e-7)
    assert np.abs(a.witness.matrix - b.witness.matrix).max() < 1e-5


def test_gme_witness_is_decomposable_and_nonnegative_on_biseparable(rng):
    rep = gme_witness(ghz_state())
    assert max(rep.residuals.values()) < 1e-8
    for name, (P, Q) in rep.decompositions.items():
        assert np.linalg.eigvalsh(P.matrix)[0] > -1e-7
        assert np.linalg.eigvalsh(Q.matrix)[0] > -1e-7
    for _ in range(200):
        assert witness_expectation(rep.witness, random_biseparable(rng)) >= -1e-6


def test_gme_input_checks():
    with pytest.raises(NotPSDError):
        gme_witness(Operator(np.diag([1.0, -0.5, 0.5, 0, 0, 0, 0, 0]), (2, 2, 2), ABC))
    with pytest.raises(LabelError):
        gme_witness(Operator(np.eye(2) / 2, (2,), ("A",)))


def test_slocc_witness_values():
    W = ghz_slocc_witness()
    assert witness_expectation(W, Operator(np.outer(w_vector(), w_vector()), (2, 2, 2), ABC)) == pytest.approx(0.75)
    zero = np.zeros(8, dtype=complex)
    zero[0] = 1
    assert witness_expectation(W, Operator(np.outer(zero, zero), (2, 2, 2), ABC)) == pytest.approx(0.25)
    assert witness_expectation(W, Operator(np.eye(8), (2, 2, 2), ABC)) == pytest.approx(0.625)


def test_filtered_ghz_comb_leaves_w_class():
    alpha = 0.5
    f = [np.diag([1 / np.sqrt(alpha), np.sqrt(alpha)])] * 2 + [np.diag([alpha, 1 / alpha])]
    rho = local_filter(example_ghz_comb(3).op, f)
    ghz = ghz_state().matrix
    assert np.trace(ghz @ rho.matrix).real == pytest.approx(1 / (1 + alpha ** 2))
    assert witness_expectation(ghz_slocc_witness(), rho) == pytest.approx(0.75 - 1 / (1 + alpha ** 2))


def test_local_filter_properties(rng):
    rho = Operator(random_density(8, rng), (2, 2, 2), ABC)
    assert local_filter(rho, [np.eye(2)] * 3).allclose(rho)
    f = [random_unitary(2, rng) + 2 * np.eye(2) for _ in range(3)]
    g = [3.0 * f[0], f[1], f[2]]
    assert local_filter(rho, f).allclose(local_filter(rho, g))
    with pytest.raises(RoleError):
        local_filter(rho, [np.diag([1.0, 0.0]), np.eye(2), np.eye(2)])


def test_tangle(rng):
    ghz = StateVector(np.sqrt(2) * ghz_state().matrix[:, 0], (2, 2, 2), ABC)
    assert pure_tangle(ghz) == pytest.approx(1.0)
    assert pure_tangle(StateVector(w_vector(), (2, 2, 2), ABC)) == pytest.approx(0.0, abs=1e-15)
    psi = random_pure(8, rng)
    base = pure_tangle(StateVector(psi, (2, 2, 2), ABC))
    for _ in range(100):
        u = np.kron(np.kron(random_unitary(2, rng), random_unitary(2, rng)), random_unitary(2, rng))
        assert abs(pure_tangle(StateVector(u @ psi, (2, 2, 2), ABC)) - base) <= 1e-9


def test_eb_check_verdicts():
    deph = choi_of_kraus([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], ("A",), ("B",))
    assert eb_check(deph).verdict == "EB"
    assert eb_check(identity_channel("A", "B")).verdict == "not-EB"
    big = Channel(Operator(np.eye(16) / 4, (4, 4), ("B", "A")), ("A",), ("B",))
    assert eb_check(big).verdict == "PPT-inconclusive"


def _swap_discard_circuit(initial: Operator) -> Circuit:
    # C receives the environment, B is discarded
    step = Channel(kron(phi_plus("CR", normalized=False), Operator.identity((2,), ("B",))), ("B", "R"), ("C",))
    return Circuit(initial, (step,), three_party_legs())


def test_sigma_map_replace_channel():
    circ = _swap_discard_circuit(kron(z_effect("A"), Operator(np.eye(2) / 2, (2,), ("R",))))
    s = sigma_map(circ)
    assert np.allclose(s.op.matrix, np.eye(4) / 2)
    assert eb_check(s).verdict == "EB"


def test_sigma_map_identity_wire():
    init = kron(z_effect("A"), z_effect("R"))
    step = Channel(kron(phi_plus("CB", normalized=False), Operator.identity((2,), ("R",))), ("B", "R"), ("C",))
    s = sigma_map(Circuit(init, (step,), three_party_legs()))
    assert s.op.allclose(phi_plus("CB", normalized=False))


def test_lhs_product_state_is_unsteerable(rng):
    init = kron(Operator(random_density(2, rng), (2,), ("A",)), Operator(random_density(2, rng), (2,), ("R",)))
    c = compile_circuit(_swap_discard_circuit(init))
    povms = [[Operator((np.eye(2) + s) / 2, (2,), ("A",)), Operator((np.eye(2) - s) / 2, (2,), ("A",))]
             for s in (PAULI_X, PAULI_Z)]
    assert lhs_feasibility(build_assemblage(c, povms)).unsteerable


def test_lhs_maximally_entangled_is_steerable():
    c = compile_circuit(_swap_discard_circuit(phi_plus("AR")))
    povms = [[Operator((np.eye(2) + s) / 2, (2,), ("A",)), Operator((np.eye(2) - s) / 2, (2,), ("A",))]
             for s in (PAULI_X, PAULI_Z)]
    res = lhs_feasibility(build_assemblage(c, povms))
    assert res.verdict == "steerable"
    single = lhs_feasibility(build_assemblage(c, [[Operator(np.eye(2), (2,), ("A",))]]))
    assert single.unsteerable
