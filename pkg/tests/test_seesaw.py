import numpy as np
import pytest

from comblab.comb import Comb, verify_causality
from comblab.constructions.examples import three_party_legs
from comblab.constructions.scan import conditional_scan
from comblab.constructions.seesaw import (
    SeesawOptions,
    causal_parametrization,
    circumscribed_effects,
    conditional_ppt_blocks,
    seesaw,
)
from comblab.constructions.randomized import random_two_step_circuit
from comblab.comb import compile_circuit
from comblab.entanglement import gme_witness
from comblab.errors import DimensionError
from comblab.tensorlab import Operator

FAST = SeesawOptions(iterations=12, eps_margin=0.002, scan_constraint_count=200, scan_samples=50_000)


def test_effect_polytope_contains_ball():
    from scipy.spatial import ConvexHull

    pts = circumscribed_effects(300)
    hull = ConvexHull(pts)
    assert (-hull.equations[:, 3]).min() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        circumscribed_effects(4)


def test_parametrization_spans_proper_combs(rng):
    Y0, N = causal_parametrization()
    assert N.shape == (51, 8, 8)
    G = np.real(np.einsum("kij,lji->kl", N, N))
    assert np.allclose(G, np.eye(51), atol=1e-10)
    for _ in range(5):
        Y = compile_circuit(random_two_step_circuit(rng)).op.matrix
        y = np.real(np.einsum("kij,ji->k", N, Y - Y0))
        assert np.abs(Y0 + np.einsum("k,kij->ij", y, N) - Y).max() <= 1e-12
    # every direction keeps the comb causal
    for k in range(0, 51, 10):
        c = Comb(Operator(Y0 + 0.01 * N[k], (2, 2, 2), ("A", "B", "C")), three_party_legs())
        assert verify_causality(c).passed


def test_blocks_are_affine_in_the_effect(rng):
    Y = compile_circuit(random_two_step_circuit(rng)).op.matrix
    v = np.array([[0.3, -0.2, 0.5], [0.0, 0.0, 1.0]])
    b = conditional_ppt_blocks(Y, v, 0.0)
    mid = conditional_ppt_blocks(Y, v.mean(axis=0, keepdims=True), 0.0)
    for party in range(3):
        assert np.allclose(mid[party][0], b[party].mean(axis=0))


def test_rejects_other_dimensions():
    with pytest.raises(DimensionError):
        seesaw(dims=(2, 2, 3))


def test_fast_run_produces_verified_candidate():
    r = seesaw(seed=0, options=FAST)
    assert r.status == "candidate"
    c = r.candidate
    assert verify_causality(c).passed
    assert gme_witness(c.op).value < FAST.target
    # an independent scan with a different seed agrees
    assert conditional_scan(c, 50_000, 777, sampling="haar").all_positive
    audit = r.audit()
    assert audit["effects_per_party"] == 200
    assert all("witness_value" in e for e in audit["trace"] if "event" not in e)


def test_zero_margin_still_needs_the_scan():
    opts = SeesawOptions(iterations=3, eps_margin=0.0, scan_constraint_count=50, scan_samples=20_000)
    r = seesaw(seed=1, options=opts)
    if r.status == "candidate":
        assert r.scan is not None and r.scan.all_positive
    else:
        assert r.candidate is None
