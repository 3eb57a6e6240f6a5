"""Regenerate the reference fixtures in tests/fixtures.

Run once by hand (``python3 tools/make_fixtures.py``); the test suite only
reads the JSON files.  Two oracles are used, both independent of the
package's own numerical code:

* GME witness values come from cvxpy with the CLARABEL interior-point
  solver, on a formulation written out here from scratch (every subset
  containing the first party defines one bipartition, the partial transpose
  is cvxpy's own).
* PPT magnitudes come from numpy ``eigvalsh`` on partial transposes done by
  explicit index reshuffling.

The package is used only to build the input operators.  The see-saw seed
sweep is recorded here as well, since its success rate is an empirical
quantity (``--skip-seesaw`` leaves the existing file alone).
"""

from __future__ import annotations

import argparse
import itertools
import json
import platform
import time
from pathlib import Path

import cvxpy as cp
import numpy as np

import comblab
from comblab.constructions import examples as ex

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SOLVER = "CLARABEL"
# CLARABEL defaults (gap and feasibility tolerances 1e-8); tightening them makes
# it stop at "optimal_inaccurate" with an unchanged objective
SOLVER_SETTINGS: dict = {}


def oracle_identity() -> dict:
    import clarabel

    return {
        "package": "cvxpy",
        "package_version": cp.__version__,
        "solver": SOLVER,
        "solver_version": clarabel.__version__,
        "settings": SOLVER_SETTINGS or "solver defaults (tol_gap_abs = tol_gap_rel = tol_feas = 1e-8)",
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


# -- GME values ---------------------------------------------------------------

def cvxpy_gme(rho: np.ndarray, dims: tuple[int, ...]) -> float:
    """min tr(W rho) over W = Q_M + P_M^{T_M}, P_M, Q_M >= 0, tr W = 1."""
    rho = rho / np.trace(rho).real
    d = rho.shape[0]
    n = len(dims)
    W = cp.Variable((d, d), hermitian=True)
    cons = [cp.real(cp.trace(W)) == 1]
    for size in range(1, n):
        for rest in itertools.combinations(range(1, n), size - 1):
            side = (0,) + rest
            P = cp.Variable((d, d), hermitian=True)
            Q = cp.Variable((d, d), hermitian=True)
            PT = P
            for ax in side:
                PT = cp.partial_transpose(PT, list(dims), ax)
            cons += [P >> 0, Q >> 0, W == Q + PT]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(W @ rho))), cons)
    prob.solve(solver=SOLVER, **SOLVER_SETTINGS)
    if prob.status != "optimal":
        raise RuntimeError(f"oracle solve ended with {prob.status}")
    return float(prob.value)


def gme_cases() -> dict[str, tuple[np.ndarray, tuple[int, ...], str]]:
    ghz = np.zeros(8, complex)
    ghz[0] = ghz[7] = 1 / np.sqrt(2)
    return {
        "ghz_state": (np.outer(ghz, ghz.conj()), (2, 2, 2), "normalized three-qubit GHZ state"),
        "ghz_comb": (ex.example_ghz_comb(3).op.matrix, (2, 2, 2), "three-party GHZ-type comb"),
        "w_comb": (ex.example_w_comb().op.matrix, (2, 2, 2), "rank-two W-type comb"),
        "sqrt_swap": (ex.example_sqrt_swap_comb().op.matrix, (2, 2, 2, 2), "four-leg square-root-of-swap comb"),
        "identity": (np.eye(8, dtype=complex) / 8, (2, 2, 2), "maximally mixed three-qubit state"),
        "bisep_k_0.6": (ex.example_bisep_k(0.6).op.matrix, (2, 2, 2), "explicit biseparable mixture, p = 0.6"),
        "appg": (ex.example_appg_comb().op.matrix, (2, 2, 2), "shipped rounded comb"),
    }


# -- eigen oracle ---------------------------------------------------------------

def np_partial_transpose(m: np.ndarray, dims: tuple[int, ...], axes: tuple[int, ...]) -> np.ndarray:
    n = len(dims)
    t = m.reshape(dims + dims)
    perm = list(range(2 * n))
    for a in axes:
        perm[a], perm[a + n] = perm[a + n], perm[a]
    return t.transpose(perm).reshape(m.shape)


def np_block(m: np.ndarray, party: int, i: int, j: int) -> np.ndarray:
    """``<i|_X m |j>_X`` on three qubits, i.e. tr_X[m (|j><i| (x) 1)]."""
    t = m.reshape((2,) * 6)
    idx = [slice(None)] * 6
    idx[party], idx[party + 3] = i, j
    return t[tuple(idx)].reshape(4, 4)


def np_trace_out(m: np.ndarray, party: int) -> np.ndarray:
    return np_block(m, party, 0, 0) + np_block(m, party, 1, 1)


def min_pt(m: np.ndarray, dims, axes) -> float:
    m = m / np.trace(m).real
    return float(np.linalg.eigvalsh(np_partial_transpose(m, tuple(dims), tuple(axes)))[0])


def eigen_cases() -> dict[str, dict]:
    k = ex.example_bisep_k(0.6).op.matrix
    c = ex.example_bisep_conditional(0.45).op.matrix
    out = {
        "bisep_k_0.6 A:C (B traced)": min_pt(np_trace_out(k, 1), (2, 2), (0,)),
        "bisep_k_0.6 B:C (A traced)": min_pt(np_trace_out(k, 0), (2, 2), (0,)),
        "bisep_k_0.6 C:AB": min_pt(k, (2, 2, 2), (2,)),
        "bisep_k_0.6 A:B (C traced)": min_pt(np_trace_out(k, 2), (2, 2), (0,)),
    }
    for party, name in enumerate("ABC"):
        rest = "".join(x for x in "ABC" if x != name)
        out[f"bisep_cond_0.45 {rest[0]}:{rest[1]} given |0><0| on {name}"] = min_pt(np_block(c, party, 0, 0), (2, 2), (0,))
    # fig5 circuit: the two outcome Chois are (1 (x) Z^k) Phi~+ (1 (x) Z^k)
    phi = np.zeros((4, 4), complex)
    phi[0, 0] = phi[0, 3] = phi[3, 0] = phi[3, 3] = 1
    z = np.kron(np.eye(2), np.diag([1, -1]))
    out["fig5 outcome 0"] = min_pt(phi, (2, 2), (0,))
    out["fig5 outcome 1"] = min_pt(z @ phi @ z, (2, 2), (0,))
    return {name: {"value": v} for name, v in out.items()}


# -- see-saw sweep --------------------------------------------------------------

def seesaw_sweep(seeds: range) -> dict:
    from comblab.constructions.seesaw import SeesawOptions, seesaw

    opts = SeesawOptions()
    runs = []
    for s in seeds:
        t0 = time.perf_counter()
        r = seesaw(seed=s, options=opts)
        runs.append({
            "seed": s,
            "status": r.status,
            "witness_value": r.witness_value,
            "iterations": r.state.iteration,
            "scan_minima": r.scan.minima if r.scan is not None else None,
            "seconds": round(time.perf_counter() - t0, 1),
        })
        print(f"  seed {s}: {r.status} {r.witness_value:+.6f}")
    ok = sum(r["status"] == "candidate" for r in runs)
    return {
        "options": {"iterations": opts.iterations, "eps_margin": opts.eps_margin,
                    "scan_constraint_count": opts.scan_constraint_count, "scan_samples": opts.scan_samples,
                    "scan_seed": opts.scan_seed, "target": opts.target},
        "runs": runs,
        "success_rate": ok / len(runs),
        "comblab_version": comblab.__version__,
    }


def write(name: str, payload: dict) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / name
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print(f"wrote {path.relative_to(OUT.parent.parent)}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--skip-seesaw", action="store_true")
    args = ap.parse_args()
    ident = oracle_identity()
    for case, (m, dims, desc) in gme_cases().items():
        value = cvxpy_gme(m, dims)
        print(f"  {case}: {value:+.9f}")
        write(f"gme_{case}.json", {"case": case, "description": desc, "value": value,
                                   "normalization": "unit trace", "oracle": ident})
    write("eigen_oracle.json", {"oracle": {"method": "numpy.linalg.eigvalsh on reshuffled partial transposes",
                                           "numpy": np.__version__, "normalization": "unit trace"},
                                "cases": eigen_cases()})
    if not args.skip_seesaw:
        write("seesaw_sweep.json", seesaw_sweep(range(10)))


if __name__ == "__main__":
    main()
