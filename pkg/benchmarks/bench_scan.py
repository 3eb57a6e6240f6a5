"""Compare the compiled scan kernel with the numpy fallback.

Usage::

    python3 benchmarks/bench_scan.py [--samples 500000] [--repeat 3] [--json out.json]

Both backends evaluate the same sampled effects on the shipped rounded comb.
The script reports the best wall time per backend, the speed-up, and the
largest disagreement between the two sets of minima.  With ``--threads`` the
compiled kernel uses OpenMP and the fallback a thread pool.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time

import numpy as np

from comblab.constructions.examples import example_appg_comb
from comblab.constructions.scan import (
    conditional_scan,
    kernel_available,
    min_eig_batch,
    pauli_components,
    sample_angles,
)


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="scan kernel benchmark")
    ap.add_argument("--samples", type=int, default=500_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--json", metavar="PATH")
    args = ap.parse_args(argv)

    if not kernel_available():
        print("compiled kernel not built; only the numpy backend can run", file=sys.stderr)
        return 1

    comb = example_appg_comb()
    theta, phi = sample_angles(args.samples, args.seed)
    coeffs = np.stack([np.ones_like(theta), np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi),
                       np.sin(theta)], axis=1)
    basis, _ = pauli_components(comb, "C")

    results = {}
    for backend in ("compiled", "numpy"):
        t, (lam, _tr, _) = best_of(lambda: min_eig_batch(basis, coeffs, args.threads, backend), args.repeat)
        results[backend] = {"kernel_seconds": t, "min": lam}
        t_full, rep = best_of(lambda: conditional_scan(comb, args.samples, args.seed, threads=args.threads,
                                                       backend=backend), args.repeat)
        results[backend]["scan_seconds"] = t_full
        results[backend]["minima"] = rep.minima

    diff = float(np.abs(results["compiled"]["min"] - results["numpy"]["min"]).max())
    summary = {
        "samples": args.samples,
        "threads": args.threads,
        "machine": platform.machine(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "eigen_kernel_seconds": {b: results[b]["kernel_seconds"] for b in results},
        "full_scan_seconds": {b: results[b]["scan_seconds"] for b in results},
        "speedup_kernel": results["numpy"]["kernel_seconds"] / results["compiled"]["kernel_seconds"],
        "speedup_scan": results["numpy"]["scan_seconds"] / results["compiled"]["scan_seconds"],
        "max_abs_difference": diff,
        "minima_identical": results["compiled"]["minima"] == results["numpy"]["minima"],
    }
    print(f"{args.samples} samples, {args.threads} thread(s), best of {args.repeat}")
    print(f"{'':>10s} {'eigen kernel':>14s} {'full scan (3 parties)':>24s}")
    for b in ("compiled", "numpy"):
        print(f"{b:>10s} {results[b]['kernel_seconds']:>13.3f}s {results[b]['scan_seconds']:>23.3f}s")
    print(f"speed-up: kernel {summary['speedup_kernel']:.2f}x, scan {summary['speedup_scan']:.2f}x")
    print(f"largest per-sample difference {diff:.2e}; reported minima identical: {summary['minima_identical']}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(summary, fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
