"""Time the numba kernels against their pure-numpy / pure-Python counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Compilation happens in a warm-up call that is excluded from the timings.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from ancolab import _kernels, bundle, oracle, topology


def _best(fn, repeat: int) -> float:
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_jacobi(repeat: int, size: int = 45) -> dict:
    rng = np.random.default_rng(0)
    X = rng.normal(size=(size, size))
    S = X + X.T
    out = {"case": f"jacobi {size}x{size}"}
    out["numpy"] = _best(lambda: _kernels.jacobi_eigh_numpy(S), repeat)
    if _kernels.HAVE_NUMBA:
        out["numba"] = _best(lambda: _kernels.jacobi_eigh_numba(S, 1e-12), repeat)
        w1 = np.sort(_kernels.jacobi_eigh_numpy(S)[0])
        w2 = np.sort(_kernels.jacobi_eigh_numba(S, 1e-12)[0])
        out["max_abs_diff"] = float(np.max(np.abs(w1 - w2)))
    return out


def bench_riemann(repeat: int, preset: str = "qhopf") -> dict:
    C = bundle.from_name(preset)
    F = oracle.TrivializedMetricField(C, 0.5)
    p = F.point(np.full(C.n, 0.1))
    G = F.metric(p)
    gam = oracle.christoffel(F, p)
    rng = np.random.default_rng(1)
    dgam = rng.normal(size=(F.dim,) * 4)
    out = {"case": f"riemann contraction D={F.dim}"}
    out["numpy"] = _best(lambda: _kernels.riemann_lower_numpy(G, gam, dgam), repeat)
    if _kernels.HAVE_NUMBA:
        out["numba"] = _best(lambda: _kernels.riemann_lower_numba(G, gam, dgam), repeat)
        out["max_abs_diff"] = float(np.max(np.abs(
            _kernels.riemann_lower_numpy(G, gam, dgam) - _kernels.riemann_lower_numba(G, gam, dgam))))
    return out


def bench_gysin(repeat: int, bound: int = 60) -> dict:
    R = topology.ProjectiveProductRing((1, 2))
    pairs = [(k, l) for k in range(-bound, bound + 1) for l in range(-bound, bound + 1)]
    out = {"case": f"gysin CP1xCP2, {len(pairs)} Euler classes"}

    def reference():
        for k, l in pairs:
            topology.gysin_total_space(R, topology.EulerClass((k, l)), rank_identity=False)

    out["python_int"] = _best(reference, max(1, repeat // 2))
    coeffs = np.array(pairs, dtype=np.int64)
    degs = list(range(0, R.top_degree, 2))
    pats = [np.array(topology._cup_pattern(R.caps, d), dtype=np.int64).reshape(-1, 3) for d in degs]
    args = (np.vstack(pats), np.cumsum([0] + [len(pt) for pt in pats]).astype(np.int64),
            np.array([R.rank(d) for d in degs], dtype=np.int64),
            np.array([R.rank(d) for d in range(0, R.top_degree + 1, 2)], dtype=np.int64), R.total_dim, 2)
    out["numpy_vectorized"] = _best(lambda: _kernels.gysin_batch_numpy(coeffs, *args), repeat)
    if _kernels.HAVE_NUMBA:
        out["numba"] = _best(lambda: _kernels.gysin_batch_numba(coeffs, *args), repeat)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    rows = [bench_jacobi(args.repeat), bench_riemann(args.repeat), bench_gysin(args.repeat)]
    for r in rows:
        ref = r.get("numpy", r.get("python_int"))
        fast = r.get("numba")
        speed = f"{ref / fast:8.1f}x" if fast else "     n/a"
        print(f"{r['case']:<40s} ref {ref * 1e3:10.3f} ms   numba {1e3 * fast if fast else float('nan'):10.3f} ms  {speed}")
        if "numpy_vectorized" in r:
            print(f"{'':<40s} vectorized numpy {r['numpy_vectorized'] * 1e3:10.3f} ms")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"backend": _kernels.backend(), "results": rows}, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
