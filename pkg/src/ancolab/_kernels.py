"""Hot numeric kernels.

Each kernel has a numba ``@njit`` implementation and a pure-numpy one with the
same algorithm. The numba path is used when numba imports and the environment
variable ``ANCOLAB_PURE_NUMPY`` is unset (or ``0``); set it to ``1`` to force
the numpy path.
"""
from __future__ import annotations

import math
import os
from itertools import combinations

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

JACOBI_MAX_SWEEPS = 100


def _flag_pure_numpy() -> bool:
    return os.environ.get("ANCOLAB_PURE_NUMPY", "0").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and not _flag_pure_numpy()


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# cyclic Jacobi ----------------------------------------------------------------

def _rotation(app, aqq, apq):
    tau = (aqq - app) / (2.0 * apq)
    # hypot keeps huge tau (tiny apq) from overflowing
    if tau >= 0.0:
        t = 1.0 / (tau + math.hypot(1.0, tau))
    else:
        t = -1.0 / (-tau + math.hypot(1.0, tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c


def jacobi_eigh_numpy(S, rel_tol=1e-12):
    a = np.array(S, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    target = rel_tol * scale
    sweeps = 0
    for sweeps in range(1, JACOBI_MAX_SWEEPS + 1):
        off = np.sqrt(np.sum((a - np.diag(np.diag(a))) ** 2))
        if off <= target:
            sweeps -= 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation(a[p, p], a[q, q], apq)
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


def _jacobi_eigh_loops(S, rel_tol):
    n = S.shape[0]
    a = S.copy()
    v = np.eye(n)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += a[i, j] * a[i, j]
    target = rel_tol * np.sqrt(total)
    sweeps = 0
    for it in range(1, JACOBI_MAX_SWEEPS + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if np.sqrt(off) <= target:
            sweeps = it - 1
            break
        sweeps = it
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.hypot(1.0, tau))
                else:
                    t = -1.0 / (-tau + math.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    xp = a[p, k]
                    xq = a[q, k]
                    a[p, k] = c * xp - s * xq
                    a[q, k] = s * xp + c * xq
                for k in range(n):
                    xp = a[k, p]
                    xq = a[k, q]
                    a[k, p] = c * xp - s * xq
                    a[k, q] = s * xp + c * xq
                for k in range(n):
                    xp = v[k, p]
                    xq = v[k, q]
                    v[k, p] = c * xp - s * xq
                    v[k, q] = s * xp + c * xq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps


# Riemann tensor from Christoffel data ----------------------------------------
#   gam[C, A, B]     = Gamma^C_{AB}
#   dgam[A, E, B, C] = d_A Gamma^E_{BC}
#   R_{ABCD} = G_{DE} (d_A Gam^E_{BC} - d_B Gam^E_{AC}
#                      + Gam^F_{BC} Gam^E_{AF} - Gam^F_{AC} Gam^E_{BF})

def riemann_lower_numpy(G, gam, dgam):
    up = (
        np.einsum("aebc->eabc", dgam)
        - np.einsum("beac->eabc", dgam)
        + np.einsum("fbc,eaf->eabc", gam, gam)
        - np.einsum("fac,ebf->eabc", gam, gam)
    )  # up[E, A, B, C] = R^E_{C A B}
    return np.einsum("de,eabc->abcd", G, up)


def _riemann_lower_loops(G, gam, dgam):
    n = G.shape[0]
    up = np.zeros((n, n, n, n))
    for e in range(n):
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    val = dgam[a, e, b, c] - dgam[b, e, a, c]
                    for f in range(n):
                        val += gam[f, b, c] * gam[e, a, f] - gam[f, a, c] * gam[e, b, f]
                    up[e, a, b, c] = val
    out = np.zeros((n, n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    acc = 0.0
                    for e in range(n):
                        acc += G[d, e] * up[e, a, b, c]
                    out[a, b, c, d] = acc
    return out


# bounded-width Smith normal form -------------------------------------------------
#   int64 elimination for batches of small cup-product matrices. Any entry of
#   the working matrices or witnesses above SNF_LIMIT aborts that item, which
#   the caller then recomputes with Python integers.

SNF_LIMIT = 2**30


def _snf_diag_int64(M, diag):
    """Smith diagonal of M into ``diag``; returns (rank, status) with status 0 ok, 1 overflow, 2 witness mismatch."""
    m, n = M.shape
    A = M.copy()
    U = np.zeros((m, m), dtype=np.int64)
    V = np.zeros((n, n), dtype=np.int64)
    for i in range(m):
        U[i, i] = 1
    for i in range(n):
        V[i, i] = 1
    t = 0
    while t < m and t < n:
        best = 0
        bi = -1
        bj = -1
        for i in range(t, m):
            for j in range(t, n):
                v = abs(A[i, j])
                if v != 0 and (best == 0 or v < best):
                    best = v
                    bi = i
                    bj = j
        if best == 0:
            break
        if bi != t:
            for c in range(n):
                A[t, c], A[bi, c] = A[bi, c], A[t, c]
            for c in range(m):
                U[t, c], U[bi, c] = U[bi, c], U[t, c]
        if bj != t:
            for r in range(m):
                A[r, t], A[r, bj] = A[r, bj], A[r, t]
            for r in range(n):
                V[r, t], V[r, bj] = V[r, bj], V[r, t]
        while True:
            p = A[t, t]
            moved = False
            for i in range(t + 1, m):
                if A[i, t] == 0:
                    continue
                f = A[i, t] // p
                for c in range(t, n):
                    A[i, c] -= f * A[t, c]
                    if abs(A[i, c]) > SNF_LIMIT:
                        return 0, 1
                for c in range(m):
                    U[i, c] -= f * U[t, c]
                    if abs(U[i, c]) > SNF_LIMIT:
                        return 0, 1
                if A[i, t] != 0:
                    for c in range(n):
                        A[t, c], A[i, c] = A[i, c], A[t, c]
                    for c in range(m):
                        U[t, c], U[i, c] = U[i, c], U[t, c]
                    moved = True
                    break
            if moved:
                continue
            for j in range(t + 1, n):
                if A[t, j] == 0:
                    continue
                f = A[t, j] // p
                for r in range(m):
                    A[r, j] -= f * A[r, t]
                    if abs(A[r, j]) > SNF_LIMIT:
                        return 0, 1
                for r in range(n):
                    V[r, j] -= f * V[r, t]
                    if abs(V[r, j]) > SNF_LIMIT:
                        return 0, 1
                if A[t, j] != 0:
                    for r in range(m):
                        A[r, t], A[r, j] = A[r, j], A[r, t]
                    for r in range(n):
                        V[r, t], V[r, j] = V[r, j], V[r, t]
                    moved = True
                    break
            if moved:
                continue
            bad = -1
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i, j] % p != 0:
                        bad = i
                        break
                if bad >= 0:
                    break
            if bad < 0:
                break
            for c in range(n):
                A[t, c] += A[bad, c]
                if abs(A[t, c]) > SNF_LIMIT:
                    return 0, 1
            for c in range(m):
                U[t, c] += U[bad, c]
                if abs(U[t, c]) > SNF_LIMIT:
                    return 0, 1
        if A[t, t] < 0:
            for c in range(n):
                A[t, c] = -A[t, c]
            for c in range(m):
                U[t, c] = -U[t, c]
        t += 1
    # witness: U M V == A, computed in two guarded steps
    UM = np.zeros((m, n), dtype=np.int64)
    for i in range(m):
        for j in range(n):
            acc = 0
            for k in range(m):
                acc += U[i, k] * M[k, j]
            if abs(acc) > SNF_LIMIT:
                return 0, 1
            UM[i, j] = acc
    for i in range(m):
        for j in range(n):
            acc = 0
            for k in range(n):
                acc += UM[i, k] * V[k, j]
            if acc != A[i, j]:
                return 0, 2
    rank = 0
    for i in range(min(m, n)):
        if A[i, i] != 0:
            if rank > 0 and A[i, i] % diag[rank - 1] != 0:
                return 0, 2
            diag[rank] = A[i, i]
            rank += 1
    return rank, 0


def _gysin_batch_loops(coeffs, pat, pat_off, src_rank, ranks_even, dims_out, max_t):
    """Cohomology of circle bundles for many Euler classes at once.

    ``pat[pat_off[d]:pat_off[d+1]]`` holds (row, col, factor) triples of the
    cup map out of even degree 2d; ``src_rank[d]`` its source rank and
    ``ranks_even[d]`` the rank of H^{2d}(B). Returns ranks[N, dim+1],
    torsion[N, dim+1, max_t] (zero padded) and a per-item status.
    """
    N = coeffs.shape[0]
    ncup = src_rank.shape[0]
    dim = dims_out
    ranks = np.zeros((N, dim + 1), dtype=np.int64)
    tors = np.zeros((N, dim + 1, max_t), dtype=np.int64)
    status = np.zeros(N, dtype=np.int64)
    diag = np.zeros(max_t, dtype=np.int64)
    for p in range(N):
        for d in range(ncup):
            rows = ranks_even[d + 1]
            cols = src_rank[d]
            M = np.zeros((rows, cols), dtype=np.int64)
            for k in range(pat_off[d], pat_off[d + 1]):
                M[pat[k, 0], pat[k, 1]] += coeffs[p, pat[k, 2]]
            for k in range(max_t):
                diag[k] = 0
            rk, st = snf_diag_numba(M, diag)
            if st != 0:
                status[p] = st
                break
            # even degree 2d+2: cokernel; odd degree 2d+1: kernel
            ranks[p, 2 * d + 2] = rows - rk
            nt = 0
            for k in range(rk):
                if diag[k] > 1:
                    tors[p, 2 * d + 2, nt] = diag[k]
                    nt += 1
            ranks[p, 2 * d + 1] = cols - rk
        ranks[p, 0] = 1
        ranks[p, dim] = 1
    return ranks, tors, status


_MINOR_LIMIT = 2**30


def gysin_batch_numpy(coeffs, pat, pat_off, src_rank, ranks_even, dims_out, max_t):
    """Vectorized counterpart of the loop kernel for cup matrices with a side of length <= 2.

    Invariant factors come from determinantal divisors: d_1 is the gcd of the
    entries, d_1 d_2 the gcd of the 2x2 minors. Items with entries beyond
    2^30 (minors could overflow) or a cup matrix of rank possibly above 2
    get status 1 and are left to the caller.
    """
    coeffs = np.asarray(coeffs, dtype=np.int64)
    N = coeffs.shape[0]
    ranks = np.zeros((N, dims_out + 1), dtype=np.int64)
    tors = np.zeros((N, dims_out + 1, max_t), dtype=np.int64)
    status = np.zeros(N, dtype=np.int64)
    for d in range(len(src_rank)):
        rows, cols = int(ranks_even[d + 1]), int(src_rank[d])
        if min(rows, cols) > 2 or max_t < min(rows, cols):
            status[:] = 1
            return ranks, tors, status
        M = np.zeros((N, rows, cols), dtype=np.int64)
        for r, c, g in pat[pat_off[d]:pat_off[d + 1]]:
            M[:, r, c] += coeffs[:, g]
        flat = M.reshape(N, -1)
        big = np.max(np.abs(flat), axis=1, initial=0) > _MINOR_LIMIT
        status[big] = 1
        flat = np.where(big[:, None], 0, flat)
        M = flat.reshape(N, rows, cols)
        d1 = np.gcd.reduce(flat, axis=1) if flat.shape[1] else np.zeros(N, dtype=np.int64)
        d2 = np.zeros(N, dtype=np.int64)
        for i, j in combinations(range(rows), 2):
            for a, b in combinations(range(cols), 2):
                d2 = np.gcd(d2, M[:, i, a] * M[:, j, b] - M[:, i, b] * M[:, j, a])
        e1 = d1
        e2 = np.where(d1 != 0, d2 // np.where(d1 != 0, d1, 1), 0)
        rk = (e1 != 0).astype(np.int64) + (e2 != 0)
        ranks[:, 2 * d + 2] = rows - rk
        ranks[:, 2 * d + 1] = cols - rk
        # e1 | e2, so torsion factors pack left in that order
        t = tors[:, 2 * d + 2]
        t[:, 0] = np.where(e1 > 1, e1, np.where(e2 > 1, e2, 0))
        if max_t > 1:
            t[:, 1] = np.where((e1 > 1) & (e2 > 1), e2, 0)
    ranks[:, 0] = 1
    ranks[:, dims_out] = 1
    return ranks, tors, status


if HAVE_NUMBA:
    jacobi_eigh_numba = njit(cache=True)(_jacobi_eigh_loops)
    riemann_lower_numba = njit(cache=True)(_riemann_lower_loops)
    snf_diag_numba = njit(cache=True)(_snf_diag_int64)
    gysin_batch_numba = njit(cache=True)(_gysin_batch_loops)
else:  # pragma: no cover
    jacobi_eigh_numba = None
    riemann_lower_numba = None
    snf_diag_numba = None
    gysin_batch_numba = None


def jacobi_eigh(S, rel_tol=1e-12):
    """Eigenvalues, eigenvectors (columns) and sweep count of a symmetric matrix."""
    S = np.ascontiguousarray(S, dtype=np.float64)
    if S.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0)), 0
    if USE_NUMBA:
        return jacobi_eigh_numba(S, rel_tol)
    return jacobi_eigh_numpy(S, rel_tol)


def riemann_lower(G, gam, dgam):
    G = np.ascontiguousarray(G, dtype=np.float64)
    gam = np.ascontiguousarray(gam, dtype=np.float64)
    dgam = np.ascontiguousarray(dgam, dtype=np.float64)
    if USE_NUMBA:
        return riemann_lower_numba(G, gam, dgam)
    return riemann_lower_numpy(G, gam, dgam)
