"""Integral cohomology of principal circle bundles over products of complex projective spaces.

The base ``B = CP^{m_1} x ... x CP^{m_q}`` has ``H^*(B) = Z[a_1..a_q] / (a_i^{m_i+1})``
concentrated in even degrees, so the Gysin sequence of a circle bundle with
Euler class ``e`` splits into short pieces::

    H^{2d}(P)   = coker(e: H^{2d-2}(B) -> H^{2d}(B))
    H^{2d+1}(P) = ker(e: H^{2d}(B) -> H^{2d+2}(B))

All arithmetic uses Python integers (arbitrary precision).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from itertools import product
from math import comb

import numpy as np

from . import _kernels


@lru_cache(maxsize=None)
def _monomials(caps: tuple[int, ...], deg: int) -> tuple[tuple[int, ...], ...]:
    if deg % 2 or deg < 0 or deg > 2 * sum(caps):
        return ()
    w = deg // 2
    out = [e for e in product(*(range(m + 1) for m in caps)) if sum(e) == w]
    return tuple(sorted(out, reverse=True))


@lru_cache(maxsize=None)
def _cup_pattern(caps: tuple[int, ...], deg: int) -> tuple[tuple[int, int, int], ...]:
    """(row, col, factor index) triples: monomial col times a_i is monomial row."""
    src, dst = _monomials(caps, deg), _monomials(caps, deg + 2)
    row = {m: i for i, m in enumerate(dst)}
    return tuple(
        (row[m[:i] + (m[i] + 1,) + m[i + 1:]], j, i)
        for j, m in enumerate(src)
        for i in range(len(caps))
        if m[i] < caps[i]
    )


@dataclass(frozen=True)
class ProjectiveProductRing:
    caps: tuple[int, ...]

    def __post_init__(self):
        if not self.caps or any(int(m) < 1 for m in self.caps):
            raise ValueError("caps must be a non-empty list of positive integers")
        object.__setattr__(self, "caps", tuple(int(m) for m in self.caps))

    @property
    def top_degree(self) -> int:
        return 2 * sum(self.caps)

    @property
    def total_dim(self) -> int:
        """Dimension of a circle bundle over the product."""
        return self.top_degree + 1

    def monomials(self, deg: int) -> list[tuple[int, ...]]:
        """Exponent vectors of degree ``deg`` in descending lexicographic order."""
        return list(_monomials(self.caps, deg))

    def rank(self, deg: int) -> int:
        return len(_monomials(self.caps, deg))

    @classmethod
    def from_spec(cls, spec: str) -> "ProjectiveProductRing":
        """Parse ``"cp:1,cp:2"``; ``s2`` is accepted as ``cp:1``."""
        caps = []
        for part in spec.split(","):
            part = part.strip().lower()
            if part in ("s2", "sphere:2"):
                caps.append(1)
                continue
            name, _, m = part.partition(":")
            if name != "cp" or not m.isdigit():
                raise ValueError(f"bad base factor {part!r}; expected cp:m")
            caps.append(int(m))
        return cls(tuple(caps))


@dataclass(frozen=True)
class EulerClass:
    coeffs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(k) for k in self.coeffs))

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    @property
    def divisibility(self) -> int:
        return reduce(math.gcd, (abs(k) for k in self.coeffs), 0)


@dataclass(frozen=True)
class FgAbelianGroup:
    """``Z^rank + Z/d_1 + ... + Z/d_s`` with ``d_1 | d_2 | ...``, each >= 2."""

    rank: int
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        tors = tuple(int(d) for d in self.torsion)
        if self.rank < 0 or any(d < 2 for d in tors):
            raise ValueError("rank must be >= 0 and torsion factors >= 2")
        if any(b % a for a, b in zip(tors, tors[1:])):
            raise ValueError(f"torsion {tors} is not a divisibility chain")
        object.__setattr__(self, "torsion", tors)

    @property
    def torsion_order(self) -> int:
        return math.prod(self.torsion)

    @property
    def is_trivial(self) -> bool:
        return self.rank == 0 and not self.torsion

    def __str__(self) -> str:
        parts = (["Z"] if self.rank == 1 else [f"Z^{self.rank}"] if self.rank else [])
        parts += [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"

    def as_dict(self) -> dict:
        return {"rank": self.rank, "torsion": list(self.torsion), "str": str(self)}


@dataclass(frozen=True)
class GradedCohomology:
    groups: tuple[FgAbelianGroup, ...]
    diagnostics: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def dim(self) -> int:
        return len(self.groups) - 1

    @property
    def betti(self) -> list[int]:
        return [g.rank for g in self.groups]

    def __getitem__(self, q: int) -> FgAbelianGroup:
        if 0 <= q < len(self.groups):
            return self.groups[q]
        return FgAbelianGroup(0)

    def key(self) -> tuple:
        return tuple((g.rank, g.torsion) for g in self.groups)

    def as_dict(self) -> dict:
        return {
            "groups": {f"H{q}": g.as_dict() for q, g in enumerate(self.groups)},
            "betti": self.betti,
            "diagnostics": self.diagnostics,
        }


# cup product ----------------------------------------------------------------------

def cup_matrix(R: ProjectiveProductRing, e: EulerClass, q_deg: int) -> list[list[int]]:
    """Integer matrix of ``x -> e x`` from ``H^q(B)`` to ``H^{q+2}(B)`` in monomial bases."""
    if q_deg % 2:
        raise ValueError("cup_matrix needs an even degree")
    if len(e.coeffs) != len(R.caps):
        raise ValueError("Euler class has the wrong number of coefficients")
    M = [[0] * R.rank(q_deg) for _ in range(R.rank(q_deg + 2))]
    for i, j, f in _cup_pattern(R.caps, q_deg):
        M[i][j] += e.coeffs[f]
    return M


# Smith normal form ------------------------------------------------------------------

def _identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A, B) -> list[list[int]]:
    if not A or not B:
        return [[0] * (len(B[0]) if B else 0) for _ in A]
    return [[sum(a * b for a, b in zip(r, c)) for c in zip(*B)] for r in A]


def determinant(M) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(r) for r in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k]), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[-1][-1]


@dataclass(frozen=True)
class SmithForm:
    diagonal: tuple[int, ...]  # nonzero invariant factors, d_1 | d_2 | ...
    U: list
    V: list
    D: list

    @property
    def rank(self) -> int:
        return len(self.diagonal)


def smith_normal_form(M) -> SmithForm:
    """Unimodular ``U, V`` with ``U M V = D`` diagonal, positive and divisibility-ordered.

    Elimination by integer division with the smallest entry as pivot. The
    witnesses are checked by exact multiplication before returning.
    """
    M = [[int(v) for v in row] for row in M]
    m = len(M)
    n = len(M[0]) if m else 0
    if any(len(r) != n for r in M):
        raise ValueError("ragged matrix")
    A = [r[:] for r in M]
    U, V = _identity(m), _identity(n)

    t = 0
    while t < m and t < n:
        best, bi, bj = 0, -1, -1
        for i in range(t, m):
            Ai = A[i]
            for j in range(t, n):
                v = Ai[j] if Ai[j] >= 0 else -Ai[j]
                if v and (not best or v < best):
                    best, bi, bj = v, i, j
        if not best:
            break
        if bi != t:
            A[t], A[bi] = A[bi], A[t]
            U[t], U[bi] = U[bi], U[t]
        if bj != t:
            for r in A:
                r[t], r[bj] = r[bj], r[t]
            for r in V:
                r[t], r[bj] = r[bj], r[t]
        while True:
            p = A[t][t]
            moved = False
            # clear column t; a nonzero remainder becomes the new, smaller pivot
            for i in range(t + 1, m):
                a = A[i][t]
                if not a:
                    continue
                f = a // p
                Ai, At, Ui, Ut = A[i], A[t], U[i], U[t]
                for c in range(t, n):
                    Ai[c] -= f * At[c]
                for c in range(m):
                    Ui[c] -= f * Ut[c]
                if Ai[t]:
                    A[t], A[i] = Ai, At
                    U[t], U[i] = Ui, Ut
                    moved = True
                    break
            if moved:
                continue
            At = A[t]
            for j in range(t + 1, n):
                a = At[j]
                if not a:
                    continue
                f = a // p
                for r in A:
                    r[j] -= f * r[t]
                for r in V:
                    r[j] -= f * r[t]
                if At[j]:
                    for r in A:
                        r[t], r[j] = r[j], r[t]
                    for r in V:
                        r[t], r[j] = r[j], r[t]
                    moved = True
                    break
            if moved:
                continue
            # the pivot must divide the remaining block; otherwise fold a bad row in
            bad = -1
            for i in range(t + 1, m):
                Ai = A[i]
                for j in range(t + 1, n):
                    if Ai[j] % p:
                        bad = i
                        break
                if bad >= 0:
                    break
            if bad < 0:
                break
            A[t] = [x + y for x, y in zip(A[t], A[bad])]
            U[t] = [x + y for x, y in zip(U[t], U[bad])]
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-u for u in U[t]]
        t += 1

    diag = tuple(A[i][i] for i in range(min(m, n)) if A[i][i])
    if matmul(matmul(U, M), V) != A:
        raise ArithmeticError("Smith witness check failed")
    if any(b % a for a, b in zip(diag, diag[1:])):
        raise ArithmeticError("Smith diagonal is not a divisibility chain")
    return SmithForm(diagonal=diag, U=U, V=V, D=A)


def cokernel(M, rows: int) -> FgAbelianGroup:
    """``Z^rows / im(M)``."""
    if rows == 0:
        return FgAbelianGroup(0)
    if not M or not M[0]:
        return FgAbelianGroup(rows)
    d = smith_normal_form(M).diagonal
    return FgAbelianGroup(rows - len(d), tuple(x for x in d if x > 1))


def kernel_rank(M, cols: int) -> int:
    if cols == 0:
        return 0
    if not M:
        return cols
    return cols - smith_normal_form(M).rank


def rational_rank(M) -> int:
    """Rank over Q by fraction-free integer elimination (independent of the Smith code)."""
    A = [list(r) for r in M if any(r)]
    rank, cols = 0, len(A[0]) if A else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(A)) if A[i][c]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        p = A[rank]
        for i in range(rank + 1, len(A)):
            if A[i][c]:
                f = A[i][c]
                A[i] = [p[c] * a - f * b for a, b in zip(A[i], p)]
        rank += 1
    return rank


# Gysin ----------------------------------------------------------------------------

def gysin_total_space(R: ProjectiveProductRing, e: EulerClass, rank_identity: bool = True) -> GradedCohomology:
    """Graded cohomology of the total space with duality and Euler-characteristic diagnostics.

    ``rank_identity`` also recomputes the Betti numbers by exact rational
    elimination, independently of the Smith code.
    """
    if len(e.coeffs) != len(R.caps):
        raise ValueError("Euler class has the wrong number of coefficients")
    dim = R.total_dim
    cups = {q: cup_matrix(R, e, q) for q in range(0, R.top_degree, 2)}
    snf = {q: smith_normal_form(M) for q, M in cups.items()}
    groups = []
    for q in range(dim + 1):
        if q % 2 == 0:
            d = snf[q - 2].diagonal if q >= 2 else ()
            groups.append(FgAbelianGroup(R.rank(q) - len(d), tuple(x for x in d if x > 1)))
        else:
            rk = snf[q - 1].rank if q - 1 in snf else 0
            groups.append(FgAbelianGroup(R.rank(q - 1) - rk))
    H = GradedCohomology(tuple(groups))
    H.diagnostics.update(poincare_duality(H))
    H.diagnostics["euler_characteristic"] = euler_characteristic(H)
    if rank_identity:
        H.diagnostics["gysin_rank_identity"] = _rank_identity(R, cups, H)
    return H


def euler_characteristic(H: GradedCohomology) -> int:
    return sum((-1) ** q * b for q, b in enumerate(H.betti))


def poincare_duality(H: GradedCohomology) -> dict:
    """Betti symmetry ``b_q = b_{d-q}`` and torsion linking ``T^q = T^{d-q+1}``."""
    d = H.dim
    betti_ok = all(H[q].rank == H[d - q].rank for q in range(d + 1))
    torsion_ok = all(H[q].torsion == H[d - q + 1].torsion for q in range(1, d + 1))
    return {"betti_symmetric": betti_ok, "torsion_linked": torsion_ok}


def gysin_rank_identity(R: ProjectiveProductRing, e: EulerClass, H: GradedCohomology) -> bool:
    """Rational Betti numbers from the exact sequence, recomputed by integer elimination."""
    return _rank_identity(R, {q: cup_matrix(R, e, q) for q in range(0, R.top_degree, 2)}, H)


def _rank_identity(R: ProjectiveProductRing, cups: dict, H: GradedCohomology) -> bool:
    for q in range(H.dim + 1):
        if q % 2 == 0:
            expected = R.rank(q) - (rational_rank(cups[q - 2]) if q >= 2 else 0)
        else:
            expected = R.rank(q - 1) - rational_rank(cups.get(q - 1, []))
        if expected != H[q].rank:
            return False
    return True


def pi1_circle_bundle(e: EulerClass) -> dict:
    """``pi_1 = Z / gcd(k_i)`` over a simply connected base; ``Z`` when e = 0."""
    g = e.divisibility
    group = FgAbelianGroup(1) if g == 0 else FgAbelianGroup(0, (g,) if g > 1 else ())
    return {
        "group": group,
        "simply_connected": group.is_trivial,
        "trivial_bundle": e.is_zero,
    }


def betti_bound_check(H, n: int) -> dict:
    """``b_k <= C(n, k)`` for every degree. ``H`` may be a GradedCohomology or a list of ranks."""
    betti = H.betti if isinstance(H, GradedCohomology) else [int(b) for b in H]
    margins = [comb(n, k) - b for k, b in enumerate(betti)]
    failing = [k for k, m in enumerate(margins) if m < 0]
    return {
        "pass": not failing,
        "margins": margins,
        "failing_degrees": failing,
        "equality_degrees": [k for k, m in enumerate(margins) if m == 0],
    }


def distinct_homotopy_types(R: ProjectiveProductRing, classes) -> dict:
    """Group Euler classes by the graded cohomology of the total space.

    Different groups force different homotopy types. Entries in one group are
    only "not distinguished" by this invariant.
    """
    classes = [c if isinstance(c, EulerClass) else EulerClass(tuple(c)) for c in classes]
    for c in classes:
        if c.divisibility != 1:
            raise ValueError(f"Euler class {c.coeffs} is not primitive")
    ids, groups, keys = [], [], {}
    for c in classes:
        key = gysin_total_space(R, c).key()
        if key not in keys:
            keys[key] = len(groups)
            groups.append([])
        groups[keys[key]].append(list(c.coeffs))
        ids.append(keys[key])
    return {
        "class_ids": ids,
        "classes": groups,
        "count": len(groups),
        "verdicts": ["distinguished" if len(g) == 1 else "not distinguished by this invariant" for g in groups],
    }


_INT64_MAX = int(np.iinfo(np.int64).max)


def gysin_batch(R: ProjectiveProductRing, coeffs) -> tuple[np.ndarray, np.ndarray]:
    """Ranks ``[N, dim+1]`` and zero-padded torsion ``[N, dim+1, T]`` for many Euler classes.

    Uses the int64 loop kernel under numba and a vectorized determinantal
    divisor kernel otherwise; items either one flags (possible overflow, a
    failed witness, a shape it does not cover) go through
    ``gysin_total_space`` with Python integers. If an exact torsion factor
    does not fit in int64 the torsion array is returned with dtype object.
    """
    coeffs = np.asarray(coeffs, dtype=np.int64).reshape(-1, len(R.caps))
    degs = list(range(0, R.top_degree, 2))
    pats = [np.array(_cup_pattern(R.caps, d), dtype=np.int64).reshape(-1, 3) for d in degs]
    offs = np.cumsum([0] + [len(pt) for pt in pats]).astype(np.int64)
    src = np.array([R.rank(d) for d in degs], dtype=np.int64)
    even = np.array([R.rank(d) for d in range(0, R.top_degree + 1, 2)], dtype=np.int64)
    max_t = max(1, max(min(R.rank(d), R.rank(d + 2)) for d in degs))
    dim = R.total_dim
    if _kernels.USE_NUMBA and len(coeffs):
        ranks, tors, status = _kernels.gysin_batch_numba(coeffs, np.vstack(pats), offs, src, even, dim, max_t)
    else:
        ranks, tors, status = _kernels.gysin_batch_numpy(coeffs, np.vstack(pats), offs, src, even, dim, max_t)
    for p in np.flatnonzero(status):
        H = gysin_total_space(R, EulerClass(tuple(int(v) for v in coeffs[p])), rank_identity=False)
        tors[p] = 0
        if tors.dtype != object and any(d > _INT64_MAX for g in H.groups for d in g.torsion):
            tors = tors.astype(object)
        for q, g in enumerate(H.groups):
            ranks[p, q] = g.rank
            tors[p, q, : len(g.torsion)] = g.torsion
    return ranks, tors


def coprime_sweep(R: ProjectiveProductRing, bound: int) -> dict:
    """Check H^2 = Z and H^4 = Z/l^2, duality and chi = 0 for coprime (k, l), |k|, |l| <= bound."""
    if R.caps != (1, 2):
        raise ValueError("the sweep is defined over CP^1 x CP^2")
    kk, ll = np.meshgrid(np.arange(-bound, bound + 1), np.arange(-bound, bound + 1), indexing="ij")
    kk, ll = kk.ravel(), ll.ravel()
    keep = np.gcd(kk, ll) == 1
    kk, ll = kk[keep], ll[keep]
    ranks, tors = gysin_batch(R, np.column_stack([kk, ll]))
    dim = R.total_dim
    l2 = ll * ll
    h2_ok = (ranks[:, 2] == 1) & np.all(tors[:, 2] == 0, axis=1)
    # Z/l^2, read as Z when l = 0
    h4_ok = np.where(
        ll == 0,
        (ranks[:, 4] == 1) & np.all(tors[:, 4] == 0, axis=1),
        (ranks[:, 4] == 0) & (np.where(l2 > 1, tors[:, 4, 0] == l2, tors[:, 4, 0] == 0)) & np.all(tors[:, 4, 1:] == 0, axis=1),
    )
    pd_betti = np.all(ranks == ranks[:, ::-1], axis=1)
    pd_tors = np.all(tors[:, 1:] == tors[:, 1:][:, ::-1], axis=(1, 2))
    chi = ranks @ ((-1) ** np.arange(dim + 1))
    ok = h2_ok & h4_ok & pd_betti & pd_tors & (chi == 0)
    return {
        "checked": int(len(kk)),
        "failures": [(int(k), int(l)) for k, l in zip(kk[~ok], ll[~ok])],
    }
