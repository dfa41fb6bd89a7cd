"""Block curvature operator of the canonical variation ``(P, g^t)``.

The operator is written in the scaled bivector basis

    X_i ^ X_j (i < j),   X_a ^ X_b / t^2 (a < b),   X_i ^ X_a / t,

which is orthonormal for ``g^t`` (horizontal X_i orthonormal on the base,
vertical X_a b-orthonormal). Leading blocks::

    [ R_M   B          0 ]
    [ B^T   R_G / t^2  0 ]  +  t C_1  +  t^2 C_2
    [ 0     0          A ]

with ``A_{ia,jb} = -1/4 b(w_ij, [E_a, E_b])`` and
``B_{ij,ab} = -1/2 b(w_ij, [E_a, E_b])``, where ``w_ij`` stands for
``gamma([X_i, X_j])`` under the calibrated convention ``w_ij = Omega(X_i, X_j)``
(see ``CALIBRATED_GAMMA_SIGN``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from . import _kernels, bundle as bundle_mod, geometry, lie
from .bundle import ConnectionChartData

# The printed A and B blocks agree with the coordinate oracle when
# gamma([X_i, X_j]) is read as +Omega(X_i, X_j); the literal bracket of
# horizontal lifts is -Omega (bundle.BRACKET_SIGN). Calibrated on qhopf.
CALIBRATED_GAMMA_SIGN = 1.0

SYMMETRY_TOL = 1e-10
ZERO_TOL = 1e-10
DEFAULT_T_GRID = tuple(2.0**-k for k in range(15))


@dataclass(frozen=True)
class ScaledBivectorBasis:
    n: int
    r: int

    @cached_property
    def hh(self) -> list[tuple[int, int]]:
        return list(combinations(range(self.n), 2))

    @cached_property
    def vv(self) -> list[tuple[int, int]]:
        return list(combinations(range(self.r), 2))

    @cached_property
    def mixed(self) -> list[tuple[int, int]]:
        return [(i, a) for i in range(self.n) for a in range(self.r)]

    @property
    def size(self) -> int:
        return len(self.hh) + len(self.vv) + len(self.mixed)

    @property
    def slices(self) -> dict[str, slice]:
        h, v = len(self.hh), len(self.vv)
        return {"hh": slice(0, h), "vv": slice(h, h + v), "mixed": slice(h + v, self.size)}

    def labels(self) -> list[str]:
        return (
            [f"h{i}^h{j}" for i, j in self.hh]
            + [f"v{a}^v{b}/t2" for a, b in self.vv]
            + [f"h{i}^v{a}/t" for i, a in self.mixed]
        )


@dataclass(frozen=True)
class BlockCurvatureMatrix:
    """Named blocks of the operator at one point and one ``t``.

    ``algebraic_t2`` is the part of ``C_2`` expressible through Omega alone;
    ``residual`` holds whatever else is known (zero for the truncated assembly).
    """

    t: float
    basis: ScaledBivectorBasis
    R_M: np.ndarray
    R_G: np.ndarray
    A: np.ndarray
    B: np.ndarray
    algebraic_t2: np.ndarray
    residual: np.ndarray = field(default=None)

    def leading(self) -> np.ndarray:
        s = self.basis.slices
        out = np.zeros((self.basis.size, self.basis.size))
        out[s["hh"], s["hh"]] = self.R_M
        out[s["vv"], s["vv"]] = self.R_G / self.t**2
        out[s["hh"], s["vv"]] = self.B
        out[s["vv"], s["hh"]] = self.B.T
        out[s["mixed"], s["mixed"]] = self.A
        return out

    @property
    def matrix(self) -> np.ndarray:
        m = self.leading() + self.t**2 * self.algebraic_t2
        if self.residual is not None:
            m = m + self.residual
        return 0.5 * (m + m.T)


@dataclass(frozen=True)
class AncoReport:
    t: float
    lambda_min: float
    diam_bound: float
    anco_quantity: float
    criterion_verdict: bool

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "lambda_min": self.lambda_min,
            "diam_bound": self.diam_bound,
            "anco_quantity": self.anco_quantity,
            "criterion_verdict": self.criterion_verdict,
        }


# Omega-derived pieces -----------------------------------------------------------

def _omega_frame(C: ConnectionChartData, x) -> np.ndarray:
    return bundle_mod.curvature_form(C, x).frame


def _w(C: ConnectionChartData, x) -> np.ndarray:
    """Calibrated stand-in for gamma([X_i, X_j]), shape (n, n, r)."""
    return CALIBRATED_GAMMA_SIGN * _omega_frame(C, x)


def block_A(C: ConnectionChartData, x) -> np.ndarray:
    basis = ScaledBivectorBasis(C.n, C.r)
    w = _w(C, x)
    pair = np.einsum("ijc,abc->iajb", w, C.algebra.structure_constants)  # b(w_ij, [E_a, E_b])
    A = -0.25 * pair.reshape(len(basis.mixed), len(basis.mixed))
    return 0.5 * (A + A.T)


def block_B(C: ConnectionChartData, x) -> np.ndarray:
    basis = ScaledBivectorBasis(C.n, C.r)
    w = _w(C, x)
    c = C.algebra.structure_constants
    B = np.zeros((len(basis.hh), len(basis.vv)))
    for p, (i, j) in enumerate(basis.hh):
        for q, (a, b) in enumerate(basis.vv):
            B[p, q] = -0.5 * (w[i, j] @ c[a, b])
    return B


def group_operator(L: lie.LieAlgebraData) -> np.ndarray:
    """Curvature operator of (G, b) on X_a ^ X_b: entries 1/4 b([E_a, E_b], [E_c, E_d])."""
    vv = list(combinations(range(L.dim_r), 2))
    if not vv:
        return np.zeros((0, 0))
    c = L.structure_constants
    br = np.array([c[a, b] for a, b in vv])
    return 0.25 * br @ br.T


def algebraic_t2(C: ConnectionChartData, x) -> np.ndarray:
    """t^2 coefficients built from Omega only (O'Neill A-tensor products).

    With ``A_{X_i} X_a = 1/2 sum_k b(E_a, Omega_ik) X_k`` and
    ``A_{X_i} X_j = -1/2 Omega_ij``:

    * hh:    2 g(A_ij, A_lk) + g(A_il, A_jk) - g(A_jl, A_ik)
    * hh-vv: -(g(A_i X_a, A_j X_b) - g(A_j X_a, A_i X_b))
    * mixed: g(A_i X_b, A_j X_a)
    """
    basis = ScaledBivectorBasis(C.n, C.r)
    om = _omega_frame(C, x)
    s = basis.slices
    out = np.zeros((basis.size, basis.size))
    ip = np.einsum("ija,kla->ijkl", om, om)  # b(Om_ij, Om_kl)
    for p, (i, j) in enumerate(basis.hh):
        for q, (k, l) in enumerate(basis.hh):
            out[p, q] = 0.25 * (2 * ip[i, j, l, k] + ip[i, l, j, k] - ip[j, l, i, k])
    ah = 0.5 * om.transpose(0, 2, 1)  # ah[i, a, k]
    g = np.einsum("iak,jbk->iajb", ah, ah)  # g(A_i X_a, A_j X_b)
    hv = np.zeros((len(basis.hh), len(basis.vv)))
    for p, (i, j) in enumerate(basis.hh):
        for q, (a, b) in enumerate(basis.vv):
            hv[p, q] = -(g[i, a, j, b] - g[j, a, i, b])
    out[s["hh"], s["vv"]] = hv
    out[s["vv"], s["hh"]] = hv.T
    m = len(basis.mixed)
    out[s["mixed"], s["mixed"]] = g.transpose(0, 3, 2, 1).reshape(m, m)
    return 0.5 * (out + out.T)


def assemble_truncated(C: ConnectionChartData, x, t: float) -> BlockCurvatureMatrix:
    if not t > 0:
        raise ValueError("t must be positive")
    basis = ScaledBivectorBasis(C.n, C.r)
    return BlockCurvatureMatrix(
        t=float(t),
        basis=basis,
        R_M=geometry.curvature_operator_matrix(C.base, x),
        R_G=group_operator(C.algebra),
        A=block_A(C, x),
        B=block_B(C, x),
        algebraic_t2=algebraic_t2(C, x),
    )


# spectra ------------------------------------------------------------------------

def _symmetrized(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S), initial=0.0)))
    defect = float(np.max(np.abs(S - S.T), initial=0.0))
    if defect > SYMMETRY_TOL * scale:
        raise ValueError(f"matrix is not symmetric (defect {defect:.3g})")
    return 0.5 * (S + S.T)


def eigenvalues(S) -> np.ndarray:
    """Ascending eigenvalues by cyclic Jacobi (off-diagonal norm <= 1e-12 ||S||)."""
    w, _, _ = _kernels.jacobi_eigh(_symmetrized(S))
    return np.sort(w)


def min_eigenvalue(S) -> float:
    w = eigenvalues(S)
    return float(w[0]) if w.size else 0.0


def skew_block_negativity(A, n: int, r: int, tol: float = SYMMETRY_TOL) -> dict:
    """Trace and smallest eigenvalue of a double-skew symmetric ``nr x nr`` matrix."""
    A = np.asarray(A, dtype=float)
    if A.shape != (n * r, n * r):
        raise ValueError(f"expected shape {(n * r, n * r)}, got {A.shape}")
    T = A.reshape(n, r, n, r)
    d_ij = float(np.max(np.abs(T + T.transpose(2, 1, 0, 3)), initial=0.0))
    d_ab = float(np.max(np.abs(T + T.transpose(0, 3, 2, 1)), initial=0.0))
    if max(d_ij, d_ab) > tol:
        raise ValueError(f"not double-skew: i<->j defect {d_ij:.3g}, a<->b defect {d_ab:.3g}")
    fro = float(np.linalg.norm(A))
    return {
        "trace": float(np.trace(A)),
        "lambda_min": min_eigenvalue(A),
        "frobenius": fro,
        "is_zero": fro <= ZERO_TOL,
    }


def random_double_skew(n: int, r: int, rng: np.random.Generator, density: float = 1.0) -> np.ndarray:
    """Random element of Lambda^2(R^n) (x) Lambda^2(R^r) laid out as A_{ia, jb}."""
    X = np.zeros((n, n, r, r))
    for i, j in combinations(range(n), 2):
        for a, b in combinations(range(r), 2):
            if rng.random() < density:
                w = rng.normal()
                X[i, j, a, b], X[j, i, a, b] = w, -w
                X[i, j, b, a], X[j, i, b, a] = -w, w
    return X.transpose(0, 2, 1, 3).reshape(n * r, n * r)


# sweeps ---------------------------------------------------------------------------

def diam_bound(C: ConnectionChartData, t: float) -> float:
    """Submersion bound diam(P, g^t) <= diam(M) + t diam(G, b)."""
    return C.base.diameter() + t * C.algebra.group_diameter


def anco_report(C: ConnectionChartData, t: float, lam: float, verdict: bool) -> AncoReport:
    d = diam_bound(C, t)
    return AncoReport(t=float(t), lambda_min=float(lam), diam_bound=d, anco_quantity=float(lam) * d * d,
                      criterion_verdict=bool(verdict))


def t_sweep(C: ConnectionChartData, points, t_list=DEFAULT_T_GRID, use_oracle: bool = False,
            criterion_tol: float = 1e-10) -> list[AncoReport]:
    """lambda_min over the sample points of the operator at each t, with the ANCO quantity."""
    points = [np.asarray(p, dtype=float) for p in np.atleast_2d(points)]
    ts = [float(t) for t in t_list]
    if any(t <= 0 for t in ts):
        raise ValueError("t values must be positive")
    if any(b > a for a, b in zip(ts, ts[1:])):
        raise ValueError("t values must be descending")
    verdict = bundle_mod.anco_criterion(C, points, criterion_tol)["holds"]
    reports = []
    for t in ts:
        lam = math.inf
        for x in points:
            if use_oracle:
                from . import oracle

                F = oracle.TrivializedMetricField(C, t)
                S = oracle.operator_matrix(F, F.point(x))
            else:
                S = assemble_truncated(C, x, t).matrix
            lam = min(lam, min_eigenvalue(S))
        reports.append(anco_report(C, t, lam, verdict))
    return reports


def sweep_diagnostics(reports: list[AncoReport], tail: int = 6) -> dict:
    """Tail monotonicity of |anco_quantity| and the log-log rate of |lambda_min| on the tail."""
    q = np.array([abs(r.anco_quantity) for r in reports[-tail:]])
    lam = np.array([r.lambda_min for r in reports[-tail:]])
    ts = np.array([r.t for r in reports[-tail:]])
    slack = 1e-12 * max(1.0, float(np.max(q, initial=0.0)))
    monotone = bool(np.all(np.diff(q) <= slack))
    rate = None
    nz = np.abs(lam) > 1e-14
    if np.count_nonzero(nz) >= 2:
        rate = float(np.polyfit(np.log(ts[nz]), np.log(np.abs(lam[nz])), 1)[0])
    return {
        "tail_points": len(q),
        "tail_abs_anco_monotone_nonincreasing": monotone,
        "tail_lambda_min_rate": rate,
        "last_anco_quantity": float(reports[-1].anco_quantity) if reports else None,
    }
