"""Principal bundles over model bases, described by local connection potentials.

In the chart trivialization ``P|U = U x G`` (right action ``(x, h) k = (x, hk)``)
the connection is ``gamma = Ad(h^-1) A + h^-1 dh`` with ``A = sum A_mu dx^mu``,
and its curvature has coordinate components

    Omega_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu].

Horizontal lifts of base fields satisfy ``gamma([X~, Y~]) = -Omega(X, Y)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry, lie
from .geometry import BaseManifoldModel
from .lie import LieAlgebraData

FD_STEP = 1e-5
SMOOTHNESS_TOL = 1e-6

# gamma([X~_i, X~_j]) = BRACKET_SIGN * Omega(X_i, X_j) for horizontal lifts
BRACKET_SIGN = -1.0


@dataclass(frozen=True)
class ConnectionChartData:
    """Base model, structure algebra and local potential ``x -> A[mu, a]`` (shape n x r)."""

    base: BaseManifoldModel
    algebra: LieAlgebraData
    potential: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    parallel_curvature: bool = False
    notes: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.base.dim_n

    @property
    def r(self) -> int:
        return self.algebra.dim_r

    def A(self, x) -> np.ndarray:
        a = np.asarray(self.potential(np.asarray(x, dtype=float)), dtype=float)
        if a.shape != (self.n, self.r):
            raise ValueError(f"potential must return shape {(self.n, self.r)}, got {a.shape}")
        return a


BundleModel = ConnectionChartData


@dataclass(frozen=True)
class CurvatureFormValue:
    point: np.ndarray
    coord: np.ndarray  # [mu, nu, a]
    frame_matrix: np.ndarray  # columns: orthonormal base frame in chart coordinates
    frame: np.ndarray  # [i, j, a] = Omega(X_i, X_j)
    fd_discrepancy: float = 0.0


@dataclass(frozen=True)
class CanonicalVariationMetric:
    bundle: ConnectionChartData
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"canonical variation needs t > 0, got {self.t}")


def _omega_coords(C: ConnectionChartData, x: np.ndarray, h: float) -> np.ndarray:
    n = C.n
    dA = np.empty((n, n, C.r))  # dA[mu, nu, a] = d_mu A_nu^a
    for mu in range(n):
        e = np.zeros(n)
        e[mu] = h
        dA[mu] = (C.A(x + e) - C.A(x - e)) / (2 * h)
    A = C.A(x)
    br = np.einsum("mb,nc,bca->mna", A, A, C.algebra.structure_constants)
    return dA - dA.transpose(1, 0, 2) + br


def curvature_form(C: ConnectionChartData, x, h: float = FD_STEP) -> CurvatureFormValue:
    x = C.base.check_point(x, margin=2 * h)
    om = _omega_coords(C, x, h)
    coarse = _omega_coords(C, x, 2 * h)
    disc = float(np.max(np.abs(om - coarse), initial=0.0))
    if disc > SMOOTHNESS_TOL * (1.0 + float(np.max(np.abs(om), initial=0.0))):
        warnings.warn(f"{C.name}: potential looks non-smooth at {x.tolist()} (step discrepancy {disc:.2e})")
    f = geometry.orthonormal_frame_at(C.base, x)
    frame = np.einsum("mna,mi,nj->ija", om, f, f)
    return CurvatureFormValue(point=x, coord=om, frame_matrix=f, frame=frame, fd_discrepancy=disc)


def _max_projection(C: ConnectionChartData, points, sub: lie.Subspace) -> float:
    worst = 0.0
    for x in points:
        om = curvature_form(C, x).frame
        worst = max(worst, float(np.max(np.linalg.norm(sub.project(om), axis=-1), initial=0.0)))
    return worst


def anco_criterion(C: ConnectionChartData, sample_points, tol: float = 1e-10) -> dict:
    """Does the curvature take values orthogonal to ``[g, g]`` on the samples?"""
    points = list(sample_points)
    if not points:
        raise ValueError("anco_criterion needs at least one sample point")
    v = _max_projection(C, points, lie.commutator_subalgebra(C.algebra))
    return {"holds": bool(v <= tol), "max_violation": v}


def quotient_split(C: ConnectionChartData, x) -> dict:
    """Split Omega into its ``[g, g]`` part (curvature of gamma_1) and the complement part."""
    om = curvature_form(C, x).frame
    comm = lie.commutator_subalgebra(C.algebra)
    omega1 = comm.project(om)
    omega2 = lie.orthogonal_complement(comm).project(om)
    return {"omega": om, "omega1": omega1, "omega2": omega2}


def metric_gt_frame(Mt: CanonicalVariationMetric, x) -> np.ndarray:
    Mt.bundle.base.check_point(x)
    n, r = Mt.bundle.n, Mt.bundle.r
    return np.diag(np.concatenate([np.ones(n), np.full(r, Mt.t**2)]))


def bianchi_defect(C: ConnectionChartData, x, h: float = 1e-3) -> float:
    """Max |cyclic sum of D_lambda Omega_{mu nu}| (should vanish)."""
    x = C.base.check_point(x, margin=h + 2 * FD_STEP)
    n = C.n
    D = np.empty((n, n, n, C.r))
    A = C.A(x)
    om = curvature_form(C, x).coord
    for lam in range(n):
        e = np.zeros(n)
        e[lam] = h
        d = (curvature_form(C, x + e).coord - curvature_form(C, x - e).coord) / (2 * h)
        D[lam] = d + np.einsum("b,mnc,bca->mna", A[lam], om, C.algebra.structure_constants)
    cyc = D + D.transpose(1, 2, 0, 3) + D.transpose(2, 0, 1, 3)
    return float(np.max(np.abs(cyc), initial=0.0))


# connection potentials --------------------------------------------------------

def kahler_potential_cp(x) -> np.ndarray:
    """1-form a with da = 2 omega_FS(c=4) on a CP^m chart (integral 2 pi over a line)."""
    x = np.asarray(x, dtype=float)
    xs, ys = x[0::2], x[1::2]
    q = 1.0 + float(x @ x)
    a = np.empty_like(x)
    a[0::2] = -ys / q
    a[1::2] = xs / q
    return a


def sphere2_area_potential(x, radius: float = 1.0) -> np.ndarray:
    """1-form with d(...) = area form of S^2(radius) in stereographic coordinates."""
    x = np.asarray(x, dtype=float)
    q = 1.0 + float(x @ x)
    return 2.0 * radius**2 * np.array([-x[1], x[0]]) / q


def _quat_mul(p, q):
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array([
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ])


def instanton_potential(x) -> np.ndarray:
    """A_mu = Im(conj(x) e_mu) / (1 + |x|^2) on R^4 = H, valued in Im H = span(i, j, k)."""
    x = np.asarray(x, dtype=float)
    xbar = x * np.array([1.0, -1.0, -1.0, -1.0])
    q = 1.0 + float(x @ x)
    out = np.empty((4, 3))
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = 1.0
        out[mu] = _quat_mul(xbar, e)[1:] / q
    return out


@dataclass(frozen=True)
class PolynomialPotential:
    """``A_mu = sum coeff * prod(x ** powers) * E_generator`` over the listed terms.

    ``terms[mu]`` is a list of ``(coeff, powers, generator)`` triples.
    """

    n: int
    r: int
    terms: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.n, self.r))
        for mu, row in enumerate(self.terms):
            for coeff, powers, gen in row:
                out[mu, gen] += coeff * float(np.prod(x ** np.asarray(powers, dtype=float)))
        return out

    @classmethod
    def from_table(cls, table, n: int, r: int) -> "PolynomialPotential":
        if len(table) != n:
            raise ValueError(f"polynomial connection needs {n} rows (one per base coordinate), got {len(table)}")
        rows = []
        for mu, row in enumerate(table):
            terms = []
            for term in row:
                powers = tuple(int(p) for p in term.get("powers", [0] * n))
                gen = int(term["generator"])
                if len(powers) != n or any(p < 0 for p in powers):
                    raise ValueError(f"row {mu}: powers must be {n} nonnegative integers")
                if not 0 <= gen < r:
                    raise ValueError(f"row {mu}: generator index {gen} out of range 0..{r - 1}")
                terms.append((float(term["coeff"]), powers, gen))
            rows.append(tuple(terms))
        return cls(n, r, tuple(rows))


# presets ----------------------------------------------------------------------

def flat_bundle(n: int = 2, algebra: LieAlgebraData | None = None) -> ConnectionChartData:
    alg = algebra if algebra is not None else lie.abelian(1)
    r = alg.dim_r
    return ConnectionChartData(
        geometry.FlatTorus(n), alg, lambda x: np.zeros((n, r)), name="flat", parallel_curvature=True
    )


def pkl_bundle(k: float, l: float, c1: float = 4.0, c2: float = 4.0) -> ConnectionChartData:
    """Circle bundle over CP^1 x CP^2 with curvature k sigma_1 + l sigma_2.

    ``sigma_i`` is ``2 omega_FS`` of the factor at c=4, which integrates to
    ``2 pi`` over a projective line; with fibre angle of period ``2 pi`` the
    Euler class is ``k alpha + l beta`` (up to an overall orientation sign).
    """
    base = geometry.product([geometry.ComplexProjective(1, c1), geometry.ComplexProjective(2, c2)])

    def potential(x):
        a = np.concatenate([k * kahler_potential_cp(x[:2]), l * kahler_potential_cp(x[2:])])
        return a[:, None]

    return ConnectionChartData(
        base,
        lie.abelian(1),
        potential,
        name=f"pkl:{k:g}:{l:g}",
        parallel_curvature=True,
        notes={"euler_class": [k, l]},
    )


def hopf_bundle(k: float = 1.0) -> ConnectionChartData:
    """Circle bundle over CP^1(c=4) = S^2(1/2); k=1 at t=1 is the round unit S^3."""
    base = geometry.ComplexProjective(1, 4.0)
    return ConnectionChartData(
        base,
        lie.abelian(1),
        lambda x: k * kahler_potential_cp(x)[:, None],
        name="hopf" if k == 1 else f"hopf:{k:g}",
        parallel_curvature=True,
        notes={"euler_class": [k]},
    )


def heisenberg_bundle(F: float = 1.0) -> ConnectionChartData:
    """Circle bundle over a flat 2-torus with constant curvature F dx^1 ^ dx^2."""
    return ConnectionChartData(
        geometry.FlatTorus(2),
        lie.abelian(1),
        lambda x: 0.5 * F * np.array([[-x[1]], [x[0]]]),
        name="heisenberg",
        parallel_curvature=True,
    )


def su2_demo_bundle() -> ConnectionChartData:
    """SU(2) bundle over S^2(1) with Omega(X_1, X_2) = e_3 in the orthonormal frame."""
    e3 = np.array([0.0, 0.0, 1.0])
    return ConnectionChartData(
        geometry.Sphere(2, 1.0),
        lie.su2(),
        lambda x: np.outer(sphere2_area_potential(x), e3),
        name="su2-demo",
        parallel_curvature=True,
    )


def u2_central_bundle(mix: float = 0.0) -> ConnectionChartData:
    """U(2) bundle over S^2(1); curvature valued in (centre + mix * e_3)."""
    direction = np.array([0.0, 0.0, mix, 1.0])
    return ConnectionChartData(
        geometry.Sphere(2, 1.0),
        lie.u2(),
        lambda x: np.outer(sphere2_area_potential(x), direction),
        name="u2-central" if mix == 0 else f"u2-mixed:{mix:g}",
        parallel_curvature=True,
    )


def su2_poly_bundle() -> ConnectionChartData:
    """su(2) potential A = (x2 e1, x1 e2) over a flat chart; non-parallel curvature."""
    pot = PolynomialPotential(2, 3, (((1.0, (0, 1), 0),), ((1.0, (1, 0), 1),)))
    return ConnectionChartData(geometry.FlatTorus(2), lie.su2(), pot, name="su2-poly")


def quaternionic_hopf_bundle() -> ConnectionChartData:
    """Sp(1) instanton over S^4(1/2); at t=1 the total space is the round unit S^7."""
    base = geometry.Sphere(4, 0.5)
    return ConnectionChartData(
        base, lie.su2(0.5), instanton_potential, name="qhopf", parallel_curvature=True
    )


PRESETS = {
    "flat": flat_bundle,
    "hopf": hopf_bundle,
    "heisenberg": heisenberg_bundle,
    "su2-demo": su2_demo_bundle,
    "su2-poly": su2_poly_bundle,
    "u2-central": u2_central_bundle,
    "qhopf": quaternionic_hopf_bundle,
}


def from_name(spec: str) -> ConnectionChartData:
    """Named connections: the keys of ``PRESETS`` or ``"pkl:k:l"``."""
    spec = spec.strip()
    if spec.startswith("pkl:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad pkl spec {spec!r}; expected pkl:k:l")
        try:
            return pkl_bundle(float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ValueError(f"bad pkl spec {spec!r}") from exc
    if spec in PRESETS:
        return PRESETS[spec]()
    raise ValueError(f"unknown connection preset {spec!r}")


def polynomial_bundle(base: BaseManifoldModel, algebra: LieAlgebraData, table, name="polynomial"):
    pot = PolynomialPotential.from_table(table, base.dim_n, algebra.dim_r)
    return ConnectionChartData(base, algebra, pot, name=name)

