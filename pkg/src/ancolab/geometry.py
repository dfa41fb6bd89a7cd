"""Model base manifolds with nonnegative curvature operator.

Curvature convention used throughout the package::

    R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
    R(X, Y, Z, W) = g(R(X, Y)Z, W),        sec(X, Y) = R(X, Y, Y, X)

The curvature operator on bivectors has matrix entries
``<R(e_i ^ e_j), e_k ^ e_l> = R(e_i, e_j, e_l, e_k)`` in an orthonormal frame,
so the unit round sphere gives the identity.
"""
from __future__ import annotations

import math
from functools import cached_property
from itertools import combinations

import numpy as np


class DomainError(ValueError):
    """A chart point lies outside (or too close to the edge of) the chart box."""


def bivector_pairs(n: int) -> list[tuple[int, int]]:
    """Pairs (i, j), i < j, in lexicographic order; position = bivector index."""
    return list(combinations(range(n), 2))


def scaled_bivector_pairs(n: int, r: int) -> list[tuple[int, int]]:
    """Frame pairs for a total space with n horizontal then r vertical frame vectors.

    Order: horizontal pairs (i<j), vertical pairs (a<b), then mixed (i, a).
    """
    hh = list(combinations(range(n), 2))
    vv = list(combinations(range(n, n + r), 2))
    mixed = [(i, n + a) for i in range(n) for a in range(r)]
    return hh + vv + mixed


class BaseManifoldModel:
    """A model base geometry on a single box-shaped chart ``[lo, hi]``."""

    kind = "abstract"

    def __init__(self, dim_n: int, lo, hi, label: str):
        self.dim_n = int(dim_n)
        self.lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.dim_n,)).copy()
        self.hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.dim_n,)).copy()
        self.label = label

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"

    def check_point(self, x, margin: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim_n,):
            raise ValueError(f"{self.label}: expected a point of dimension {self.dim_n}, got {x.shape}")
        if np.any(x < self.lo + margin) or np.any(x > self.hi - margin):
            raise DomainError(f"{self.label}: point {x.tolist()} outside chart box (margin {margin:g})")
        return x

    def metric_at(self, x) -> np.ndarray:
        raise NotImplementedError

    def curvature_at(self, x) -> np.ndarray:
        """Lowered Riemann tensor R_ijkl = R(d_i, d_j, d_k, d_l) in chart coordinates."""
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def sample_points(self, count: int, rng: np.random.Generator, fraction: float = 0.5) -> np.ndarray:
        """Uniform points in the central ``fraction`` of the chart box."""
        mid = 0.5 * (self.lo + self.hi)
        half = 0.5 * fraction * (self.hi - self.lo)
        return mid + half * rng.uniform(-1.0, 1.0, size=(count, self.dim_n))


def _space_form_tensor(g: np.ndarray, curv: float) -> np.ndarray:
    return curv * (np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g))


class Sphere(BaseManifoldModel):
    """Round S^n(radius) in stereographic coordinates, g = 4 r^2 / (1 + |x|^2)^2 dx^2."""

    kind = "sphere"

    def __init__(self, n: int, radius: float = 1.0, box: float = 3.0):
        if n < 1 or radius <= 0:
            raise ValueError("sphere needs n >= 1 and radius > 0")
        super().__init__(n, -box, box, f"sphere:{n}:{radius:g}")
        self.radius = float(radius)

    def conformal_factor(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 2.0 * self.radius / (1.0 + x @ x)

    def metric_at(self, x):
        x = self.check_point(x)
        return self.conformal_factor(x) ** 2 * np.eye(self.dim_n)

    def curvature_at(self, x):
        return _space_form_tensor(self.metric_at(x), 1.0 / self.radius**2)

    def diameter(self):
        return math.pi * self.radius


class FlatTorus(BaseManifoldModel):
    """Flat torus R^n / (side Z)^n in Euclidean coordinates."""

    kind = "flat"

    def __init__(self, n: int, side: float = 1.0, box: float = 10.0):
        super().__init__(n, -box, box, f"flat:{n}:{side:g}")
        self.side = float(side)

    def metric_at(self, x):
        self.check_point(x)
        return np.eye(self.dim_n)

    def curvature_at(self, x):
        self.check_point(x)
        return np.zeros((self.dim_n,) * 4)

    def diameter(self):
        return 0.5 * self.side * math.sqrt(self.dim_n)


class ComplexProjective(BaseManifoldModel):
    """CP^m with the Fubini-Study metric of holomorphic sectional curvature ``c``.

    Real affine-chart coordinates are interleaved, ``(x_1, y_1, ..., x_m, y_m)``
    with ``z_j = x_j + i y_j``, and ``J d/dx_j = d/dy_j``. At ``c = 4`` the
    metric is ``Re(h)`` with ``h = ddbar log(1 + |z|^2)``, so CP^1 = S^2(1/2).
    """

    kind = "cp"

    def __init__(self, m: int, c: float = 4.0, box: float = 3.0):
        if m < 1 or c <= 0:
            raise ValueError("cp needs m >= 1 and c > 0")
        super().__init__(2 * m, -box, box, f"cp:{m}:{c:g}")
        self.m = int(m)
        self.c = float(c)

    def complex_coords(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[0::2] + 1j * x[1::2]

    def hermitian_at(self, x) -> np.ndarray:
        z = self.complex_coords(x)
        q = 1.0 + float(np.vdot(z, z).real)
        h = np.eye(self.m) / q - np.outer(z.conj(), z) / q**2
        return (4.0 / self.c) * h

    def metric_at(self, x):
        x = self.check_point(x)
        h = self.hermitian_at(x)
        g = np.empty((self.dim_n, self.dim_n))
        g[0::2, 0::2] = h.real
        g[1::2, 1::2] = h.real
        g[0::2, 1::2] = h.imag
        g[1::2, 0::2] = -h.imag
        return g

    @cached_property
    def _J(self) -> np.ndarray:
        J = np.zeros((self.dim_n, self.dim_n))
        for j in range(self.m):
            J[2 * j + 1, 2 * j] = 1.0
            J[2 * j, 2 * j + 1] = -1.0
        return J

    def complex_structure_at(self, x) -> np.ndarray:
        self.check_point(x)
        return self._J.copy()

    def kahler_form_at(self, x) -> np.ndarray:
        """omega_ab = g(J d_a, d_b)."""
        g = self.metric_at(x)
        return self._J.T @ g

    def curvature_at(self, x):
        # R(X,Y)Z = c/4 [g(Y,Z)X - g(X,Z)Y + g(JY,Z)JX - g(JX,Z)JY + 2 g(X,JY)JZ]
        g = self.metric_at(x)
        w = self._J.T @ g
        return 0.25 * self.c * (
            np.einsum("jk,il->ijkl", g, g)
            - np.einsum("ik,jl->ijkl", g, g)
            + np.einsum("jk,il->ijkl", w, w)
            - np.einsum("ik,jl->ijkl", w, w)
            + 2.0 * np.einsum("ji,kl->ijkl", w, w)
        )

    def diameter(self):
        return math.pi / math.sqrt(self.c)


class Product(BaseManifoldModel):
    kind = "product"

    def __init__(self, factors):
        factors = list(factors)
        if not factors:
            raise ValueError("product of an empty list of factors")
        dims = [f.dim_n for f in factors]
        super().__init__(
            sum(dims),
            np.concatenate([f.lo for f in factors]),
            np.concatenate([f.hi for f in factors]),
            "product:" + "*".join(f.label for f in factors),
        )
        self.factors = factors
        offsets = np.cumsum([0] + dims)
        self.slices = [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]

    def metric_at(self, x):
        x = self.check_point(x)
        g = np.zeros((self.dim_n, self.dim_n))
        for f, s in zip(self.factors, self.slices):
            g[s, s] = f.metric_at(x[s])
        return g

    def curvature_at(self, x):
        x = self.check_point(x)
        R = np.zeros((self.dim_n,) * 4)
        for f, s in zip(self.factors, self.slices):
            R[s, s, s, s] = f.curvature_at(x[s])
        return R

    def diameter(self):
        return math.sqrt(sum(f.diameter() ** 2 for f in self.factors))


def product(factors) -> BaseManifoldModel:
    factors = list(factors)
    if not factors:
        raise ValueError("product of an empty list of factors")
    if len(factors) == 1:
        return factors[0]
    return Product(factors)


def from_name(spec: str) -> BaseManifoldModel:
    """Parse ``"sphere:n:r"``, ``"cp:m:c"``, ``"flat:n[:side]"`` or ``"product:<a>*<b>"``."""
    spec = spec.strip()
    if spec.startswith("product:"):
        return product(from_name(p) for p in spec[len("product:"):].split("*"))
    parts = spec.split(":")
    try:
        if parts[0] == "sphere" and len(parts) in (2, 3):
            return Sphere(int(parts[1]), float(parts[2]) if len(parts) == 3 else 1.0)
        if parts[0] == "cp" and len(parts) in (2, 3):
            return ComplexProjective(int(parts[1]), float(parts[2]) if len(parts) == 3 else 4.0)
        if parts[0] == "flat" and len(parts) in (2, 3):
            return FlatTorus(int(parts[1]), float(parts[2]) if len(parts) == 3 else 1.0)
    except ValueError as exc:
        raise ValueError(f"bad manifold spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown manifold spec {spec!r}")


# pointwise operations -------------------------------------------------------

def gram_schmidt(g: np.ndarray) -> np.ndarray:
    """Columns: g-orthonormal frame from the coordinate basis, in order."""
    n = g.shape[0]
    frame = np.zeros((n, n))
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for j in range(i):
            v = v - (frame[:, j] @ g @ v) * frame[:, j]
        frame[:, i] = v / math.sqrt(v @ g @ v)
    return frame


def orthonormal_frame_at(M: BaseManifoldModel, x) -> np.ndarray:
    return gram_schmidt(M.metric_at(x))


def frame_tensor(R: np.ndarray, frame: np.ndarray) -> np.ndarray:
    return np.einsum("abcd,ap,bq,cr,ds->pqrs", R, frame, frame, frame, frame, optimize=True)


def operator_from_tensor(Rf: np.ndarray, pairs=None) -> np.ndarray:
    """Curvature-operator matrix from a frame tensor: entry (ij),(kl) = R_ijlk."""
    if pairs is None:
        pairs = bivector_pairs(Rf.shape[0])
    idx = np.array(pairs, dtype=int).reshape(-1, 2)
    i, j = idx[:, 0], idx[:, 1]
    return Rf[i[:, None], j[:, None], j[None, :], i[None, :]]


def curvature_operator_matrix(M: BaseManifoldModel, x) -> np.ndarray:
    Rf = frame_tensor(M.curvature_at(x), orthonormal_frame_at(M, x))
    S = operator_from_tensor(Rf)
    return 0.5 * (S + S.T)


def diameter(M: BaseManifoldModel) -> float:
    return M.diameter()


def riemann_symmetry_defects(R: np.ndarray) -> dict:
    """Max violations of the Riemann symmetries and first Bianchi identity."""
    return {
        "antisym_12": float(np.max(np.abs(R + R.transpose(1, 0, 2, 3)))),
        "antisym_34": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2)))),
        "pair_sym": float(np.max(np.abs(R - R.transpose(2, 3, 0, 1)))),
        "bianchi": float(np.max(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)))),
    }
