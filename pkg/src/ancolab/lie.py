"""Compact Lie algebras with bi-invariant metrics, given by structure constants.

Every algebra is stored in a basis that is orthonormal for its bi-invariant
metric ``b``, so ``b`` is the identity and all pairings are dot products.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RANK_TOL = 1e-10
VALIDATE_TOL = 1e-12


@dataclass(frozen=True)
class LieAlgebraData:
    """Structure constants ``C[a, b, c]`` with ``[E_a, E_b] = sum_c C[a, b, c] E_c``.

    ``group_diameter`` is the diameter of the compact group used with this
    algebra (at the metric encoded by the constants); it feeds diameter bounds.
    """

    name: str
    structure_constants: np.ndarray
    group_diameter: float = 0.0
    center_hint: tuple[int, ...] = field(default=())

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise ValueError(f"structure constants must be r x r x r, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)

    @property
    def dim_r(self) -> int:
        return self.structure_constants.shape[0]

    def ad(self, u) -> np.ndarray:
        """Matrix of ``ad_u`` acting on coordinate vectors."""
        u = _check_vec(self, u)
        # ad_u(v)_c = sum_ab u_a v_b C[a,b,c]
        return np.einsum("a,abc->cb", u, self.structure_constants)

    def __repr__(self):
        return f"LieAlgebraData({self.name!r}, r={self.dim_r})"


@dataclass(frozen=True)
class Subspace:
    """Orthonormal basis (rows) of a subspace of R^ambient_dim."""

    ambient_dim: int
    basis_vectors: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis_vectors, dtype=float).reshape(-1, self.ambient_dim)
        b.setflags(write=False)
        object.__setattr__(self, "basis_vectors", b)

    @property
    def dim(self) -> int:
        return self.basis_vectors.shape[0]

    def projector(self) -> np.ndarray:
        return self.basis_vectors.T @ self.basis_vectors

    def project(self, v) -> np.ndarray:
        """Orthogonal projection along the last axis of ``v``."""
        return np.asarray(v, dtype=float) @ self.projector()


def _check_vec(L: LieAlgebraData, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (L.dim_r,):
        raise ValueError(f"expected a vector of length {L.dim_r} for {L.name}, got shape {u.shape}")
    return u


# constructors ---------------------------------------------------------------

def abelian(r: int, scale: float = 1.0) -> LieAlgebraData:
    """Abelian algebra of the torus T^r; each circle has length 2*pi*scale."""
    if r < 1:
        raise ValueError("abelian algebra needs r >= 1")
    return LieAlgebraData(
        name=f"abelian:{r}",
        structure_constants=np.zeros((r, r, r)),
        group_diameter=float(np.pi * scale * np.sqrt(r)),
        center_hint=tuple(range(r)),
    )


def _levi_civita3() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, c] = 1.0
        eps[b, a, c] = -1.0
    return eps


def su2(scale: float = 1.0) -> LieAlgebraData:
    """su(2) with ``[e1, e2] = e3 / scale`` (cyclic), i.e. ``b`` rescaled by ``scale**2``.

    At ``scale=1`` the group SU(2) is a round 3-sphere of radius 2
    (sectional curvature 1/4), diameter ``2*pi``.
    """
    return LieAlgebraData(
        name="su2" if scale == 1.0 else f"su2@{scale:g}",
        structure_constants=_levi_civita3() / scale,
        group_diameter=float(2.0 * np.pi * scale),
    )


def so3(scale: float = 1.0) -> LieAlgebraData:
    """so(3) with rotation generators, ``[L1, L2] = L3``; group SO(3) = RP^3(2)."""
    return LieAlgebraData(
        name="so3" if scale == 1.0 else f"so3@{scale:g}",
        structure_constants=_levi_civita3() / scale,
        group_diameter=float(np.pi * scale),
    )


def direct_sum(first: LieAlgebraData, second: LieAlgebraData) -> LieAlgebraData:
    r1, r2 = first.dim_r, second.dim_r
    c = np.zeros((r1 + r2,) * 3)
    c[:r1, :r1, :r1] = first.structure_constants
    c[r1:, r1:, r1:] = second.structure_constants
    return LieAlgebraData(
        name=f"sum:{first.name}+{second.name}",
        structure_constants=c,
        # product-group distance; quotients (e.g. U(2)) can only shrink it
        group_diameter=float(np.hypot(first.group_diameter, second.group_diameter)),
        center_hint=first.center_hint + tuple(r1 + i for i in second.center_hint),
    )


def u2() -> LieAlgebraData:
    """u(2) as su(2) + R, the centre being the last basis vector."""
    return direct_sum(su2(), abelian(1))


def from_name(spec: str) -> LieAlgebraData:
    """Parse ``"abelian:r"``, ``"su2"``, ``"so3"``, ``"u2"`` or ``"sum:<a>+<b>"``."""
    spec = spec.strip()
    if spec.startswith("sum:"):
        parts = spec[4:].split("+")
        if len(parts) < 2:
            raise ValueError(f"bad algebra spec {spec!r}")
        out = from_name(parts[0])
        for p in parts[1:]:
            out = direct_sum(out, from_name(p))
        return out
    head, _, rest = spec.partition(":")
    if head == "abelian":
        try:
            return abelian(int(rest or "1"))
        except ValueError as exc:
            raise ValueError(f"bad algebra spec {spec!r}") from exc
    if head in ("su2", "so3"):
        scale = float(rest) if rest else 1.0
        return su2(scale) if head == "su2" else so3(scale)
    if head == "u2" and not rest:
        return u2()
    raise ValueError(f"unknown algebra spec {spec!r}")


# operations -----------------------------------------------------------------

def bracket(L: LieAlgebraData, u, v) -> np.ndarray:
    u = _check_vec(L, u)
    v = _check_vec(L, v)
    return np.einsum("abc,a,b->c", L.structure_constants, u, v)


def _span(vectors: np.ndarray, ambient: int) -> Subspace:
    if vectors.size == 0:
        return Subspace(ambient, np.zeros((0, ambient)))
    _, s, vt = np.linalg.svd(vectors, full_matrices=True)
    rank = int(np.sum(s > RANK_TOL))
    return Subspace(ambient, vt[:rank])


def commutator_subalgebra(L: LieAlgebraData) -> Subspace:
    r = L.dim_r
    iu, ju = np.triu_indices(r, k=1)
    rows = L.structure_constants[iu, ju, :]
    return _span(rows.reshape(-1, r), r)


def orthogonal_complement(S: Subspace) -> Subspace:
    n = S.ambient_dim
    if S.dim == 0:
        return Subspace(n, np.eye(n))
    _, s, vt = np.linalg.svd(S.basis_vectors, full_matrices=True)
    rank = int(np.sum(s > RANK_TOL))
    return Subspace(n, vt[rank:])


def biinvariant_curvature(L: LieAlgebraData, u, v, w, z) -> float:
    """R(u, v, w, z) = -1/4 b([u, v], [w, z]); so R(u, v, v, u) = |[u, v]|^2 / 4."""
    return -0.25 * float(bracket(L, u, v) @ bracket(L, w, z))


def curvature_tensor(L: LieAlgebraData) -> np.ndarray:
    """All components R[a, b, c, d] of the bi-invariant curvature in the basis."""
    c = L.structure_constants
    return -0.25 * np.einsum("abe,cde->abcd", c, c)


def validate(L: LieAlgebraData) -> dict:
    c = L.structure_constants
    anti = float(np.max(np.abs(c + c.transpose(1, 0, 2)), initial=0.0))
    total = float(np.max(np.abs(c + c.transpose(0, 2, 1)), initial=0.0))
    jac = (
        np.einsum("abe,ecd->abcd", c, c)
        + np.einsum("bce,ead->abcd", c, c)
        + np.einsum("cae,ebd->abcd", c, c)
    )
    jacobi = float(np.max(np.abs(jac), initial=0.0))
    return {
        "name": L.name,
        "antisymmetry": anti,
        "total_antisymmetry": total,
        "jacobi": jacobi,
        "passed": max(anti, total, jacobi) <= VALIDATE_TOL,
    }
