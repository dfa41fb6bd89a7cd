import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ancolab import lie

ALGEBRAS = [lie.abelian(1), lie.abelian(3), lie.su2(), lie.so3(), lie.u2(), lie.su2(0.5),
            lie.direct_sum(lie.su2(), lie.so3())]

vec3 = st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3).map(np.array)


def test_su2_brackets_cyclic():
    L = lie.su2()
    e = np.eye(3)
    assert np.allclose(lie.bracket(L, e[0], e[1]), e[2])
    assert np.allclose(lie.bracket(L, e[1], e[2]), e[0])
    assert np.allclose(lie.bracket(L, e[2], e[0]), e[1])


def test_abelian_bracket_vanishes():
    L = lie.abelian(1)
    assert lie.bracket(L, [2.0], [-5.0]) == pytest.approx([0.0])


def test_bracket_dimension_mismatch():
    with pytest.raises(ValueError):
        lie.bracket(lie.su2(), [1.0, 0.0], [0.0, 1.0, 0.0])


@pytest.mark.parametrize("L", ALGEBRAS, ids=lambda L: L.name)
def test_constructors_validate(L):
    d = lie.validate(L)
    assert d["passed"]
    assert max(d["antisymmetry"], d["total_antisymmetry"], d["jacobi"]) <= 1e-12


def test_validate_reports_constructed_defect():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = 1.0
    d = lie.validate(lie.LieAlgebraData("broken", c))
    assert not d["passed"]
    assert d["antisymmetry"] == pytest.approx(2.0)


@settings(max_examples=60, deadline=None)
@given(vec3, vec3, vec3, st.floats(-2, 2))
def test_bracket_bilinear_antisymmetric_adinvariant(u, v, w, s):
    L = lie.su2()
    br = lambda a, b: lie.bracket(L, a, b)
    assert np.max(np.abs(br(u, u))) <= 1e-12
    assert np.max(np.abs(br(u, v) + br(v, u))) <= 1e-12
    assert np.max(np.abs(br(s * u + w, v) - s * br(u, v) - br(w, v))) <= 1e-12
    # b([u, v], w) = b(u, [v, w])
    assert abs(br(u, v) @ w - u @ br(v, w)) <= 1e-12


@pytest.mark.parametrize("L, dim", [(lie.su2(), 3), (lie.abelian(1), 0), (lie.u2(), 3), (lie.abelian(4), 0)])
def test_commutator_dimensions(L, dim):
    S = lie.commutator_subalgebra(L)
    assert S.dim == dim
    assert S.dim + lie.orthogonal_complement(S).dim == L.dim_r


def test_u2_complement_is_centre():
    L = lie.u2()
    comm = lie.commutator_subalgebra(L)
    centre = lie.orthogonal_complement(comm)
    assert centre.dim == 1
    assert abs(abs(centre.basis_vectors[0, 3]) - 1.0) < 1e-12
    assert np.max(np.abs(comm.basis_vectors @ centre.basis_vectors.T)) < 1e-12
    # the centre brackets trivially with everything
    for e in np.eye(4):
        assert np.max(np.abs(lie.bracket(L, centre.basis_vectors[0], e))) < 1e-12


def test_complements_of_extremes():
    zero = lie.Subspace(3, np.zeros((0, 3)))
    full = lie.orthogonal_complement(zero)
    assert full.dim == 3
    assert lie.orthogonal_complement(full).dim == 0


def test_su2_sectional_curvature_quarter():
    L = lie.su2()
    e = np.eye(3)
    assert lie.biinvariant_curvature(L, e[0], e[1], e[1], e[0]) == pytest.approx(0.25)
    assert np.all(lie.curvature_tensor(lie.abelian(3)) == 0)


@pytest.mark.parametrize("L", [lie.su2(), lie.u2(), lie.so3(2.0)], ids=lambda L: L.name)
def test_curvature_tensor_symmetries(L):
    R = lie.curvature_tensor(L)
    assert np.max(np.abs(R + R.transpose(1, 0, 2, 3))) <= 1e-10
    assert np.max(np.abs(R + R.transpose(0, 1, 3, 2))) <= 1e-10
    assert np.max(np.abs(R - R.transpose(2, 3, 0, 1))) <= 1e-10
    assert np.max(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3))) <= 1e-10


def test_curvature_pointwise_matches_tensor_on_random_inputs():
    L = lie.su2()
    rng = np.random.default_rng(3)
    R = lie.curvature_tensor(L)
    for _ in range(20):
        u, v, w, z = rng.normal(size=(4, 3))
        val = lie.biinvariant_curvature(L, u, v, w, z)
        assert val == pytest.approx(np.einsum("abcd,a,b,c,d->", R, u, v, w, z), abs=1e-12)
        assert abs(val + lie.biinvariant_curvature(L, v, u, w, z)) <= 1e-10
        bianchi = val + lie.biinvariant_curvature(L, v, w, u, z) + lie.biinvariant_curvature(L, w, u, v, z)
        assert abs(bianchi) <= 1e-10


def test_from_name():
    assert lie.from_name("abelian:2").dim_r == 2
    assert lie.from_name("su2").name == lie.su2().name
    assert lie.from_name("sum:su2+abelian:1").dim_r == 4
    with pytest.raises(ValueError):
        lie.from_name("e8")
