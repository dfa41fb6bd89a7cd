import warnings

import numpy as np
import pytest

from ancolab import bundle, geometry, lie, oracle

X = np.array([0.3, -0.4])


def _poly(algebra, table, base=None):
    return bundle.polynomial_bundle(base or geometry.FlatTorus(2), algebra, table)


def test_abelian_linear_potential_has_constant_curvature():
    C = _poly(lie.abelian(1), [[], [{"coeff": 1.0, "powers": [1, 0], "generator": 0}]])
    for x in (X, np.array([2.0, 1.5])):
        om = bundle.curvature_form(C, x).coord
        assert om[0, 1] == pytest.approx([1.0])
        assert om[1, 0] == pytest.approx([-1.0])


def test_flat_connection_has_zero_curvature():
    om = bundle.curvature_form(bundle.flat_bundle(3, lie.su2()), np.array([0.1, 0.2, 0.3])).coord
    assert np.all(om == 0)


def test_su2_structure_equation_by_hand():
    C = bundle.su2_poly_bundle()
    for x1, x2 in ((0.3, 0.7), (-1.2, 0.4)):
        om = bundle.curvature_form(C, np.array([x1, x2])).coord[0, 1]
        assert np.allclose(om, [-1.0, 1.0, x1 * x2], atol=1e-8)


def test_frame_version_matches_frame_change():
    C = bundle.from_name("pkl:1:2")
    x = C.base.sample_points(1, np.random.default_rng(2))[0]
    cf = bundle.curvature_form(C, x)
    f = geometry.orthonormal_frame_at(C.base, x)
    assert np.max(np.abs(cf.frame - np.einsum("mna,mi,nj->ija", cf.coord, f, f))) <= 1e-8
    assert np.max(np.abs(cf.coord + cf.coord.transpose(1, 0, 2))) <= 1e-12


def test_boundary_proximity_is_rejected():
    with pytest.raises(geometry.DomainError):
        bundle.curvature_form(bundle.su2_demo_bundle(), np.array([3.0, 0.0]))


def test_non_smooth_potential_warns():
    base = geometry.FlatTorus(2)
    C = bundle.ConnectionChartData(base, lie.abelian(1), lambda x: np.array([[0.0], [abs(x[0]) ** 1.5]]))
    with pytest.warns(UserWarning, match="non-smooth"):
        bundle.curvature_form(C, np.array([1e-5, 0.2]))


@pytest.mark.parametrize("name", ["flat", "hopf", "heisenberg", "pkl:1:2", "pkl:3:5"])
def test_abelian_criterion_holds_exactly(name):
    C = bundle.from_name(name)
    rec = bundle.anco_criterion(C, C.base.sample_points(4, np.random.default_rng(0)))
    assert rec["holds"] and rec["max_violation"] == 0.0


def test_su2_demo_criterion_fails_with_unit_violation():
    C = bundle.su2_demo_bundle()
    rec = bundle.anco_criterion(C, [X, np.array([0.1, 0.2])])
    assert not rec["holds"]
    assert rec["max_violation"] == pytest.approx(1.0, abs=1e-8)


def test_u2_central_holds_and_mixed_fails():
    pts = [X, np.array([0.5, 0.1])]
    assert bundle.anco_criterion(bundle.u2_central_bundle(), pts)["holds"]
    assert not bundle.anco_criterion(bundle.u2_central_bundle(0.3), pts)["holds"]


def test_empty_sample_list_is_an_input_error():
    with pytest.raises(ValueError):
        bundle.anco_criterion(bundle.hopf_bundle(), [])


def test_criterion_is_scale_invariant():
    pts = [X]
    for s in (0.5, 1.0, 3.0):
        C = bundle.ConnectionChartData(geometry.Sphere(2), lie.su2(s),
                                       lambda x: np.outer(bundle.sphere2_area_potential(x), [0, 0, 1.0]))
        assert not bundle.anco_criterion(C, pts)["holds"]
        D = bundle.ConnectionChartData(geometry.Sphere(2), lie.direct_sum(lie.su2(s), lie.abelian(1)),
                                       lambda x: np.outer(bundle.sphere2_area_potential(x), [0, 0, 0, 1.0]))
        assert bundle.anco_criterion(D, pts)["holds"]


@pytest.mark.parametrize("C, zero1, zero2", [
    (bundle.hopf_bundle(), True, False),
    (bundle.su2_demo_bundle(), False, True),
    (bundle.u2_central_bundle(0.4), False, False),
])
def test_quotient_split(C, zero1, zero2):
    q = bundle.quotient_split(C, np.array([0.2, -0.1]))
    assert np.max(np.abs(q["omega1"] + q["omega2"] - q["omega"])) <= 1e-12
    assert np.max(np.abs(np.einsum("ija,ija->ij", q["omega1"], q["omega2"]))) <= 1e-12
    assert (np.max(np.abs(q["omega1"])) <= 1e-10) == zero1
    assert (np.max(np.abs(q["omega2"])) <= 1e-10) == zero2
    holds = bundle.anco_criterion(C, [np.array([0.2, -0.1])])["holds"]
    assert holds == zero1


def test_metric_gt_frame():
    C = bundle.heisenberg_bundle()
    assert np.array_equal(bundle.metric_gt_frame(bundle.CanonicalVariationMetric(C, 1.0), X), np.eye(3))
    assert np.allclose(bundle.metric_gt_frame(bundle.CanonicalVariationMetric(C, 0.1), X),
                       np.diag([1, 1, 0.01]))
    with pytest.raises(ValueError):
        bundle.CanonicalVariationMetric(C, 0.0)


@pytest.mark.parametrize("name", ["hopf", "su2-demo", "qhopf", "pkl:1:2"])
def test_metric_gt_frame_matches_oracle_frame(name):
    C = bundle.from_name(name)
    x = C.base.sample_points(1, np.random.default_rng(1))[0]
    for t in (1.0, 0.3):
        F = oracle.TrivializedMetricField(C, t)
        p = F.point(x, 0.2 * np.ones(C.r))
        E = F.frame(p)
        E[:, C.n:] *= t  # canonical vertical fields, not the g^t-normalised ones
        pulled = E.T @ F.metric(p) @ E
        assert np.max(np.abs(pulled - bundle.metric_gt_frame(bundle.CanonicalVariationMetric(C, t), x))) <= 1e-10


@pytest.mark.parametrize("C", [bundle.su2_poly_bundle(),
                               _poly(lie.so3(), [[{"coeff": 0.5, "powers": [0, 2], "generator": 2}],
                                                 [{"coeff": 1.0, "powers": [1, 1], "generator": 0},
                                                  {"coeff": -0.3, "powers": [0, 0], "generator": 1}]])],
                         ids=["su2-poly", "so3-poly"])
def test_bianchi_identity_polynomial(C):
    for x in (X, np.array([1.1, 0.6])):
        assert bundle.bianchi_defect(C, x) <= 1e-4


def test_polynomial_table_validation():
    with pytest.raises(ValueError, match="rows"):
        _poly(lie.abelian(1), [[]])
    with pytest.raises(ValueError, match="generator"):
        _poly(lie.abelian(1), [[], [{"coeff": 1.0, "powers": [0, 0], "generator": 2}]])


def test_preset_lookup():
    assert bundle.from_name("pkl:3:5").notes["euler_class"] == [3.0, 5.0]
    for bad in ("pkl:1", "pkl:a:b", "nope"):
        with pytest.raises(ValueError):
            bundle.from_name(bad)


def test_presets_are_smooth_on_samples():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for name in list(bundle.PRESETS) + ["pkl:1:2"]:
            C = bundle.from_name(name)
            for x in C.base.sample_points(3, np.random.default_rng(9)):
                assert bundle.curvature_form(C, x).fd_discrepancy <= 1e-6
