import numpy as np
import pytest

from ancolab import bundle, engine, geometry, lie, oracle

PRESETS = ["flat", "hopf", "heisenberg", "pkl:1:1", "pkl:1:2", "pkl:3:5", "su2-demo", "su2-poly", "u2-central", "qhopf"]


def _field(name, t=1.0):
    C = bundle.from_name(name)
    x = C.base.sample_points(1, np.random.default_rng(0))[0]
    F = oracle.TrivializedMetricField(C, t)
    return C, x, F, F.point(x)


def test_flat_christoffels_and_riemann_vanish():
    F = oracle.BaseMetricField(geometry.FlatTorus(3))
    p = np.array([0.1, 0.2, 0.3])
    assert np.max(np.abs(oracle.christoffel(F, p))) <= 1e-10
    assert np.max(np.abs(oracle.riemann(F, p))) <= 1e-8
    assert np.all(np.abs(oracle.operator_matrix(F, p)) <= 1e-8)


def test_sphere_conformal_christoffels():
    # g = phi^2 delta: Gamma^k_ij = d_i(ln phi) delta_jk + d_j(ln phi) delta_ik - d_k(ln phi) delta_ij
    S = geometry.Sphere(2)
    x = np.array([0.4, -0.7])
    dl = -2 * x / (1 + x @ x)
    I = np.eye(2)
    expect = np.einsum("i,jk->kij", dl, I) + np.einsum("j,ik->kij", dl, I) - np.einsum("k,ij->kij", dl, I)
    assert np.max(np.abs(oracle.christoffel(oracle.BaseMetricField(S), x) - expect)) <= 1e-6


def test_product_has_no_mixed_christoffels():
    P = geometry.product([geometry.Sphere(2), geometry.ComplexProjective(1)])
    gam = oracle.christoffel(oracle.BaseMetricField(P), np.array([0.3, 0.1, -0.2, 0.5]))
    a, b = slice(0, 2), slice(2, 4)
    for blk in (gam[a][:, a, b], gam[a][:, b, a], gam[a][:, b, b], gam[b][:, a, a], gam[b][:, a, b], gam[b][:, b, a]):
        assert np.max(np.abs(blk)) <= 1e-8


def test_hopf_total_space_is_unit_three_sphere():
    C, x, F, p = _field("hopf")
    w = np.linalg.eigvalsh(oracle.sample(F, p).operator)
    assert np.max(w) - np.min(w) <= 1e-4
    assert np.mean(w) == pytest.approx(1.0, abs=1e-4)


def test_qhopf_total_space_is_unit_seven_sphere():
    C, x, F, p = _field("qhopf")
    w = np.linalg.eigvalsh(oracle.sample(F, p).operator)
    assert np.max(np.abs(w - 1.0)) <= 1e-4


def test_su2_fibre_reproduces_biinvariant_curvature():
    C, x, F, p = _field("su2-demo")
    Rf = oracle.sample(F, p).frame_riemann
    assert np.max(np.abs(Rf[2:, 2:, 2:, 2:] - lie.curvature_tensor(C.algebra))) <= 1e-4


def test_base_only_matches_model_operator():
    M = geometry.ComplexProjective(2)
    x = np.array([0.3, -0.1, 0.2, 0.4])
    fd = oracle.operator_matrix(oracle.BaseMetricField(M), x)
    assert np.max(np.abs(fd - geometry.curvature_operator_matrix(M, x))) <= 1e-4


def test_pkl_collapse_min_eigenvalue_near_zero():
    C, x, F, p = _field("pkl:1:2", t=2.0**-10)
    assert abs(engine.min_eigenvalue(oracle.operator_matrix(F, p))) <= 1e-2


def test_ill_conditioned_metric_raises():
    C = bundle.hopf_bundle()
    F = oracle.TrivializedMetricField(C, 1e-5, fiber_scale=1.0)
    with pytest.raises(oracle.NumericError):
        oracle.christoffel(F, F.point([0.1, 0.1]))


@pytest.mark.parametrize("name", PRESETS)
def test_riemann_symmetries_and_step_halving(name):
    C, x, F, p = _field(name)
    assert max(oracle.sample(F, p).defects.values()) <= 1e-4
    sh = oracle.step_halving_order(F, p)
    assert sh["exact"] or sh["order"] >= 1.8


def test_second_order_stencil_still_converges():
    C, x, F, p = _field("pkl:3:5")
    sh = oracle.step_halving_order(F, p, h=2e-2, order=2)
    assert 1.8 <= sh["order"] <= 2.2
    with pytest.raises(ValueError):
        oracle.riemann(F, p, order=3)


def test_step_halving_flags_exact_stencils():
    for name in ("flat", "heisenberg"):
        C, x, F, p = _field(name)
        sh = oracle.step_halving_order(F, p)
        assert sh["exact"] and sh["order"] is None


def test_fit_quadratic_recovers_coefficients():
    ts = np.array([1.0, 0.5, 0.25, 0.1])
    fit = oracle.fit_quadratic(ts, 2 - 3 * ts + 0.5 * ts**2)
    assert float(fit["c0"]) == pytest.approx(2.0)
    assert float(fit["c1"]) == pytest.approx(-3.0)
    assert fit["residual"] <= 1e-12
    with pytest.raises(ValueError):
        oracle.fit_quadratic([1.0, 0.5], [0.0, 0.0])


def _family(rep, name):
    return next(f for f in rep["families"] if f["family"] == name)


@pytest.mark.parametrize("name", ["hopf", "pkl:1:2", "su2-demo", "su2-poly", "qhopf", "heisenberg", "u2-central"])
def test_compare_blocks_passes(name):
    C, x, F, p = _field(name)
    rep = oracle.compare_blocks(C, x)
    assert rep["passed"], rep["failed_families"]
    assert _family(rep, "vanishing")["max_abs"] <= 1e-4


def test_compare_blocks_su2_demo_details():
    C = bundle.su2_demo_bundle()
    rep = oracle.compare_blocks(C, np.array([0.2, 0.1]))
    assert _family(rep, "vanishing")["max_abs"] <= 1e-4
    # vv leading coefficient is the bi-invariant operator, 1/4 |[e_a, e_b]|^2 on the diagonal
    assert _family(rep, "vv")["c0_error"] <= 1e-4
    assert np.allclose(np.diag(engine.group_operator(C.algebra)), 0.25)


def test_compare_blocks_pkl_mixed_leading_zero():
    C = bundle.from_name("pkl:1:2")
    x = C.base.sample_points(1, np.random.default_rng(3))[0]
    fam = _family(oracle.compare_blocks(C, x), "mixed")
    assert fam["c0_error"] <= 1e-4


def test_compare_blocks_injected_sign_error_is_surfaced():
    C = bundle.hopf_bundle()
    x = np.array([0.3, -0.2])
    rep = oracle.compare_blocks(C, x, inject_sign_error=True)
    assert rep["failed_families"] == ["hh"]
    with pytest.raises(oracle.VerificationError, match="hh"):
        oracle.compare_blocks(C, x, inject_sign_error=True, strict=True)


def test_calibration_is_consistent():
    cal = oracle.calibrate_conventions()
    assert cal["curvature_sign"] == 1.0
    assert cal["gamma_bracket_sign"] == cal["engine_gamma_sign"] == engine.CALIBRATED_GAMMA_SIGN
    assert cal["gamma_bracket_ratio"] == pytest.approx(1.0, abs=1e-3)
    assert cal["literal_bracket_sign"] == bundle.BRACKET_SIGN


@pytest.mark.parametrize("name", ["hopf", "su2-demo", "su2-poly", "qhopf"])
def test_vertical_horizontal_scaling(name):
    C, x, F, p = _field(name)
    rec = oracle.vertical_horizontal_scaling(C, x)
    assert rec["ver_relative_spread"] <= 1e-3
    assert rec["hor_over_t2_relative_spread"] <= 1e-3


def test_oneill_derivative_on_su2_demo():
    rec = oracle.oneill_derivative_check(bundle.su2_demo_bundle(), np.array([0.2, 0.1]))
    assert rec["c0_error"] <= 1e-3
    assert np.max(np.abs(rec["predicted"])) > 0.1


def test_oneill_tensor_matches_half_curvature():
    # A_X Y = 1/2 ver[X, Y]; on the Hopf bundle |A_{X1} X2| = |Omega_12| / 2 in g^t units
    C = bundle.hopf_bundle()
    x = np.array([0.3, -0.2])
    F = oracle.TrivializedMetricField(C, 1.0)
    p = F.point(x)
    A = oracle.oneill_tensor(F, p)
    E = F.frame(p)
    om = bundle.curvature_form(C, x).frame[0, 1, 0]
    v = np.einsum("cab,a,b->c", A, E[:, 0], E[:, 1])
    assert np.sqrt(v @ F.metric(p) @ v) == pytest.approx(0.5 * abs(om), rel=1e-4)
