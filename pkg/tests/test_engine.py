import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ancolab import bundle, engine, geometry, lie, oracle

X = np.array([0.2, 0.1])


def cubic_min_root(S):
    """Smallest eigenvalue of a symmetric 3x3 matrix by the trigonometric cubic formula."""
    q = np.trace(S) / 3
    p1 = S[0, 1] ** 2 + S[0, 2] ** 2 + S[1, 2] ** 2
    p2 = sum((S[i, i] - q) ** 2 for i in range(3)) + 2 * p1
    p = math.sqrt(p2 / 6)
    B = (S - q * np.eye(3)) / p
    r = np.clip(np.linalg.det(B) / 2, -1.0, 1.0)
    phi = math.acos(r) / 3
    return q + 2 * p * math.cos(phi + 2 * math.pi / 3)


def test_basis_ordering_and_size():
    b = engine.ScaledBivectorBasis(3, 2)
    assert b.hh == [(0, 1), (0, 2), (1, 2)]
    assert b.vv == [(0, 1)]
    assert b.mixed == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
    assert b.size == math.comb(5, 2)
    assert len(b.labels()) == b.size


def test_blocks_vanish_for_abelian_and_central():
    for C in (bundle.hopf_bundle(), bundle.from_name("pkl:1:2"), bundle.u2_central_bundle()):
        x = C.base.sample_points(1, np.random.default_rng(0))[0]
        assert np.max(np.abs(engine.block_A(C, x))) <= 1e-12
        assert np.max(np.abs(engine.block_B(C, x)), initial=0.0) <= 1e-12


def _brute_force_A(C, x):
    om = bundle.curvature_form(C, x).frame * engine.CALIBRATED_GAMMA_SIGN
    n, r = C.n, C.r
    A = np.zeros((n * r, n * r))
    for i in range(n):
        for a in range(r):
            for j in range(n):
                for b in range(r):
                    Eab = lie.bracket(C.algebra, np.eye(r)[a], np.eye(r)[b])
                    A[i * r + a, j * r + b] = -0.25 * om[i, j] @ Eab
    return A


def test_su2_demo_A_entries():
    C = bundle.su2_demo_bundle()
    A = engine.block_A(C, X)
    assert np.allclose(A, _brute_force_A(C, X), atol=1e-9)
    # only the pairings of e3 with [e1, e2] = e3 survive: +-1/4 on (h0 v0, h1 v1) and (h0 v1, h1 v0)
    expect = np.zeros((6, 6))
    expect[0, 4] = expect[4, 0] = -0.25
    expect[1, 3] = expect[3, 1] = 0.25
    assert np.allclose(A, expect, atol=1e-9)
    assert np.array_equal(A, A.T)


def test_su2_demo_B_and_proportionality():
    C = bundle.su2_demo_bundle()
    B = engine.block_B(C, X)
    assert B.shape == (1, 3)
    assert np.allclose(B, [[-0.5, 0.0, 0.0]], atol=1e-9)
    A = engine.block_A(C, X).reshape(2, 3, 2, 3)
    for (i, j), row in zip(combinations(range(2), 2), B):
        for (a, b), val in zip(combinations(range(3), 2), row):
            assert val == pytest.approx(2 * A[i, a, j, b], abs=1e-12)


@pytest.mark.parametrize("name", ["hopf", "pkl:1:2", "su2-demo", "su2-poly", "qhopf", "u2-central", "heisenberg"])
def test_A_zero_iff_B_zero(name):
    C = bundle.from_name(name)
    for x in C.base.sample_points(3, np.random.default_rng(4)):
        A, B = engine.block_A(C, x), engine.block_B(C, x)
        assert (np.max(np.abs(A), initial=0) <= 1e-12) == (np.max(np.abs(B), initial=0) <= 1e-12)


def test_flat_assembly_is_zero():
    C = bundle.flat_bundle(3, lie.abelian(2))
    for t in (1.0, 0.01):
        assert np.all(engine.assemble_truncated(C, np.zeros(3), t).matrix == 0)


def test_abelian_over_s2_at_t1():
    C = bundle.ConnectionChartData(geometry.Sphere(2), lie.abelian(1), lambda x: np.zeros((2, 1)))
    M = engine.assemble_truncated(C, X, 1.0).matrix
    assert np.allclose(M, np.diag([1.0, 0.0, 0.0]), atol=1e-12)


def test_su2_demo_truncated_stays_negative_and_converges():
    C = bundle.su2_demo_bundle()
    lam_A = engine.min_eigenvalue(engine.block_A(C, X))
    lams = [engine.min_eigenvalue(engine.assemble_truncated(C, X, t).matrix) for t in engine.DEFAULT_T_GRID]
    assert max(lams) < -1e-2
    assert abs(lams[-1] - lam_A) < 1e-6


def test_vv_block_psd():
    for L in (lie.su2(), lie.so3(2.0), lie.u2()):
        assert np.linalg.eigvalsh(engine.group_operator(L))[0] >= -1e-12


def test_min_eigenvalue_basics():
    assert engine.min_eigenvalue(np.eye(5)) == pytest.approx(1.0)
    assert engine.min_eigenvalue(np.diag([-1.0, 2.0, 7.0])) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        engine.min_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_min_eigenvalue_closed_form_cubic():
    rng = np.random.default_rng(7)
    for _ in range(50):
        G = rng.normal(size=(3, 3))
        S = G + G.T
        assert abs(engine.min_eigenvalue(S) - cubic_min_root(S)) <= 1e-10


def test_eigenvalues_match_lapack():
    rng = np.random.default_rng(8)
    G = rng.normal(size=(45, 45))
    S = G + G.T
    assert np.allclose(engine.eigenvalues(S), np.linalg.eigvalsh(S), atol=1e-10)


def test_skew_block_zero_and_demo():
    z = engine.skew_block_negativity(np.zeros((6, 6)), 2, 3)
    assert z["trace"] == 0 and z["lambda_min"] == 0 and z["is_zero"]
    d = engine.skew_block_negativity(engine.block_A(bundle.su2_demo_bundle(), X), 2, 3)
    assert abs(d["trace"]) <= 1e-12 and d["lambda_min"] < 0 and not d["is_zero"]


def test_skew_block_rejects_structure_violation():
    with pytest.raises(ValueError, match="double-skew"):
        engine.skew_block_negativity(np.eye(6), 2, 3)
    with pytest.raises(ValueError, match="shape"):
        engine.skew_block_negativity(np.zeros((5, 5)), 2, 3)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 4), st.integers(2, 3), st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.3, 1.0]))
def test_skew_block_lemma_property(n, r, seed, density):
    A = engine.random_double_skew(n, r, np.random.default_rng(seed), density)
    d = engine.skew_block_negativity(A, n, r)
    assert abs(d["trace"]) <= 1e-12
    assert (d["lambda_min"] < 0) == (d["frobenius"] > 1e-10)


def test_diam_bound():
    C = bundle.hopf_bundle()
    assert engine.diam_bound(C, 1e-12) == pytest.approx(C.base.diameter())
    assert engine.diam_bound(C, 1.0) == pytest.approx(C.base.diameter() + math.pi)


def test_diam_bound_exceeds_sampled_hopf_distances():
    # at t = 1 the Hopf total space is the unit S^3 with diameter pi
    C = bundle.hopf_bundle()
    F = oracle.TrivializedMetricField(C, 1.0)
    bound = engine.diam_bound(C, 1.0)
    d = oracle.sampled_distance(F, F.point([0.0, 0.0], [0.0]), F.point([2.5, 0.0], [1.5]), segments=16, iterations=20)
    assert d <= bound
    assert d <= math.pi + 1e-2


def test_t_sweep_validation_and_flat():
    C = bundle.flat_bundle()
    with pytest.raises(ValueError):
        engine.t_sweep(C, [np.zeros(2)], [0.5, 1.0])
    with pytest.raises(ValueError):
        engine.t_sweep(C, [np.zeros(2)], [1.0, 0.0])
    reps = engine.t_sweep(C, [np.zeros(2)], engine.DEFAULT_T_GRID)
    assert all(r.anco_quantity == 0 and r.criterion_verdict for r in reps)


def test_t_sweep_pkl_collapses():
    C = bundle.from_name("pkl:1:2")
    pts = C.base.sample_points(2, np.random.default_rng(0))
    reps = engine.t_sweep(C, pts)
    assert abs(reps[-1].anco_quantity) < 0.05
    diag = engine.sweep_diagnostics(reps)
    assert diag["tail_abs_anco_monotone_nonincreasing"]
    # O(t) convergence: log-log slope of |lambda_min| at least about one
    assert diag["tail_lambda_min_rate"] > 0.9


def test_t_sweep_su2_demo_bounded_away():
    C = bundle.su2_demo_bundle()
    reps = engine.t_sweep(C, [X])
    assert max(r.anco_quantity for r in reps if r.t <= 2**-6) < -0.5
    assert not reps[0].criterion_verdict


def test_truncated_matches_oracle_as_t_shrinks():
    C = bundle.su2_demo_bundle()
    ts = oracle.VERIFY_T_GRID
    diffs = []
    for t in ts:
        F = oracle.TrivializedMetricField(C, t)
        diffs.append(np.linalg.norm(oracle.operator_matrix(F, F.point(X)) - engine.assemble_truncated(C, X, t).matrix, 2))
    fit = oracle.fit_quadratic(ts, diffs)
    assert abs(fit["c0"]) <= 1e-3
