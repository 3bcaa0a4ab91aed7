import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeholo.errors import (
    GramMismatch,
    OutsideDomain,
    ShapeMismatch,
)
from freeholo.freepoly import (
    FreePoly,
    GradedPoint,
    PolyMatrix,
    eval_poly_matrix,
)
from freeholo.mat import isometry_defect, op_norm
from freeholo.model import ModelSampleSet, model_from_realization, model_residual
from freeholo.realize import (
    Realization,
    corona_solve,
    eval_direct,
    eval_neumann,
    fit_lurking_isometry,
    resolvent_leg,
    stack_column,
)
from freeholo.sampling import (
    point_inside_gdelta,
    random_free_poly,
    random_realization,
    rng_from_seed,
)

UNIT_DISK = PolyMatrix.from_poly(FreePoly.letter(1, 1))


def mobius(a):
    s = np.sqrt(1.0 - abs(a) ** 2)
    return Realization(
        UNIT_DISK, 1, 1, 1, np.array([[a, s], [s, -np.conj(a)]], dtype=complex)
    )


SHIFT = Realization(UNIT_DISK, 1, 1, 1, np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_realization_validates_shape_and_isometry():
    with pytest.raises(ShapeMismatch):
        Realization(UNIT_DISK, 1, 1, 1, np.eye(3))
    with pytest.raises(ShapeMismatch):
        Realization(UNIT_DISK, 1, 1, 1, 1.1 * np.eye(2))


def test_block_slicing():
    j1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    r = Realization(UNIT_DISK, 1, 1, 1, j1)
    assert r.block_a[0, 0] == 0.0
    assert r.block_b[0, 0] == 1.0
    assert r.block_c[0, 0] == 1.0
    assert r.block_d[0, 0] == 0.0


def test_shift_realization_is_identity_function():
    for seed, n in ((0, 1), (1, 2), (2, 3)):
        x = point_inside_gdelta(rng_from_seed(seed), UNIT_DISK, n)
        np.testing.assert_allclose(eval_direct(SHIFT, x), x.mats[0], atol=1e-12)


def test_mobius_scalar_value():
    # (a + x) / (1 + conj(a) x) at a = 0.5, x = 0.3: 0.8 / 1.15
    r = mobius(0.5)
    val = eval_direct(r, GradedPoint.scalars([0.3]))
    assert val[0, 0] == pytest.approx(0.8 / 1.15, rel=1e-12)


def test_mobius_matrix_value_matches_formula():
    a = 0.4 - 0.2j
    r = mobius(a)
    x = point_inside_gdelta(rng_from_seed(3), UNIT_DISK, 3)
    m = x.mats[0]
    expected = (a * np.eye(3) + m) @ np.linalg.inv(
        np.eye(3) + np.conj(a) * m
    )
    np.testing.assert_allclose(eval_direct(r, x), expected, atol=1e-11)


def test_eval_requires_inside_point():
    with pytest.raises(OutsideDomain):
        eval_direct(SHIFT, GradedPoint.scalars([1.0]))
    with pytest.raises(OutsideDomain):
        eval_direct(SHIFT, GradedPoint.scalars([1.7]))


def test_contractive_on_inside_points():
    rng = rng_from_seed(4)
    for k1, k2, mult in ((1, 1, 1), (2, 2, 2), (1, 2, 3)):
        r = random_realization(rng, UNIT_DISK, k1, k2, mult)
        for n in (1, 2, 3):
            x = point_inside_gdelta(rng, UNIT_DISK, n)
            assert op_norm(eval_direct(r, x)) <= 1.0 + 1e-7


def test_neumann_mobius_truncation_order():
    # scalar x = 0.3, tol 1e-8: smallest K with 0.3^(K+2)/0.7 <= 1e-8 is 14
    r = mobius(0.5)
    res = eval_neumann(r, GradedPoint.scalars([0.3]), tol=1e-8)
    assert res.k == 14
    assert res.bound <= 1e-8
    assert res.bound == pytest.approx(0.3**16 / 0.7, rel=1e-12)
    assert abs(res.value[0, 0] - 0.8 / 1.15) <= res.bound


def test_neumann_deviation_within_bound():
    rng = rng_from_seed(5)
    for trial in range(25):
        d = int(rng.integers(1, 3))
        delta = PolyMatrix.from_poly(
            random_free_poly(rng, d, max_degree=2, n_terms=3, scale=0.4)
        )
        try:
            r = random_realization(rng, delta, 1, 1, int(rng.integers(1, 3)))
            x = point_inside_gdelta(rng, delta, int(rng.integers(1, 4)))
        except OutsideDomain:
            continue
        tol = 10.0 ** -rng.integers(6, 10)
        res = eval_neumann(r, x, tol=tol)
        exact = eval_direct(r, x)
        assert res.bound <= tol
        assert op_norm(res.value - exact) <= res.bound + 1e-12


def test_neumann_nilpotent_early_stop():
    # D = 0 collapses the series after the linear term with a zero bound
    res = eval_neumann(SHIFT, GradedPoint.scalars([0.5]), tol=1e-8)
    assert res.k == 0
    assert res.bound == 0.0
    assert res.value[0, 0] == pytest.approx(0.5)


def test_neumann_zero_point():
    r = mobius(0.3)
    res = eval_neumann(r, GradedPoint.scalars([0.0]), tol=1e-8)
    assert res.bound == 0.0
    assert res.value[0, 0] == pytest.approx(0.3)


def disk_points(seed, levels, radius=0.85):
    rng = rng_from_seed(seed)
    pts = []
    for n in levels:
        while True:
            m = 0.5 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            if np.linalg.norm(m, 2) < radius:
                break
        pts.append(GradedPoint([m]))
    return pts


def test_fit_roundtrip_reproduces_function():
    r = mobius(0.4 + 0.1j)
    pts = disk_points(6, [1, 1, 1, 2, 2, 1, 2, 3])
    fit = fit_lurking_isometry(model_from_realization(r, pts))
    assert fit.gram_deviation < 1e-10
    assert fit.train_residual < 1e-10
    assert fit.holdout_indices == (4,)
    assert fit.holdout_deviation < 1e-10
    assert isometry_defect(fit.realization.j1) < 1e-10
    for x in disk_points(7, [1, 2, 3]):
        np.testing.assert_allclose(
            eval_direct(fit.realization, x), eval_direct(r, x), atol=1e-8
        )


def test_fit_corrupted_data_raises_gram_mismatch():
    r = mobius(0.3)
    pts = disk_points(8, [1, 1, 2, 2, 1, 2])
    s = model_from_realization(r, pts)
    bad_phi = list(s.phi)
    bad_phi[2] = bad_phi[2] + 0.1
    bad = ModelSampleSet(
        s.delta, s.points, s.psi, bad_phi, s.u, s.h_dim, s.k1_dim, s.k2_dim, s.mult
    )
    with pytest.raises(GramMismatch) as ei:
        fit_lurking_isometry(bad)
    assert ei.value.deviation >= 1e-3


def test_fit_no_holdout_uses_all_points():
    r = mobius(0.2)
    pts = disk_points(9, [1, 1, 2, 2, 1])
    fit = fit_lurking_isometry(model_from_realization(r, pts), holdout=False)
    assert fit.holdout_indices == ()
    assert fit.holdout_deviation is None


def test_fit_multi_variable():
    d2 = PolyMatrix([[0.6 * FreePoly.letter(2, 1), 0.6 * FreePoly.letter(2, 2)]])
    rng = rng_from_seed(10)
    r = random_realization(rng, d2, 1, 1, 2)
    pts = [point_inside_gdelta(rng, d2, n) for n in (1, 1, 2, 2, 1, 2, 3, 1)]
    fit = fit_lurking_isometry(model_from_realization(r, pts))
    for n in (1, 2, 3):
        x = point_inside_gdelta(rng, d2, n)
        np.testing.assert_allclose(
            eval_direct(fit.realization, x), eval_direct(r, x), atol=1e-7
        )


def test_resolvent_leg_generates_exact_model():
    r = mobius(0.25)
    x = disk_points(11, [2])[0]
    v = resolvent_leg(r, x)
    omega = eval_direct(r, x)
    big_delta = np.kron(eval_poly_matrix(r.delta, x), np.eye(r.mult))
    lhs = np.eye(2) - omega.conj().T @ omega
    rhs = v.conj().T @ (np.eye(2) - big_delta.conj().T @ big_delta) @ v
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_stack_column_interleaves_levels():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[10.0, 20.0], [30.0, 40.0]])
    stacked = stack_column([a, b])
    assert stacked.shape == (4, 2)
    np.testing.assert_array_equal(stacked[0], a[0])
    np.testing.assert_array_equal(stacked[1], b[0])
    np.testing.assert_array_equal(stacked[2], a[1])
    np.testing.assert_array_equal(stacked[3], b[1])


def corona_inputs(seed, levels, lam=1.0, mult=16):
    # psi1 = x, psi2 = lam(1 - x) never vanish together on the closed disk;
    # the telescoping column u_i = sqrt(1+lam^2) x^(i-1) (c - x) models
    # psi*psi - eps^2 with c = lam^2/(1+lam^2), eps = lam/sqrt(1+lam^2)
    c = lam * lam / (1.0 + lam * lam)
    eps = lam / np.sqrt(1.0 + lam * lam)
    rng = rng_from_seed(seed)
    pts = []
    for n in levels:
        m = 0.4 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        nrm = np.linalg.norm(m, 2)
        if nrm > 0.45:
            m *= 0.95 * 0.45 / nrm
        pts.append(GradedPoint([m]))
    psis = [
        [p.mats[0] for p in pts],
        [lam * (np.eye(p.n) - p.mats[0]) for p in pts],
    ]
    scale = np.sqrt(1.0 + lam * lam)
    us = []
    for p in pts:
        m = p.mats[0]
        blocks = [
            scale
            * np.linalg.matrix_power(m, i)
            @ (c * np.eye(p.n) - m)
            for i in range(mult)
        ]
        us.append(stack_column(blocks))
    return pts, psis, eps, us, mult


def test_corona_two_function_solution():
    pts, psis, eps, us, mult = corona_inputs(12, [1, 1, 1, 2, 2, 1, 2, 3])
    sol = corona_solve(UNIT_DISK, pts, psis, eps, us, mult)
    assert sol.norm_bound == pytest.approx(1.0 / eps, rel=1e-12)
    assert sol.identity_residual < 1e-6
    # solutions keep working at fresh points of every level
    rng = rng_from_seed(13)
    for n in (1, 2, 3):
        m = 0.4 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        nrm = np.linalg.norm(m, 2)
        if nrm > 0.45:
            m *= 0.95 * 0.45 / nrm
        x = GradedPoint([m])
        phis = sol.phi_values(x)
        ident = phis[0] @ m + phis[1] @ (np.eye(n) - m) - np.eye(n)
        assert op_norm(ident) < 1e-6
        assert sol.row_norm_at(x) <= 1.0 / eps + 1e-6


def test_corona_floor_violation_raises():
    from freeholo.errors import BelowFloor

    pts, psis, eps, us, mult = corona_inputs(14, [1, 1, 2, 2, 1])
    with pytest.raises(BelowFloor):
        corona_solve(UNIT_DISK, pts, psis, 3.0, us, mult)


def test_realization_json_roundtrip():
    r = mobius(0.3 - 0.4j)
    again = Realization.from_json(r.to_json())
    assert again.dim_k1 == 1 and again.dim_k2 == 1 and again.mult == 1
    np.testing.assert_allclose(again.j1, r.j1, atol=1e-15)
    x = GradedPoint.scalars([0.2])
    np.testing.assert_allclose(
        eval_direct(again, x), eval_direct(r, x), atol=1e-14
    )


@given(st.integers(0, 2_000))
@settings(max_examples=20, deadline=None)
def test_eval_direct_matches_neumann_random(seed):
    rng = rng_from_seed(seed)
    r = random_realization(rng, UNIT_DISK, 1, 1, int(rng.integers(1, 3)))
    n = int(rng.integers(1, 4))
    x = point_inside_gdelta(rng, UNIT_DISK, n)
    res = eval_neumann(r, x, tol=1e-10)
    assert op_norm(res.value - eval_direct(r, x)) <= res.bound + 1e-12
