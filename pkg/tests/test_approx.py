import numpy as np
import pytest

from freeholo.approx import (
    certify_error,
    choose_truncation,
    close_under_direct_sums,
    expand_polynomial,
    in_dictionary_hull,
    select_covering_delta,
)
from freeholo.errors import NoCover
from freeholo.freepoly import (
    FreePoly,
    GradedPoint,
    PolyMatrix,
    eval_poly_matrix,
)
from freeholo.mat import op_norm
from freeholo.ncpoint import point_direct_sum
from freeholo.realize import Realization, eval_direct
from freeholo.sampling import point_in_shrunk_domain, rng_from_seed

UNIT_DISK = PolyMatrix.from_poly(FreePoly.letter(1, 1))
SHIFT = Realization(UNIT_DISK, 1, 1, 1, np.array([[0.0, 1.0], [1.0, 0.0]]))


def mobius(a):
    s = np.sqrt(1.0 - abs(a) ** 2)
    return Realization(
        UNIT_DISK, 1, 1, 1, np.array([[a, s], [s, -np.conj(a)]], dtype=complex)
    )


def scalars(*vals):
    return [GradedPoint.scalars([v]) for v in vals]


def test_cover_single_candidate():
    sel = select_covering_delta(scalars(0.5, 0.2), [UNIT_DISK])
    assert sel.index == 0
    assert sel.radius == pytest.approx(0.5)
    assert sel.t == pytest.approx(1.5)


def test_cover_elimination():
    tight = PolyMatrix.from_poly(FreePoly.letter(1, 1).scale(4.0))
    sel = select_covering_delta(scalars(0.5, 0.2), [tight, UNIT_DISK])
    assert sel.index == 1
    assert sel.radius == pytest.approx(0.5)


def test_cover_tie_breaks_to_first():
    sel = select_covering_delta(scalars(0.5), [UNIT_DISK, UNIT_DISK])
    assert sel.index == 0


def test_cover_failure():
    with pytest.raises(NoCover):
        select_covering_delta(scalars(1.2), [UNIT_DISK])
    with pytest.raises(NoCover):
        select_covering_delta([], [UNIT_DISK])
    with pytest.raises(NoCover):
        select_covering_delta(scalars(0.5), [])


def test_closure_defeats_partial_covers():
    # each candidate houses one point, neither houses the direct sum
    d = 2
    da = PolyMatrix.from_poly(FreePoly.letter(d, 1))
    db = PolyMatrix.from_poly(FreePoly.letter(d, 2))
    pa = GradedPoint.scalars([0.5, 3.0])  # inside da only
    pb = GradedPoint.scalars([3.0, 0.5])  # inside db only
    assert select_covering_delta([pa], [da, db]).index == 0
    assert select_covering_delta([pb], [da, db]).index == 1
    closed = close_under_direct_sums([pa, pb], level_cap=2)
    with pytest.raises(NoCover):
        select_covering_delta(closed, [da, db])


def test_closure_contains_pairwise_sums():
    pts = scalars(0.1, 0.2)
    closed = close_under_direct_sums(pts, level_cap=2)
    assert all(p.n <= 2 for p in closed)
    want = point_direct_sum(pts[0], pts[1])
    assert any(
        p.n == 2 and np.allclose(p.mats[0], want.mats[0]) for p in closed
    )
    # closure at the cap is stable
    again = close_under_direct_sums(closed, level_cap=2)
    assert len(again) == len(closed)


def test_certify_error_hand_value():
    # t = 2, K = 10: 2^-12 / (1 - 1/2) = 2^-11
    assert certify_error(SHIFT, 10, 2.0) == pytest.approx(2.0**-11)
    # larger t shrinks the bound
    assert certify_error(SHIFT, 10, 4.0) < certify_error(SHIFT, 10, 2.0)
    with pytest.raises(ValueError):
        certify_error(SHIFT, 10, 1.0)
    with pytest.raises(ValueError):
        certify_error(SHIFT, -1, 2.0)


def test_choose_truncation_minimal():
    t = 1.5
    for tol in (1e-3, 1e-6, 1e-9):
        k = choose_truncation(tol, t)
        assert certify_error(SHIFT, k, t) <= tol
        if k > 0:
            assert certify_error(SHIFT, k - 1, t) > tol


def test_expand_shift_is_exact_letter():
    poly = expand_polynomial(SHIFT, 7)
    assert poly.words() == [(1,)]
    np.testing.assert_allclose(poly.terms[(1,)], [[1.0]], atol=1e-15)


def test_expand_mobius_taylor_coefficients():
    # (a + x)(1 + a x)^(-1) = a + (1-a^2)(x - a x^2 + a^2 x^3 - ...), a = 0.5
    poly = expand_polynomial(mobius(0.5), 2)
    coeff = {w: complex(poly.terms[w][0, 0]) for w in poly.words()}
    assert coeff[()] == pytest.approx(0.5)
    assert coeff[(1,)] == pytest.approx(0.75)
    assert coeff[(1, 1)] == pytest.approx(-0.375)
    assert coeff[(1, 1, 1)] == pytest.approx(0.1875)


def test_expand_constant_when_b_is_zero():
    j1 = np.eye(2, dtype=complex)
    j1[1, 1] = -1.0
    r = Realization(UNIT_DISK, 1, 1, 1, j1)  # A = 1, B = 0, C = 0, D = -1
    poly = expand_polynomial(r, 4)
    assert poly.words() == [()]
    np.testing.assert_allclose(poly.terms[()], [[1.0]], atol=1e-15)


def test_expansion_error_within_certificate():
    r = mobius(0.3 + 0.2j)
    t = 1.5
    k = choose_truncation(1e-4, t)
    bound = certify_error(r, k, t)
    poly = expand_polynomial(r, k)
    rng = rng_from_seed(20)
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(10):
            x = point_in_shrunk_domain(rng, UNIT_DISK, n, t)
            dev = op_norm(poly.eval(x) - eval_direct(r, x))
            worst = max(worst, dev)
    assert worst <= bound + 1e-9


def test_expansion_band_homogeneity():
    # the order-(k+1) band evaluates no larger than ||delta(x)||^(k+2)
    r = mobius(0.4)
    rng = rng_from_seed(21)
    for k in (0, 1, 3):
        band = expand_polynomial(r, k + 1) - expand_polynomial(r, k)
        for n in (1, 2):
            x = point_in_shrunk_domain(rng, UNIT_DISK, n, 1.4)
            r0 = op_norm(eval_poly_matrix(UNIT_DISK, x))
            assert op_norm(band.eval(x)) <= r0 ** (k + 2) + 1e-10


def test_dictionary_hull():
    half = PolyMatrix.from_poly(FreePoly.letter(1, 1).scale(0.5))
    sample = scalars(0.4, 0.7)
    dictionary = [half, UNIT_DISK]
    assert in_dictionary_hull(GradedPoint.scalars([0.3]), sample, dictionary)
    assert not in_dictionary_hull(GradedPoint.scalars([1.5]), sample, dictionary)
    # nothing in the dictionary contains the sample: hull is everything
    tight = PolyMatrix.from_poly(FreePoly.letter(1, 1).scale(10.0))
    assert in_dictionary_hull(GradedPoint.scalars([5.0]), sample, [tight])
