import numpy as np
import pytest

from freeholo.errors import OutsideDomain, ShapeMismatch
from freeholo.freepoly import FreePoly, PolyMatrix, eval_poly_matrix
from freeholo.mat import isometry_defect, op_norm
from freeholo.ncpoint import in_gdelta
from freeholo.sampling import (
    haar_isometry,
    perturbations_near,
    point_in_shrunk_domain,
    point_inside_gdelta,
    random_free_poly,
    random_invertible,
    random_realization,
    random_unitary,
    rng_from_seed,
)

UNIT_DISK = PolyMatrix.from_poly(FreePoly.letter(1, 1))


def test_rng_determinism():
    a = rng_from_seed(42).standard_normal(5)
    b = rng_from_seed(42).standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_random_unitary_and_isometry():
    rng = rng_from_seed(0)
    u = random_unitary(rng, 5)
    assert isometry_defect(u) < 1e-12
    assert isometry_defect(u.conj().T) < 1e-12
    v = haar_isometry(rng, 6, 3)
    assert v.shape == (6, 3)
    assert isometry_defect(v) < 1e-12


def test_random_invertible_condition():
    rng = rng_from_seed(1)
    for n in (1, 2, 4):
        s = random_invertible(rng, n)
        assert np.linalg.cond(s) <= 50.0


def test_random_free_poly_degree():
    rng = rng_from_seed(2)
    p = random_free_poly(rng, 3, max_degree=2)
    assert p.d == 3
    assert p.degree() <= 2


def test_point_inside_gdelta():
    rng = rng_from_seed(3)
    for n in (1, 2, 4):
        x = point_inside_gdelta(rng, UNIT_DISK, n)
        assert x.n == n
        assert in_gdelta(UNIT_DISK, x).inside


def test_point_inside_rejects_bad_constant():
    shifted = PolyMatrix.from_poly(FreePoly.letter(1, 1) + 2.0)
    with pytest.raises(OutsideDomain):
        point_inside_gdelta(rng_from_seed(4), shifted, 1)


def test_point_in_shrunk_domain():
    rng = rng_from_seed(5)
    t = 1.5
    for n in (1, 3):
        x = point_in_shrunk_domain(rng, UNIT_DISK, n, t)
        assert op_norm(eval_poly_matrix(UNIT_DISK, x)) <= 1.0 / t


def test_random_realization_isometric():
    rng = rng_from_seed(6)
    r = random_realization(rng, UNIT_DISK, 2, 2, 3)
    assert isometry_defect(r.j1) < 1e-12
    with pytest.raises(ShapeMismatch):
        random_realization(rng, PolyMatrix.column([FreePoly.letter(1, 1)] * 3), 1, 1, 2)


def test_perturbations_near_stay_inside():
    rng = rng_from_seed(7)
    base = point_inside_gdelta(rng, UNIT_DISK, 2)

    def contains(p):
        return in_gdelta(UNIT_DISK, p).inside

    pts = perturbations_near(rng, base, contains, count=12)
    assert len(pts) == 12
    assert all(contains(p) for p in pts)
    # sums double the level when requested
    levels = {p.n for p in pts}
    assert 2 in levels and 4 in levels
