"""Seeded random generators for points, polynomials, and realizations.

Everything here is driven by an explicit ``numpy.random.Generator`` so that
reports and tests are reproducible bit for bit from a seed.
"""

from __future__ import annotations

import numpy as np

from . import mat
from .errors import OutsideDomain, ShapeMismatch
from .freepoly import FreePoly, GradedPoint, PolyMatrix, eval_poly_matrix
from .ncpoint import DEFAULT_MARGIN, in_gdelta, point_direct_sum
from .realize import Realization


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def random_matrix(rng, n: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n)


def random_graded_point(rng, d: int, n: int, scale: float = 1.0) -> GradedPoint:
    return GradedPoint([random_matrix(rng, n, scale) for _ in range(d)])


def random_unitary(rng, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    # fix the phase ambiguity so the distribution is Haar
    return q * (np.diag(r) / np.abs(np.diag(r)))


def haar_isometry(rng, rows: int, cols: int) -> np.ndarray:
    if rows < cols:
        raise ShapeMismatch("an isometry needs rows >= cols")
    return random_unitary(rng, rows)[:, :cols]


def random_invertible(rng, n: int, max_cond: float = 50.0, tries: int = 64) -> np.ndarray:
    for _ in range(tries):
        s = np.eye(n) + 0.6 * random_matrix(rng, n)
        if mat.cond(s) <= max_cond:
            return s
    raise RuntimeError("could not draw a well-conditioned similarity")


def random_free_poly(
    rng, d: int, max_degree: int = 3, n_terms: int = 4, scale: float = 1.0
) -> FreePoly:
    terms = {}
    for _ in range(n_terms):
        length = int(rng.integers(0, max_degree + 1))
        word = tuple(int(v) for v in rng.integers(1, d + 1, size=length))
        coeff = scale * (rng.standard_normal() + 1j * rng.standard_normal())
        terms[word] = terms.get(word, 0j) + coeff
    return FreePoly(d, terms)


def point_inside_gdelta(
    rng,
    delta: PolyMatrix,
    n: int,
    scale: float = 1.0,
    margin: float = DEFAULT_MARGIN,
    target: float = 0.9,
    max_tries: int = 200,
) -> GradedPoint:
    """Draw a random point and shrink it toward zero until strictly inside.

    Needs the constant part of the grid to sit inside already (norm of the
    value at the zero tuple under ``target``); otherwise rejection would be
    the only option and this helper refuses instead of looping forever.
    """
    zero = GradedPoint([np.zeros((1, 1))] * delta.d)
    base = mat.op_norm(eval_poly_matrix(delta, zero))
    if base >= target:
        raise OutsideDomain(
            f"grid constant term has norm {base:.6f}, cannot shrink into the domain"
        )
    for _ in range(max_tries):
        x = random_graded_point(rng, delta.d, n, scale)
        for _ in range(60):
            nrm = mat.op_norm(eval_poly_matrix(delta, x))
            if nrm < target and in_gdelta(delta, x, margin).inside:
                return x
            x = GradedPoint([0.7 * m for m in x.mats])
    raise OutsideDomain("failed to sample a point inside the domain")


def point_in_shrunk_domain(
    rng, delta: PolyMatrix, n: int, t: float, scale: float = 1.0, max_tries: int = 200
) -> GradedPoint:
    """Sample with ``||delta(x)|| <= 1/t`` strictly (for shrunk closed sets)."""
    target = (1.0 / t) * 0.999 if np.isfinite(t) else 0.0
    zero = GradedPoint([np.zeros((1, 1))] * delta.d)
    if mat.op_norm(eval_poly_matrix(delta, zero)) > max(target, 1e-12):
        raise OutsideDomain("grid constant term already exceeds the shrunk radius")
    for _ in range(max_tries):
        x = random_graded_point(rng, delta.d, n, scale)
        for _ in range(80):
            if mat.op_norm(eval_poly_matrix(delta, x)) <= target:
                return x
            x = GradedPoint([0.7 * m for m in x.mats])
    raise OutsideDomain("failed to sample inside the shrunk domain")


def random_realization(rng, delta: PolyMatrix, dim_k1: int, dim_k2: int, mult: int) -> Realization:
    """Haar-random isometric colligation over the given grid.

    The codomain must be at least as large as the domain
    (``dim_k rows/cols`` bookkeeping), which holds for any square grid with
    ``dim_k1 <= dim_k2``.
    """
    dom = dim_k1 + mult * delta.rows
    cod = dim_k2 + mult * delta.cols
    if cod < dom:
        raise ShapeMismatch("codomain too small for an isometric colligation")
    j1 = random_unitary(rng, dom) if cod == dom else haar_isometry(rng, cod, dom)
    return Realization(delta=delta, dim_k1=dim_k1, dim_k2=dim_k2, mult=mult, j1=j1)


def perturbations_near(
    rng,
    base: GradedPoint,
    domain_contains,
    count: int,
    spread: float = 0.5,
    include_sums: bool = True,
    max_tries: int = 400,
) -> list:
    """Points inside a membership predicate, clustered around a base point.

    Draws ``base + t E`` with random directions (and, when requested, the
    analogous perturbations of ``base (+) base``), shrinking t until the
    predicate accepts. Useful for exploring certified neighborhoods.
    """
    out = []
    tries = 0
    while len(out) < count and tries < max_tries:
        tries += 1
        seed_pt = base
        if include_sums and tries % 3 == 0:
            seed_pt = point_direct_sum(base, base)
        n = seed_pt.n
        step = spread
        direction = [random_matrix(rng, n) for _ in range(seed_pt.d)]
        for _ in range(40):
            cand = GradedPoint(
                [m + step * e for m, e in zip(seed_pt.mats, direction)]
            )
            if domain_contains(cand):
                out.append(cand)
                break
            step *= 0.5
    if len(out) < count:
        raise OutsideDomain(
            f"only {len(out)} of {count} perturbations landed inside the domain"
        )
    return out
