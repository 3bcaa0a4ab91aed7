"""Graded point operations and basic free open sets.

A basic free open set is the strict sublevel set ``{x : ||delta(x)|| < 1}``
of a polynomial grid delta, taken at every matrix level at once. Membership
here is three-valued with an explicit margin, because every downstream
certificate needs to know how far inside the point sits.

The module also hosts the structural operations that make a graded function
a *free* function: direct sums, similarity conjugation, envelope membership
(a point presented as a conjugated direct sum of known points), the canonical
extension of function values along such a presentation, the upper triangular
block trick (which contains the difference quotient as its corner), and a
sampling-based checker for the direct-sum and similarity axioms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mat
from .errors import ShapeMismatch
from .freepoly import GradedPoint, PolyMatrix, eval_poly_matrix

DEFAULT_MARGIN = 1e-9


@dataclass(frozen=True)
class Membership:
    """Three-valued membership verdict with the distance to the unit shell.

    ``distance`` is ``1 - ||delta(x)||``: positive inside, negative outside,
    and ``status`` applies the margin band around zero.
    """

    status: str  # "inside" | "boundary" | "outside"
    distance: float
    norm: float
    margin: float

    @property
    def inside(self) -> bool:
        return self.status == "inside"


def in_gdelta(delta: PolyMatrix, x: GradedPoint, margin: float = DEFAULT_MARGIN) -> Membership:
    """Classify ``x`` against ``{ ||delta|| < 1 }`` with a safety margin.

    Points with ``||delta(x)|| < 1 - margin`` are inside, points within
    ``margin`` of the unit shell are boundary, the rest are outside.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    nrm = mat.op_norm(eval_poly_matrix(delta, x))
    dist = 1.0 - nrm
    if nrm < 1.0 - margin:
        status = "inside"
    elif nrm <= 1.0 + margin:
        status = "boundary"
    else:
        status = "outside"
    return Membership(status=status, distance=dist, norm=nrm, margin=margin)


def point_direct_sum(x: GradedPoint, y: GradedPoint) -> GradedPoint:
    """Coordinatewise block diagonal sum, a point at level ``x.n + y.n``."""
    if x.d != y.d:
        raise ShapeMismatch("points disagree on variable count")
    return GradedPoint(
        [mat.direct_sum(a, b).array for a, b in zip(x.mats, y.mats)]
    )


def conjugate(x: GradedPoint, s) -> GradedPoint:
    """Coordinatewise similarity ``s^{-1} x s``."""
    s = mat.as_array(s)
    if s.shape != (x.n, x.n):
        raise ShapeMismatch("similarity size must match the point level")
    s_inv = mat.inv(s).array
    return GradedPoint([s_inv @ m @ s for m in x.mats])


def is_scalar_tuple(x: GradedPoint, tol: float = 1e-12) -> bool:
    """True when every coordinate is a scalar multiple of the identity."""
    for m in x.mats:
        alpha = np.trace(m) / x.n
        if mat.op_norm(m - alpha * np.eye(x.n)) > tol:
            return False
    return True


@dataclass(frozen=True)
class SimilarityWitness:
    """A presentation ``x = s^{-1} (blocks[0] + ... + blocks[k]) s``."""

    blocks: tuple
    s: np.ndarray

    def __init__(self, blocks, s):
        blocks = tuple(blocks)
        if not blocks:
            raise ValueError("witness needs at least one block")
        d = blocks[0].d
        for b in blocks:
            if b.d != d:
                raise ShapeMismatch("blocks disagree on variable count")
        s = np.array(mat.as_array(s), dtype=np.complex128)
        total = sum(b.n for b in blocks)
        if s.shape != (total, total):
            raise ShapeMismatch("similarity size must match the summed block level")
        s.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "s", s)

    @property
    def total_level(self) -> int:
        return int(self.s.shape[0])

    def assembled(self) -> GradedPoint:
        """The conjugated direct sum the witness asserts the point equals."""
        acc = self.blocks[0]
        for b in self.blocks[1:]:
            acc = point_direct_sum(acc, b)
        return conjugate(acc, self.s)


def envelope_member(x: GradedPoint, w: SimilarityWitness, tol: float = 1e-8) -> bool:
    """Does the witness actually present ``x``?

    The comparison tolerance scales with the condition number of the
    similarity, since the presentation itself amplifies errors that way.
    """
    if x.d != w.blocks[0].d or x.n != w.total_level:
        return False
    target = w.assembled()
    kappa = mat.cond(w.s)
    scale = max(1.0, max(mat.op_norm(m) for m in target.mats))
    dev = max(mat.op_norm(a - b) for a, b in zip(x.mats, target.mats))
    return dev <= tol * kappa * scale


def extend_function(f_on_blocks, w: SimilarityWitness, dims: tuple[int, int] = (1, 1)) -> np.ndarray:
    """Extend function values on the blocks to the presented point.

    ``f_on_blocks[k]`` must be the value at ``w.blocks[k]``, a matrix of
    shape ``(n_k * dims[1], n_k * dims[0])`` with the level index outer
    (``dims = (input_dim, output_dim)`` of the operator-valued function,
    both 1 for scalar-valued). The result is the only value at the
    presented point consistent with the direct-sum and similarity axioms:

        (s^{-1} (x) I_out) (f(block_1) + ... + f(block_k)) (s (x) I_in)
    """
    h_dim, k_dim = dims
    values = [mat.as_array(v) for v in f_on_blocks]
    if len(values) != len(w.blocks):
        raise ShapeMismatch("one value per block required")
    for v, b in zip(values, w.blocks):
        if v.shape != (b.n * k_dim, b.n * h_dim):
            raise ShapeMismatch(
                f"value shape {v.shape} does not match level {b.n} with dims {dims}"
            )
    stacked = values[0]
    for v in values[1:]:
        stacked = mat.direct_sum(stacked, v).array
    s_in = np.kron(w.s, np.eye(h_dim))
    s_out_inv = np.kron(mat.inv(w.s).array, np.eye(k_dim))
    return s_out_inv @ stacked @ s_in


def upper_triangular_pair(n_point: GradedPoint, m_point: GradedPoint, c) -> GradedPoint:
    """The block point with coordinates ``[[N_r, N_r C - C M_r], [0, M_r]]``.

    Free functions send it to ``[[f(N), f(N) C - C f(M)], [0, f(M)]]``, which
    is the workhorse identity behind extension and differentiation.
    """
    if n_point.d != m_point.d:
        raise ShapeMismatch("points disagree on variable count")
    c = mat.as_array(c)
    if c.shape != (n_point.n, m_point.n):
        raise ShapeMismatch("coupling block has the wrong shape")
    mats = []
    for a, b in zip(n_point.mats, m_point.mats):
        corner = a @ c - c @ b
        mats.append(np.block([[a, corner], [np.zeros((b.shape[0], a.shape[1])), b]]))
    return GradedPoint(mats)


def triangular_identity_deviation(f, n_point, m_point, c, dims=(1, 1)) -> float:
    """Operator norm gap between ``f`` at the triangular point and the
    predicted block form. Zero (to rounding) for free functions."""
    h_dim, k_dim = dims
    c = mat.as_array(c)
    val = mat.as_array(f(upper_triangular_pair(n_point, m_point, c)))
    fn = mat.as_array(f(n_point))
    fm = mat.as_array(f(m_point))
    c_in = np.kron(c, np.eye(h_dim))
    c_out = np.kron(c, np.eye(k_dim))
    corner = fn @ c_in - c_out @ fm
    zeros = np.zeros((fm.shape[0], fn.shape[1]), dtype=np.complex128)
    predicted = np.block([[fn, corner], [zeros, fm]])
    return mat.op_norm(val - predicted)


def nc_derivative(f, m_point: GradedPoint, direction: GradedPoint, dims=(1, 1)) -> np.ndarray:
    """Directional derivative of a free function.

    Evaluates ``f`` at the level-2n point ``[[M, E], [0, M]]`` and returns
    the (1, 2) corner, which for free functions is exactly the derivative of
    ``f`` at ``M`` in direction ``E``. Any evaluator error (domain, shape,
    singularity) propagates unchanged.
    """
    if m_point.d != direction.d or m_point.n != direction.n:
        raise ShapeMismatch("direction must match the base point in d and level")
    h_dim, k_dim = dims
    n = m_point.n
    mats = []
    for a, e in zip(m_point.mats, direction.mats):
        mats.append(np.block([[a, e], [np.zeros((n, n), dtype=np.complex128), a]]))
    val = mat.as_array(f(GradedPoint(mats)))
    expected = (2 * n * k_dim, 2 * n * h_dim)
    if val.shape != expected:
        raise ShapeMismatch(
            f"evaluator returned shape {val.shape}, expected {expected} at the doubled level"
        )
    return val[: n * k_dim, n * h_dim :]


@dataclass(frozen=True)
class NcAxiomReport:
    """Outcome of sampling-based free function axiom checks.

    Deviations are normalized: direct-sum gaps by the value scale, and
    similarity gaps additionally by the condition number of the conjugating
    matrix, so a single threshold applies to both.
    """

    direct_sum_dev: float
    similarity_dev: float
    triangular_dev: float
    checks: int
    skipped: int
    tol: float

    @property
    def passed(self) -> bool:
        worst = max(self.direct_sum_dev, self.similarity_dev, self.triangular_dev)
        return worst <= self.tol and self.checks > 0


def check_nc_axioms(
    f,
    samples,
    sims=(),
    couplings=(),
    domain=None,
    dims=(1, 1),
    tol: float = 1e-8,
) -> NcAxiomReport:
    """Check the direct-sum and similarity axioms on sample data.

    Parameters
    ----------
    f : callable
        Maps ``GradedPoint`` to a value matrix with the level index outer.
    samples : sequence of GradedPoint
        Points to combine. Direct sums are tested over all ordered pairs,
        the triangular identity over same-level pairs.
    sims : sequence of array_like
        Invertible matrices; each is applied to every sample of matching
        level for the similarity check.
    couplings : sequence of array_like
        Coupling blocks for the triangular identity; square ones of matching
        level are used (defaults to the identity coupling when empty).
    domain : callable, optional
        Predicate on GradedPoint. Combined or conjugated points that leave
        the domain are skipped, not failed.
    dims : pair of int
        (input, output) dimensions of operator-valued values; (1, 1) for
        scalar-valued functions.
    tol : float
        Normalized deviation threshold for ``passed``.
    """
    samples = list(samples)
    h_dim, k_dim = dims
    inside = (lambda p: True) if domain is None else domain
    checks = skipped = 0
    ds_dev = sim_dev = tri_dev = 0.0

    for x in samples:
        for y in samples:
            z = point_direct_sum(x, y)
            if not inside(z):
                skipped += 1
                continue
            fx, fy, fz = mat.as_array(f(x)), mat.as_array(f(y)), mat.as_array(f(z))
            predicted = mat.direct_sum(fx, fy).array
            scale = max(1.0, mat.op_norm(predicted))
            ds_dev = max(ds_dev, mat.op_norm(fz - predicted) / scale)
            checks += 1

    for x in samples:
        for s in sims:
            s = mat.as_array(s)
            if s.shape != (x.n, x.n):
                continue
            kappa = mat.cond(s)
            if not np.isfinite(kappa):
                skipped += 1
                continue
            y = conjugate(x, s)
            if not inside(y):
                skipped += 1
                continue
            fx = mat.as_array(f(x))
            fy = mat.as_array(f(y))
            s_in = np.kron(s, np.eye(h_dim))
            s_out_inv = np.kron(mat.inv(s).array, np.eye(k_dim))
            predicted = s_out_inv @ fx @ s_in
            scale = max(1.0, mat.op_norm(fx)) * kappa
            sim_dev = max(sim_dev, mat.op_norm(fy - predicted) / scale)
            checks += 1

    pool = list(couplings) if len(couplings) else [None]
    for x in samples:
        for y in samples:
            if x.n != y.n:
                continue
            for c in pool:
                c_arr = np.eye(x.n, dtype=np.complex128) if c is None else mat.as_array(c)
                if c_arr.shape != (x.n, y.n):
                    continue
                z = upper_triangular_pair(x, y, c_arr)
                if not inside(z):
                    skipped += 1
                    continue
                dev = triangular_identity_deviation(f, x, y, c_arr, dims=dims)
                scale = max(1.0, (1.0 + mat.op_norm(c_arr)) ** 2)
                tri_dev = max(tri_dev, dev / scale)
                checks += 1

    return NcAxiomReport(
        direct_sum_dev=ds_dev,
        similarity_dev=sim_dev,
        triangular_dev=tri_dev,
        checks=checks,
        skipped=skipped,
        tol=tol,
    )
