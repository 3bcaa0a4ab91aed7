"""Certified polynomial approximation of realized functions.

Given a realization bounded on a grid domain and a finite point set E, a
covering grid is selected whose values stay strictly under 1 on E; shrinking
the domain by a factor t > 1 turns the realization's series into a geometric
one, so truncating it yields a free polynomial with an explicit sup-norm
error bound on the shrunk closed domain. The point set must already contain
the direct sums the caller cares about: a set can sit inside some candidate
pointwise at each level while a direct sum of its members escapes every
candidate, and then no cover exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mat
from .errors import NoCover, TermBlowup
from .freepoly import (
    GradedPoint,
    MatrixPoly,
    PolyMatrix,
    eval_poly_matrix,
)
from .ncpoint import point_direct_sum
from .realize import Realization


@dataclass(frozen=True)
class CoverSelection:
    """Chosen candidate index, its worst value radius on E, and the shrink t."""

    index: int
    radius: float
    t: float


def select_covering_delta(points, candidates) -> CoverSelection:
    """Pick the candidate grid whose worst norm over the points is smallest.

    Requires that worst norm to be strictly under 1 (otherwise
    :class:`NoCover`); ties break to the first index. The shrink factor is
    the midpoint ``t = (1 + 1/r) / 2``, which keeps every point strictly
    inside the shrunk domain ``{ ||t delta|| <= 1 }``.
    """
    points = list(points)
    candidates = list(candidates)
    if not candidates:
        raise NoCover("no candidate grids supplied")
    if not points:
        raise NoCover("no sample points supplied")
    best_idx = None
    best_r = np.inf
    for idx, delta in enumerate(candidates):
        worst = 0.0
        for x in points:
            worst = max(worst, mat.op_norm(eval_poly_matrix(delta, x)))
        if worst < best_r:
            best_r = worst
            best_idx = idx
    if best_r >= 1.0:
        raise NoCover(
            f"best candidate still reaches norm {best_r:.6f} >= 1 on the samples"
        )
    t = float("inf") if best_r == 0.0 else (1.0 + 1.0 / best_r) / 2.0
    return CoverSelection(index=best_idx, radius=float(best_r), t=t)


def close_under_direct_sums(points, level_cap: int = 8) -> list:
    """Add pairwise direct sums until the level cap stops growth.

    The closure is what makes a pointwise cover meaningful; it is taken
    relative to an explicit cap because the full closure is infinite.
    """
    pool = list(points)

    def present(z):
        return any(
            z.n == q.n
            and all(np.array_equal(m1, m2) for m1, m2 in zip(z.mats, q.mats))
            for q in pool
        )

    grew = True
    while grew:
        grew = False
        snapshot = list(pool)
        for a in snapshot:
            for b in snapshot:
                if a.n + b.n > level_cap:
                    continue
                z = point_direct_sum(a, b)
                if not present(z):
                    pool.append(z)
                    grew = True
        if len(pool) > 4096:
            raise TermBlowup("direct-sum closure exceeded 4096 points")
    return pool


def certify_error(r: Realization, k: int, t: float) -> float:
    """Sup-norm tail bound for truncation after homogeneous order k.

    On the closed shrunk domain ``{ ||t delta|| <= 1 }`` the series term of
    order j is bounded by ``(1/t)**(j+1)``, so the tail after k is at most
    ``(1/t)**(k+2) / (1 - 1/t)``. The realization argument fixes the series
    being truncated; the bound itself only uses contractivity of its blocks.
    """
    if t <= 1.0:
        raise ValueError("shrink factor t must exceed 1")
    if k < 0:
        raise ValueError("truncation order must be nonnegative")
    q = 1.0 / t
    return float(q ** (k + 2) / (1.0 - q))


def choose_truncation(tol: float, t: float, k_cap: int = 100_000) -> int:
    """Smallest nonnegative k with :func:`certify_error` at most ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if t <= 1.0:
        raise ValueError("shrink factor t must exceed 1")
    if t == float("inf"):
        return 0
    q = 1.0 / t
    k = 0
    while q ** (k + 2) / (1.0 - q) > tol:
        k += 1
        if k > k_cap:
            raise TermBlowup(f"no truncation under tol={tol} within {k_cap} terms")
    return k


def expand_polynomial(r: Realization, k: int, term_cap: int = 10**6) -> MatrixPoly:
    """Symbolic truncation ``A + sum_{j<=k} B Delta (D Delta)^j C``.

    Returns a free polynomial with k2-by-k1 matrix coefficients whose
    evaluation (level index outer) reproduces the numeric partial sum of the
    realization series exactly, at every level. The grid enters symbolically
    as the multiplicity-promoted block matrix of its entries, so the result
    has degree at most ``(k + 1) * deg(delta)``. Exceeding ``term_cap``
    distinct words raises :class:`TermBlowup`.
    """
    if k < 0:
        raise ValueError("truncation order must be nonnegative")
    d = r.delta.d
    mult, i_rows, j_cols = r.mult, r.delta.rows, r.delta.cols

    # symbolic promoted grid: entry blocks delta_ij (x) I_mult, level implicit
    delta_terms = {}
    for i in range(i_rows):
        for j in range(j_cols):
            for w, c in r.delta.entries[i][j].terms.items():
                block = delta_terms.setdefault(
                    w, np.zeros((mult * i_rows, mult * j_cols), dtype=np.complex128)
                )
                for mu in range(mult):
                    block[mu * i_rows + i, mu * j_cols + j] += c
    delta_sym = MatrixPoly(d, mult * i_rows, mult * j_cols, delta_terms)

    a_sym = MatrixPoly.constant(d, r.block_a)
    b_sym = MatrixPoly.constant(d, r.block_b)
    c_sym = MatrixPoly.constant(d, r.block_c)
    d_sym = MatrixPoly.constant(d, r.block_d)

    acc = a_sym
    leg = delta_sym * c_sym  # Delta (D Delta)^j C, starting at j = 0
    for j in range(k + 1):
        acc = acc + b_sym * leg
        if acc.term_count() > term_cap:
            raise TermBlowup(
                f"expansion reached {acc.term_count()} terms at order {j}, cap {term_cap}"
            )
        if j < k:
            if not leg.term_count():
                break
            leg = delta_sym * (d_sym * leg)
            if not leg.term_count():
                break
    return acc


def in_dictionary_hull(x: GradedPoint, sample, dictionary, slack: float = 0.0) -> bool:
    """Hull membership relative to a dictionary of grids.

    ``x`` belongs to the hull of the sample when every dictionary grid that
    keeps the whole sample inside its closed unit sublevel set also keeps
    ``x`` inside it (with optional slack). Only the supplied dictionary is
    consulted; the hull against all conceivable grids is not computable from
    finite data.
    """
    sample = list(sample)
    for delta in dictionary:
        worst = 0.0
        for p in sample:
            worst = max(worst, mat.op_norm(eval_poly_matrix(delta, p)))
        if worst <= 1.0:
            if mat.op_norm(eval_poly_matrix(delta, x)) > 1.0 + slack:
                return False
    return True
