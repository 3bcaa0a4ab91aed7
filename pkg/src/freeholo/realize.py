"""Transfer-function realizations over a polynomial grid domain.

A realization packages an isometric block matrix

    J1 = [[A, B],
          [C, D]]  :  K1 (+) (mult * I)  ->  K2 (+) (mult * J)

together with an I-by-J grid delta. Its value at a level-n point x inside
``{ ||delta|| < 1 }`` is

    Omega(x) = (I_n (x) A) + (I_n (x) B) Delta(x) (I - (I_n (x) D) Delta(x))^{-1} (I_n (x) C)

where Delta(x) is the multiplicity-promoted evaluation of delta in the fixed
layout level (x) multiplicity (x) grid-index (see ``TENSOR_CONVENTION``).
Isometry of J1 forces ``||Omega(x)|| <= 1`` strictly inside the domain.

The fitting routine recovers such a J1 from finite model sample data by
matching two families of structured vectors with equal Gram matrices and
completing the resulting partial isometry deterministically. When the
codomain is too small for any isometry (for instance row-valued functions,
where k1 exceeds k2), the grid is padded with zero columns first; padding
never moves the domain and only widens the codomain side of J1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mat
from .errors import (
    BelowFloor,
    GramMismatch,
    OutsideDomain,
    RankOverflow,
    ShapeMismatch,
    TermBlowup,
)
from .freepoly import (
    GradedPoint,
    PolyMatrix,
    delta_pad_columns,
    eval_poly_matrix,
    eval_poly_matrix_promoted,
)
from .model import ModelSampleSet, model_residual
from .ncpoint import DEFAULT_MARGIN, in_gdelta

# Layout contract for every tensor product in this module: the level index
# is the outermost factor, then the multiplicity, then the grid index, and
# promoted blocks act as kron(I_n, block).
TENSOR_CONVENTION = "level-outer/mult-mid/grid-inner v1"

ISOMETRY_TOL = 1e-8


@dataclass(frozen=True)
class Realization:
    """Isometric colligation (A, B, C, D) over a grid delta.

    ``j1`` has shape ``(dim_k2 + mult * delta.cols, dim_k1 + mult * delta.rows)``
    and must be an isometry within ``ISOMETRY_TOL``.
    """

    delta: PolyMatrix
    dim_k1: int
    dim_k2: int
    mult: int
    j1: np.ndarray

    def __init__(self, delta, dim_k1, dim_k2, mult, j1):
        j1 = np.array(mat.as_array(j1), dtype=np.complex128)
        rows_want = dim_k2 + mult * delta.cols
        cols_want = dim_k1 + mult * delta.rows
        if j1.shape != (rows_want, cols_want):
            raise ShapeMismatch(
                f"J1 shape {j1.shape} does not match ({rows_want}, {cols_want}) "
                f"from k1={dim_k1}, k2={dim_k2}, mult={mult}, grid {delta.rows}x{delta.cols}"
            )
        defect = mat.isometry_defect(j1)
        if defect > ISOMETRY_TOL:
            raise ShapeMismatch(
                f"J1 is not an isometry: defect {defect:.3e} exceeds {ISOMETRY_TOL:.0e}"
            )
        j1.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "dim_k1", int(dim_k1))
        object.__setattr__(self, "dim_k2", int(dim_k2))
        object.__setattr__(self, "mult", int(mult))
        object.__setattr__(self, "j1", j1)

    # -- block accessors ---------------------------------------------------

    @property
    def block_a(self) -> np.ndarray:
        return self.j1[: self.dim_k2, : self.dim_k1]

    @property
    def block_b(self) -> np.ndarray:
        return self.j1[: self.dim_k2, self.dim_k1 :]

    @property
    def block_c(self) -> np.ndarray:
        return self.j1[self.dim_k2 :, : self.dim_k1]

    @property
    def block_d(self) -> np.ndarray:
        return self.j1[self.dim_k2 :, self.dim_k1 :]

    def isometry_defect(self) -> float:
        return mat.isometry_defect(self.j1)

    def to_json(self) -> dict:
        from .mat import CMatrix

        return {
            "delta": self.delta.to_json(),
            "dimK1": self.dim_k1,
            "dimK2": self.dim_k2,
            "mult": self.mult,
            "J1": CMatrix(self.j1).to_json(),
        }

    @classmethod
    def from_json(cls, obj) -> "Realization":
        from .mat import CMatrix

        return cls(
            delta=PolyMatrix.from_json(obj["delta"]),
            dim_k1=int(obj["dimK1"]),
            dim_k2=int(obj["dimK2"]),
            mult=int(obj["mult"]),
            j1=CMatrix.from_json(obj["J1"]).array,
        )


def _require_inside(r: Realization, x: GradedPoint, margin: float):
    verdict = in_gdelta(r.delta, x, margin)
    if not verdict.inside:
        raise OutsideDomain(
            f"point is {verdict.status}: ||delta(x)|| = {verdict.norm:.9f}"
        )
    return verdict


def resolvent_leg(r: Realization, x: GradedPoint, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """``v(x) = (I - (I_n (x) D) Delta(x))^{-1} (I_n (x) C)``.

    This is the model column generated by the realization: applying it to
    any input data produces model data with a machine-scale residual.
    """
    _require_inside(r, x, margin)
    n = x.n
    big_delta = eval_poly_matrix_promoted(r.delta, x, r.mult)
    d_tilde = np.kron(np.eye(n), r.block_d)
    c_tilde = np.kron(np.eye(n), r.block_c)
    lhs = np.eye(d_tilde.shape[0], dtype=np.complex128) - d_tilde @ big_delta
    return np.linalg.solve(lhs, c_tilde)


def eval_direct(r: Realization, x: GradedPoint, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """Evaluate the realization by solving the resolvent equation directly.

    Requires the point strictly inside the domain (by ``margin``); there the
    resolvent is uniformly invertible and the value is a strict contraction
    up to rounding.
    """
    _require_inside(r, x, margin)
    n = x.n
    big_delta = eval_poly_matrix_promoted(r.delta, x, r.mult)
    a_tilde = np.kron(np.eye(n), r.block_a)
    b_tilde = np.kron(np.eye(n), r.block_b)
    d_tilde = np.kron(np.eye(n), r.block_d)
    c_tilde = np.kron(np.eye(n), r.block_c)
    lhs = np.eye(d_tilde.shape[0], dtype=np.complex128) - d_tilde @ big_delta
    v = np.linalg.solve(lhs, c_tilde)
    return a_tilde + b_tilde @ (big_delta @ v)


@dataclass(frozen=True)
class NeumannResult:
    """Certified truncation: ``||value - exact|| <= bound`` is guaranteed."""

    value: np.ndarray
    k: int
    bound: float


def eval_neumann(
    r: Realization,
    x: GradedPoint,
    tol: float = 1e-8,
    margin: float = DEFAULT_MARGIN,
    max_terms: int = 200_000,
) -> NeumannResult:
    """Evaluate by geometric series with an a priori certified tail bound.

    With ``r0 = ||delta(x)|| < 1`` the k-th series term is bounded by
    ``r0**(k+1)``, so truncating after term K leaves a tail of at most
    ``r0**(K+2) / (1 - r0)``. K is chosen minimal (and nonnegative) with
    that bound at most ``tol``. If a power of the loop operator vanishes
    exactly (nilpotent feedback, e.g. D = 0) the sum stops early and the
    reported bound is zero.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _require_inside(r, x, margin)
    n = x.n
    r0 = mat.op_norm(eval_poly_matrix(r.delta, x))
    if r0 > 0.0:
        target = tol * (1.0 - r0)
        k_plan = max(0, math.ceil(math.log(target) / math.log(r0)) - 2)
        while k_plan > 0 and r0 ** (k_plan + 1) <= target:
            k_plan -= 1
        while r0 ** (k_plan + 2) > target:
            k_plan += 1
            if k_plan > max_terms:
                raise TermBlowup(
                    f"certified truncation needs more than {max_terms} terms "
                    f"(||delta(x)|| = {r0:.6f})"
                )
    else:
        k_plan = 0
    if k_plan > max_terms:
        raise TermBlowup(
            f"certified truncation needs {k_plan} terms, over the cap {max_terms} "
            f"(||delta(x)|| = {r0:.6f})"
        )
    big_delta = eval_poly_matrix_promoted(r.delta, x, r.mult)
    a_tilde = np.kron(np.eye(n), r.block_a)
    b_tilde = np.kron(np.eye(n), r.block_b)
    c_tilde = np.kron(np.eye(n), r.block_c)
    d_tilde = np.kron(np.eye(n), r.block_d)
    value = a_tilde.copy()
    x_cur = big_delta @ c_tilde  # Delta (D Delta)^k C, starting at k = 0
    k_used = 0
    exact = False
    for k in range(k_plan + 1):
        value = value + b_tilde @ x_cur
        k_used = k
        if k < k_plan:
            x_cur = big_delta @ (d_tilde @ x_cur)
            if not np.any(x_cur):
                exact = True
                break
    bound = 0.0 if exact or r0 == 0.0 else float(r0 ** (k_used + 2) / (1.0 - r0))
    return NeumannResult(value=value, k=k_used, bound=bound)


# -- fitting -----------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """A fitted realization plus the diagnostics of the fit."""

    realization: Realization
    gram_deviation: float
    rank: int
    train_residual: float
    padded_cols: int
    holdout_indices: tuple
    holdout_deviation: float | None


def _pad_u_rows(u_val: np.ndarray, n: int, mult: int, j_old: int, pad: int) -> np.ndarray:
    """Insert zero rows for the padded grid columns in every (level, mult) slot."""
    if pad == 0:
        return u_val
    j_new = j_old + pad
    out = np.zeros((n * mult * j_new, u_val.shape[1]), dtype=np.complex128)
    for slot in range(n * mult):
        out[slot * j_new : slot * j_new + j_old, :] = u_val[
            slot * j_old : (slot + 1) * j_old, :
        ]
    return out


def fit_lurking_isometry(
    samples: ModelSampleSet,
    gram_rtol: float = 1e-6,
    rank_rtol: float = 1e-8,
    holdout: bool = True,
    pad_cap: int = 64,
) -> FitResult:
    """Fit an isometric realization to model sample data.

    For every training point, level-block row k, and basis column, two
    vectors are formed::

        p = [ psi-block ; (Delta u)-block ]   in  C^(k1 + mult*I)
        q = [ phi-block ;        u-block  ]   in  C^(k2 + mult*J)

    The model identity says the two families have equal Gram matrices, so
    some isometry maps each p to its q. The map is recovered on the span of
    the p family by SVD (singular values below ``rank_rtol`` times the
    largest are cut) and completed to a full isometry deterministically.
    If the codomain lacks room, the grid is first padded with zero columns
    (each adds ``mult`` codomain dimensions and leaves the domain of the
    function untouched); more than ``pad_cap`` padded columns raises
    :class:`RankOverflow`.

    A deviation between the Gram matrices above ``gram_rtol`` (relative to
    the largest Gram entry) raises :class:`GramMismatch`: the data cannot
    come from any isometric realization.

    Unless ``holdout=False``, every fifth point (indices 4, 9, ...) is
    reserved, excluded from the fit, and used to report the reproduction
    deviation ``max || Omega(x) psi(x) - phi(x) ||``.
    """
    s = samples
    if len(s) == 0:
        raise ShapeMismatch("cannot fit from zero sample points")
    k1, k2, mult = s.k1_dim, s.k2_dim, s.mult
    i_rows, j_cols = s.delta.rows, s.delta.cols

    deficit = (k1 + mult * i_rows) - (k2 + mult * j_cols)
    pad = -(-deficit // mult) if deficit > 0 else 0
    if pad > pad_cap:
        raise RankOverflow(
            f"isometric completion needs {pad} padded grid columns, cap is {pad_cap}"
        )
    delta = delta_pad_columns(s.delta, pad)
    j_new = j_cols + pad

    reserved = (
        [i for i in range(len(s)) if i % 5 == 4] if holdout and len(s) >= 5 else []
    )
    train = [i for i in range(len(s)) if i not in reserved]
    if not train:
        raise ShapeMismatch("holdout stride reserved every sample point")

    dom_dim = k1 + mult * i_rows
    cod_dim = k2 + mult * j_new
    p_cols = []
    q_cols = []
    for idx in train:
        x = s.points[idx]
        n = x.n
        u_val = _pad_u_rows(s.u[idx], n, mult, j_cols, pad)
        big_delta = eval_poly_matrix_promoted(delta, x, mult)
        du = big_delta @ u_val
        n_cols = s.psi[idx].shape[1]
        for k in range(n):
            psi_rows = s.psi[idx][k * k1 : (k + 1) * k1, :]
            phi_rows = s.phi[idx][k * k2 : (k + 1) * k2, :]
            du_rows = du[k * mult * i_rows : (k + 1) * mult * i_rows, :]
            u_rows = u_val[k * mult * j_new : (k + 1) * mult * j_new, :]
            for col in range(n_cols):
                p_cols.append(np.concatenate([psi_rows[:, col], du_rows[:, col]]))
                q_cols.append(np.concatenate([phi_rows[:, col], u_rows[:, col]]))
    p_mat = np.column_stack(p_cols)
    q_mat = np.column_stack(q_cols)

    gram_p = p_mat.conj().T @ p_mat
    gram_q = q_mat.conj().T @ q_mat
    deviation = float(np.max(np.abs(gram_p - gram_q))) if gram_p.size else 0.0
    scale = max(1.0, float(np.max(np.abs(gram_p)))) if gram_p.size else 1.0
    if deviation > gram_rtol * scale:
        raise GramMismatch(deviation)

    u_l, sing, v_h = np.linalg.svd(p_mat, full_matrices=False)
    if sing.size and sing[0] > 0.0:
        rank = int(np.sum(sing >= rank_rtol * sing[0]))
    else:
        rank = 0
    u_r = u_l[:, :rank]
    if rank:
        y_raw = q_mat @ v_h[:rank, :].conj().T / sing[:rank]
        wy, _, vyh = np.linalg.svd(y_raw, full_matrices=False)
        y_on = wy @ vyh  # polar correction: exactly orthonormal columns
    else:
        y_on = np.zeros((cod_dim, 0), dtype=np.complex128)

    domain_frame = mat.complete_to_isometry(u_r, dom_dim).array
    codomain_frame = mat.complete_to_isometry(y_on, dom_dim).array
    j1 = codomain_frame @ domain_frame.conj().T

    train_residual = (
        float(np.max(np.linalg.norm(j1 @ p_mat - q_mat, axis=0))) if p_cols else 0.0
    )

    fitted = Realization(delta=delta, dim_k1=k1, dim_k2=k2, mult=mult, j1=j1)

    holdout_dev = None
    if reserved:
        worst = 0.0
        for idx in reserved:
            x = s.points[idx]
            omega = eval_direct(fitted, x)
            worst = max(worst, mat.op_norm(omega @ s.psi[idx] - s.phi[idx]))
        holdout_dev = worst

    return FitResult(
        realization=fitted,
        gram_deviation=deviation,
        rank=rank,
        train_residual=train_residual,
        padded_cols=pad,
        holdout_indices=tuple(reserved),
        holdout_deviation=holdout_dev,
    )


# -- corona ------------------------------------------------------------------


@dataclass(frozen=True)
class CoronaSolution:
    """Row function Omega with ``Omega psi = epsilon`` on the input data.

    The solution functions are ``phi_i = Omega_i / epsilon``; they satisfy
    ``sum_i phi_i psi_i = I`` on the data and their row norm is certified by
    ``norm_bound = 1 / epsilon`` (plus rounding) everywhere in the domain.
    """

    omega: Realization
    epsilon: float
    norm_bound: float
    identity_residual: float
    fit: FitResult

    @property
    def n_functions(self) -> int:
        return self.omega.dim_k1

    def phi_values(self, x: GradedPoint) -> list:
        """Values of the solution functions at a point inside the domain."""
        row = eval_direct(self.omega, x) / self.epsilon
        n = x.n
        count = self.n_functions
        return [row[:, [b * count + i for b in range(n)]] for i in range(count)]

    def row_norm_at(self, x: GradedPoint) -> float:
        return mat.op_norm(eval_direct(self.omega, x)) / self.epsilon


def stack_column(psi_vals) -> np.ndarray:
    """Interleave per-function values into one column operator value.

    ``psi_vals`` holds N same-level n-by-n matrices; the result has shape
    (n*N, n) with rows ordered level-outer, function-inner.
    """
    arrays = [mat.as_array(v) for v in psi_vals]
    n = arrays[0].shape[0]
    for a in arrays:
        if a.shape != (n, n):
            raise ShapeMismatch("column entries must be same-level square values")
    stacked = np.stack(arrays, axis=0)  # (N, n, n)
    return stacked.transpose(1, 0, 2).reshape(len(arrays) * n, n)


def corona_solve(
    delta: PolyMatrix,
    points,
    psis,
    epsilon: float,
    u,
    mult: int,
    floor_slack: float = 1e-9,
    gram_rtol: float = 1e-6,
    pad_cap: int = 64,
) -> CoronaSolution:
    """Solve the finite-data corona problem at coercivity level ``epsilon``.

    Parameters
    ----------
    delta : PolyMatrix
        Domain grid; all points must be strictly inside.
    points : sequence of GradedPoint
    psis : sequence of sequences
        ``psis[i][s]`` is the value of the i-th column function at point s.
    epsilon : float
        Coercivity floor; the stacked column must satisfy
        ``psi(x)* psi(x) >= epsilon^2`` at every point (within
        ``floor_slack``), otherwise :class:`BelowFloor` is raised.
    u : sequence
        Model data for ``psi(y)* psi(x) - epsilon^2`` with multiplicity
        ``mult``, e.g. sampled from a realization via
        :func:`freeholo.model.model_from_realization`.
    mult : int
        Multiplicity of the supplied model data.

    Returns a :class:`CoronaSolution` whose row realization satisfies
    ``Omega(x) psi(x) = epsilon I`` on the input points and
    ``||Omega(x)|| <= 1`` everywhere inside, so the solution functions
    ``Omega_i / epsilon`` have certified row norm at most ``1 / epsilon``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    points = list(points)
    n_funcs = len(psis)
    if n_funcs == 0:
        raise ShapeMismatch("need at least one column function")
    columns = []
    for s_idx in range(len(points)):
        col = stack_column([psis[i][s_idx] for i in range(n_funcs)])
        columns.append(col)
        g = col.conj().T @ col - epsilon**2 * np.eye(col.shape[1])
        low = float(np.linalg.eigvalsh((g + g.conj().T) / 2.0)[0])
        if low < -floor_slack:
            raise BelowFloor(
                f"psi*psi drops {-low:.3e} under epsilon^2 at point {s_idx}"
            )
    phis = [epsilon * np.eye(x.n, dtype=np.complex128) for x in points]
    sample = ModelSampleSet(
        delta=delta,
        points=points,
        psi=columns,
        phi=phis,
        u=u,
        h_dim=1,
        k1_dim=n_funcs,
        k2_dim=1,
        mult=mult,
    )
    fit = fit_lurking_isometry(
        sample, gram_rtol=gram_rtol, holdout=False, pad_cap=pad_cap
    )
    worst = 0.0
    for x, col in zip(points, columns):
        lhs = eval_direct(fit.realization, x) @ col
        worst = max(worst, mat.op_norm(lhs - epsilon * np.eye(x.n)) / epsilon)
    return CoronaSolution(
        omega=fit.realization,
        epsilon=float(epsilon),
        norm_bound=1.0 / float(epsilon),
        identity_residual=worst,
        fit=fit,
    )
