"""Finite sample data for the positivity identity behind realizations.

A model sample set records, at finitely many points x inside the domain of
a grid delta, three operator values with the level index outer:

* ``psi[s]`` of shape (n*k1, n*h): the column data,
* ``phi[s]`` of shape (n*k2, n*h): the target data,
* ``u[s]`` of shape (n*mult*J, n*h): the model data, J = delta.cols.

The defining identity, checked pairwise at equal levels, is

    psi(y)* psi(x) - phi(y)* phi(x) = u(y)* (I - Delta(y)* Delta(x)) u(x)

with Delta the multiplicity-promoted evaluation of delta. Points at unequal
levels are never compared; the identity only constrains same-level pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mat
from .errors import OutsideDomain, ShapeMismatch
from .freepoly import GradedPoint, PolyMatrix, eval_poly_matrix_promoted
from .ncpoint import DEFAULT_MARGIN, in_gdelta


@dataclass(frozen=True)
class ModelSampleSet:
    """Immutable bundle of sample data for fitting and residual checks."""

    delta: PolyMatrix
    points: tuple
    psi: tuple
    phi: tuple
    u: tuple
    h_dim: int
    k1_dim: int
    k2_dim: int
    mult: int

    def __init__(
        self,
        delta,
        points,
        psi,
        phi,
        u,
        h_dim,
        k1_dim,
        k2_dim,
        mult,
        verify_membership=True,
        margin=DEFAULT_MARGIN,
    ):
        points = tuple(points)
        psi = tuple(np.array(mat.as_array(v), dtype=np.complex128) for v in psi)
        phi = tuple(np.array(mat.as_array(v), dtype=np.complex128) for v in phi)
        u = tuple(np.array(mat.as_array(v), dtype=np.complex128) for v in u)
        if not (len(points) == len(psi) == len(phi) == len(u)):
            raise ShapeMismatch("points, psi, phi, u must have equal lengths")
        if min(h_dim, k1_dim, k2_dim, mult) < 1:
            raise ShapeMismatch("dimensions must be positive")
        for x, a, b, c in zip(points, psi, phi, u):
            if x.d != delta.d:
                raise ShapeMismatch("point and delta disagree on variable count")
            n = x.n
            if a.shape != (n * k1_dim, n * h_dim):
                raise ShapeMismatch(f"psi shape {a.shape} wrong at level {n}")
            if b.shape != (n * k2_dim, n * h_dim):
                raise ShapeMismatch(f"phi shape {b.shape} wrong at level {n}")
            if c.shape != (n * mult * delta.cols, n * h_dim):
                raise ShapeMismatch(f"u shape {c.shape} wrong at level {n}")
            if verify_membership:
                verdict = in_gdelta(delta, x, margin)
                if not verdict.inside:
                    raise OutsideDomain(
                        f"sample point at level {n} is {verdict.status} "
                        f"(||delta|| = {verdict.norm:.6f})"
                    )
        for arrays in (psi, phi, u):
            for v in arrays:
                v.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "h_dim", int(h_dim))
        object.__setattr__(self, "k1_dim", int(k1_dim))
        object.__setattr__(self, "k2_dim", int(k2_dim))
        object.__setattr__(self, "mult", int(mult))

    def __len__(self):
        return len(self.points)

    def promoted_delta_at(self, idx: int) -> np.ndarray:
        return eval_poly_matrix_promoted(self.delta, self.points[idx], self.mult)

    def to_json(self) -> dict:
        from .mat import CMatrix

        return {
            "delta": self.delta.to_json(),
            "points": [p.to_json() for p in self.points],
            "psi": [CMatrix(v).to_json() for v in self.psi],
            "phi": [CMatrix(v).to_json() for v in self.phi],
            "u": [CMatrix(v).to_json() for v in self.u],
            "h_dim": self.h_dim,
            "k1_dim": self.k1_dim,
            "k2_dim": self.k2_dim,
            "mult": self.mult,
        }

    @classmethod
    def from_json(cls, obj, verify_membership=True) -> "ModelSampleSet":
        from .mat import CMatrix

        return cls(
            delta=PolyMatrix.from_json(obj["delta"]),
            points=[GradedPoint.from_json(p) for p in obj["points"]],
            psi=[CMatrix.from_json(v).array for v in obj["psi"]],
            phi=[CMatrix.from_json(v).array for v in obj["phi"]],
            u=[CMatrix.from_json(v).array for v in obj["u"]],
            h_dim=int(obj["h_dim"]),
            k1_dim=int(obj["k1_dim"]),
            k2_dim=int(obj["k2_dim"]),
            mult=int(obj["mult"]),
            verify_membership=verify_membership,
        )


def model_residual(s: ModelSampleSet) -> float:
    """Worst violation of the model identity over same-level sample pairs.

    Returns ``max ||psi(y)*psi(x) - phi(y)*phi(x) - u(y)*(I - D(y)*D(x))u(x)||``
    including the diagonal pairs y = x. Machine-scale for data generated by
    an isometric realization.
    """
    deltas = [s.promoted_delta_at(i) for i in range(len(s))]
    worst = 0.0
    for i in range(len(s)):
        for j in range(len(s)):
            if s.points[i].n != s.points[j].n:
                continue
            lhs = s.psi[i].conj().T @ s.psi[j] - s.phi[i].conj().T @ s.phi[j]
            du_i = deltas[i] @ s.u[i]
            du_j = deltas[j] @ s.u[j]
            rhs = s.u[i].conj().T @ s.u[j] - du_i.conj().T @ du_j
            worst = max(worst, mat.op_norm(lhs - rhs))
    return worst


def diagonal_floor(s: ModelSampleSet) -> float:
    """Smallest eigenvalue of ``psi*psi - phi*phi`` over the sample points.

    Nonnegative (to rounding) whenever the data admits any model at all.
    """
    floor = np.inf
    for i in range(len(s)):
        g = s.psi[i].conj().T @ s.psi[i] - s.phi[i].conj().T @ s.phi[i]
        floor = min(floor, float(np.linalg.eigvalsh((g + g.conj().T) / 2.0)[0]))
    return float(floor)


def model_from_realization(r, points, psi=None, delta=None) -> ModelSampleSet:
    """Sample a realization into model data with a machine-scale residual.

    For each point the model column is ``u(x) = v(x) psi(x)`` where ``v`` is
    the realization's resolvent leg, and ``phi(x)`` is the realization value
    times ``psi(x)``. With ``psi=None`` the identity column data is used
    (h_dim = k1_dim).

    ``delta`` is accepted for interface symmetry and must equal the grid the
    realization was built on.
    """
    from .realize import eval_direct, resolvent_leg

    if delta is not None and delta != r.delta:
        raise ShapeMismatch("explicit delta disagrees with the realization's grid")
    points = list(points)
    if psi is None:
        psi = [np.eye(x.n * r.dim_k1, dtype=np.complex128) for x in points]
        h_dim = r.dim_k1
    else:
        psi = [mat.as_array(v) for v in psi]
        if not psi:
            raise ShapeMismatch("psi values required when supplied explicitly")
        h_dim = psi[0].shape[1] // points[0].n
    phi = []
    u = []
    for x, p in zip(points, psi):
        omega = eval_direct(r, x)
        v = resolvent_leg(r, x)
        phi.append(omega @ p)
        u.append(v @ p)
    return ModelSampleSet(
        delta=r.delta,
        points=points,
        psi=psi,
        phi=phi,
        u=u,
        h_dim=h_dim,
        k1_dim=r.dim_k1,
        k2_dim=r.dim_k2,
        mult=r.mult,
    )
