"""Dense complex matrices with certified numeric kernels.

``CMatrix`` is an immutable value: every operation returns a fresh matrix and
the backing numpy array is marked read-only. Operator norms come from a full
SVD so downstream certificates can rely on them to near machine precision,
and inversion refuses matrices whose smallest singular value sits under a
relative floor instead of returning garbage.

Most functions accept either a ``CMatrix`` or anything ``numpy.asarray``
understands; they return ``CMatrix`` unless noted.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionTooSmall, ShapeMismatch, SingularMatrix

# sigma_min <= SINGULAR_RTOL * sigma_max is treated as singular
SINGULAR_RTOL = 1e-12
# columns handed to complete_to_isometry must be orthonormal within this
ORTHONORMAL_TOL = 1e-8


def _validated(a) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128, order="C")
    if arr.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d array, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


class CMatrix:
    """Immutable dense matrix over the complex numbers.

    Parameters
    ----------
    data : array_like
        Anything numpy can coerce to a 2-d complex array. Entries must be
        finite; NaN or infinity raise ``ValueError``.
    """

    __slots__ = ("_a",)

    def __init__(self, data):
        object.__setattr__(self, "_a", _validated(data))

    def __setattr__(self, name, value):
        raise AttributeError("CMatrix is immutable")

    # -- construction helpers -------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "CMatrix":
        return cls(np.zeros((rows, cols), dtype=np.complex128))

    @classmethod
    def identity(cls, n: int) -> "CMatrix":
        return cls(np.eye(n, dtype=np.complex128))

    # -- basic queries ---------------------------------------------------

    @property
    def array(self) -> np.ndarray:
        """The read-only backing array."""
        return self._a

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def h(self) -> "CMatrix":
        """Conjugate transpose."""
        return CMatrix(self._a.conj().T)

    def allclose(self, other, tol: float = 1e-12) -> bool:
        other = as_array(other)
        return self._a.shape == other.shape and bool(
            np.allclose(self._a, other, rtol=0.0, atol=tol)
        )

    def __repr__(self):
        return f"CMatrix({self._a!r})"

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __matmul__(self, other):
        return mul(self, other)

    def __mul__(self, scalar):
        return scalar_mul(scalar, self)

    __rmul__ = __mul__

    def __neg__(self):
        return CMatrix(-self._a)

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        """Row-major ``{"rows", "cols", "data": [[re, im], ...]}``."""
        flat = self._a.reshape(-1)
        return {
            "rows": self.rows,
            "cols": self.cols,
            "data": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CMatrix":
        rows, cols = int(obj["rows"]), int(obj["cols"])
        data = obj["data"]
        if len(data) != rows * cols:
            raise ShapeMismatch(
                f"data length {len(data)} does not match {rows}x{cols}"
            )
        flat = np.array(
            [complex(re, im) for re, im in data], dtype=np.complex128
        )
        return cls(flat.reshape(rows, cols))


def as_array(m) -> np.ndarray:
    """Coerce a CMatrix or array_like to a complex 2-d ndarray (no copy if possible)."""
    if isinstance(m, CMatrix):
        return m.array
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d array, got ndim={a.ndim}")
    return a


# -- norms and factorizations ---------------------------------------------


def op_norm(m) -> float:
    """Largest singular value, via full SVD.

    Accurate to a small multiple of machine epsilon relative to the norm,
    which is what the truncation and membership certificates assume.
    """
    a = as_array(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def cond(m) -> float:
    """2-norm condition number; ``inf`` for singular input."""
    a = as_array(m)
    if a.size == 0:
        return 1.0
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def inv_with_cond(m) -> tuple[CMatrix, float]:
    """Inverse together with the 2-norm condition number.

    Raises
    ------
    SingularMatrix
        If ``sigma_min <= SINGULAR_RTOL * sigma_max`` (carries the condition
        estimate), or if the matrix is not square.
    """
    a = as_array(m)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"cannot invert a {a.shape[0]}x{a.shape[1]} matrix")
    if a.shape[0] == 0:
        return CMatrix.zeros(0, 0), 1.0
    u, s, vh = np.linalg.svd(a)
    if s[-1] <= SINGULAR_RTOL * s[0]:
        kappa = float("inf") if s[-1] == 0.0 else float(s[0] / s[-1])
        raise SingularMatrix(condition=kappa)
    inverse = (vh.conj().T * (1.0 / s)) @ u.conj().T
    return CMatrix(inverse), float(s[0] / s[-1])


def inv(m) -> CMatrix:
    """Inverse with the same singularity floor as :func:`inv_with_cond`."""
    return inv_with_cond(m)[0]


# -- structural operations --------------------------------------------------


def adjoint(m) -> CMatrix:
    return CMatrix(as_array(m).conj().T)


def add(a, b) -> CMatrix:
    x, y = as_array(a), as_array(b)
    if x.shape != y.shape:
        raise ShapeMismatch(f"cannot add {x.shape} and {y.shape}")
    return CMatrix(x + y)


def sub(a, b) -> CMatrix:
    x, y = as_array(a), as_array(b)
    if x.shape != y.shape:
        raise ShapeMismatch(f"cannot subtract {y.shape} from {x.shape}")
    return CMatrix(x - y)


def mul(a, b) -> CMatrix:
    x, y = as_array(a), as_array(b)
    if x.shape[1] != y.shape[0]:
        raise ShapeMismatch(f"cannot multiply {x.shape} by {y.shape}")
    return CMatrix(x @ y)


def scalar_mul(c, m) -> CMatrix:
    return CMatrix(complex(c) * as_array(m))


def direct_sum(a, b) -> CMatrix:
    """Block diagonal sum; either operand may be empty (0x0 acts as neutral)."""
    x, y = as_array(a), as_array(b)
    out = np.zeros((x.shape[0] + y.shape[0], x.shape[1] + y.shape[1]), dtype=np.complex128)
    out[: x.shape[0], : x.shape[1]] = x
    out[x.shape[0] :, x.shape[1] :] = y
    return CMatrix(out)


def kron_left_identity(n: int, m) -> CMatrix:
    """``I_n (x) m`` with the identity factor on the left (outer index)."""
    if n < 0:
        raise ShapeMismatch("identity size must be nonnegative")
    return CMatrix(np.kron(np.eye(n), as_array(m)))


def isometry_defect(m) -> float:
    """``|| m* m - I ||`` in operator norm; zero exactly for isometries."""
    a = as_array(m)
    g = a.conj().T @ a
    return op_norm(g - np.eye(a.shape[1]))


def complete_to_isometry(partial, target_dim: int) -> CMatrix:
    """Extend an orthonormal column family to an isometry with ``target_dim`` columns.

    The completion is deterministic: standard basis vectors of the codomain
    are orthonormalized against the accumulated columns in index order and
    appended while room remains. The given columns are kept verbatim as the
    leading columns of the result.

    Parameters
    ----------
    partial : CMatrix or array_like
        Shape ``(rows, k)`` with orthonormal columns (within 1e-8). ``k`` may
        be zero; then the result is the leading ``target_dim`` columns of the
        orthonormalized standard basis (the identity when square).
    target_dim : int
        Number of columns of the result.

    Raises
    ------
    DimensionTooSmall
        If ``rows < target_dim`` (no isometry of that size exists) or the
        given family already has more than ``target_dim`` columns.
    """
    p = as_array(partial)
    rows, k = p.shape
    if target_dim < k:
        raise DimensionTooSmall(
            f"target_dim {target_dim} is below the {k} columns already given"
        )
    if rows < target_dim:
        raise DimensionTooSmall(
            f"codomain of dimension {rows} cannot host an isometry with {target_dim} columns"
        )
    if k and isometry_defect(p) > ORTHONORMAL_TOL:
        raise ValueError("partial columns are not orthonormal within 1e-8")
    cols = [p[:, j].copy() for j in range(k)]
    for i in range(rows):
        if len(cols) == target_dim:
            break
        v = np.zeros(rows, dtype=np.complex128)
        v[i] = 1.0
        # two Gram-Schmidt sweeps keep the defect at machine precision
        for _ in range(2):
            for c in cols:
                v = v - c * np.vdot(c, v)
        nrm = float(np.linalg.norm(v))
        if nrm > 1e-8:
            cols.append(v / nrm)
    if len(cols) < target_dim:
        raise DimensionTooSmall(
            "standard basis did not yield enough independent directions"
        )
    out = np.column_stack(cols) if cols else np.zeros((rows, 0), dtype=np.complex128)
    return CMatrix(out)
