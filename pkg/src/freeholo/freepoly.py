"""Free polynomials in noncommuting variables and their matrix evaluation.

A word is a tuple of 1-based letters, e.g. ``(1, 2, 1)`` stands for
``x1 x2 x1``. A ``FreePoly`` is a finite complex combination of words in
``d`` variables; evaluation substitutes a tuple of n-by-n matrices for the
variables, at every matrix size n ("level"). ``PolyMatrix`` is a rectangular
grid of free polynomials evaluated blockwise, and ``MatrixPoly`` attaches a
matrix coefficient to each word (the natural output of series truncation).

Evaluation layout conventions, fixed once and for all:

* ``eval_poly_matrix`` produces the block matrix whose (i, j) block of size
  n-by-n is entry (i, j) evaluated at the point. The grid index is the outer
  (slow) index, the level index the inner one.
* Operator-valued objects (``MatrixPoly`` values, realization values) put
  the level index outside: the value at level n of a polynomial with
  coefficient matrices ``C_w`` is ``sum_w kron(w(x), C_w)``.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch

Word = tuple  # tuple[int, ...], letters are 1-based

# coefficients with modulus under this are purged during normalization
EPS_COEFF = 1e-15


def graded_lex_key(word):
    """Sort key: by length first, then lexicographically."""
    return (len(word), word)


def _check_word(word, d):
    w = tuple(int(i) for i in word)
    for letter in w:
        if not 1 <= letter <= d:
            raise ValueError(f"letter {letter} outside 1..{d}")
    return w


class GradedPoint:
    """A d-tuple of n-by-n complex matrices, the argument of free evaluation."""

    __slots__ = ("_d", "_n", "_mats")

    def __init__(self, mats):
        arrays = []
        n = None
        for m in mats:
            a = np.array(m, dtype=np.complex128, order="C")
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ShapeMismatch("graded point entries must be square matrices")
            if n is None:
                n = a.shape[0]
            elif a.shape[0] != n:
                raise ShapeMismatch("graded point entries must share one size")
            if a.size and not np.all(np.isfinite(a)):
                raise ValueError("graded point entries must be finite")
            a.setflags(write=False)
            arrays.append(a)
        if not arrays:
            raise ValueError("graded point needs at least one matrix")
        object.__setattr__(self, "_d", len(arrays))
        object.__setattr__(self, "_n", int(n))
        object.__setattr__(self, "_mats", tuple(arrays))

    def __setattr__(self, name, value):
        raise AttributeError("GradedPoint is immutable")

    @classmethod
    def scalars(cls, values):
        """Level-1 point from a sequence of complex numbers."""
        return cls([np.array([[complex(v)]]) for v in values])

    @property
    def d(self):
        return self._d

    @property
    def n(self):
        return self._n

    @property
    def mats(self):
        return self._mats

    def nc_norm(self) -> float:
        """max over coordinates of the operator norm."""
        from .mat import op_norm

        return max(op_norm(m) for m in self._mats)

    def __repr__(self):
        return f"GradedPoint(d={self._d}, n={self._n})"

    def to_json(self) -> dict:
        from .mat import CMatrix

        return {
            "d": self._d,
            "n": self._n,
            "mats": [CMatrix(m).to_json() for m in self._mats],
        }

    @classmethod
    def from_json(cls, obj) -> "GradedPoint":
        from .mat import CMatrix

        mats = [CMatrix.from_json(m).array for m in obj["mats"]]
        pt = cls(mats)
        if pt.d != int(obj["d"]) or pt.n != int(obj["n"]):
            raise ShapeMismatch("graded point header disagrees with matrix data")
        return pt


class EvalCache:
    """Memo of word values at one fixed point, keyed by word prefix."""

    def __init__(self, x: GradedPoint):
        self.x = x
        self._table = {(): np.eye(x.n, dtype=np.complex128)}

    def word(self, w) -> np.ndarray:
        val = self._table.get(w)
        if val is None:
            val = self.word(w[:-1]) @ self.x.mats[w[-1] - 1]
            self._table[w] = val
        return val


def eval_word(word, x: GradedPoint, cache: EvalCache | None = None) -> np.ndarray:
    """Product of point matrices along the word; the empty word gives I_n."""
    w = _check_word(word, x.d)
    if cache is not None:
        return cache.word(w)
    out = np.eye(x.n, dtype=np.complex128)
    for letter in w:
        out = out @ x.mats[letter - 1]
    return out


class FreePoly:
    """Finite complex combination of words in d noncommuting variables.

    Terms are kept in a normalized dict: coefficients with modulus below
    ``EPS_COEFF`` are dropped, and printing / serialization walks words in
    graded lexicographic order so equal polynomials look identical.
    """

    __slots__ = ("_d", "_terms")

    def __init__(self, d: int, terms=None):
        if d < 1:
            raise ValueError("need at least one variable")
        clean = {}
        for word, coeff in (terms or {}).items():
            w = _check_word(word, d)
            c = clean.get(w, 0j) + complex(coeff)
            if abs(c) < EPS_COEFF:
                clean.pop(w, None)
            else:
                clean[w] = c
        object.__setattr__(self, "_d", int(d))
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("FreePoly is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, d: int) -> "FreePoly":
        return cls(d)

    @classmethod
    def const(cls, d: int, c) -> "FreePoly":
        return cls(d, {(): complex(c)})

    @classmethod
    def letter(cls, d: int, index: int) -> "FreePoly":
        """The variable ``x{index}`` (1-based)."""
        return cls(d, {(index,): 1.0})

    # -- queries -----------------------------------------------------------

    @property
    def d(self) -> int:
        return self._d

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def sorted_terms(self):
        return [(w, self._terms[w]) for w in sorted(self._terms, key=graded_lex_key)]

    def degree(self) -> int:
        """Length of the longest word; -1 for the zero polynomial."""
        return max((len(w) for w in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if not isinstance(other, FreePoly):
            return NotImplemented
        return self._d == other._d and self._terms == other._terms

    def __hash__(self):
        return hash((self._d, frozenset(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return "FreePoly(0)"
        bits = []
        for w, c in self.sorted_terms():
            mono = "*".join(f"x{i}" for i in w) or "1"
            bits.append(f"({c:g})*{mono}")
        return "FreePoly(" + " + ".join(bits) + ")"

    # -- ring operations -----------------------------------------------------

    def _like(self, other) -> "FreePoly":
        if isinstance(other, FreePoly):
            if other._d != self._d:
                raise ShapeMismatch("variable counts differ")
            return other
        return FreePoly.const(self._d, other)

    def __add__(self, other):
        other = self._like(other)
        merged = dict(self._terms)
        for w, c in other._terms.items():
            merged[w] = merged.get(w, 0j) + c
        return FreePoly(self._d, merged)

    __radd__ = __add__

    def __neg__(self):
        return FreePoly(self._d, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._like(other))

    def __rsub__(self, other):
        return self._like(other) - self

    def __mul__(self, other):
        other = self._like(other)
        out = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                w = w1 + w2
                out[w] = out.get(w, 0j) + c1 * c2
        return FreePoly(self._d, out)

    def __rmul__(self, other):
        return self._like(other) * self

    def scale(self, c) -> "FreePoly":
        c = complex(c)
        return FreePoly(self._d, {w: c * v for w, v in self._terms.items()})

    def compose_linear(self, coeffs, consts=None) -> "FreePoly":
        """Substitute ``x_r -> sum_s coeffs[r][s] x_s + consts[r]``.

        ``coeffs`` is a d-by-d array of complex numbers; ``consts`` an
        optional length-d vector (defaults to zero). Handy for recentering
        and rescaling domains.
        """
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (self._d, self._d):
            raise ShapeMismatch("substitution matrix must be d-by-d")
        if consts is None:
            consts = np.zeros(self._d, dtype=np.complex128)
        else:
            consts = np.asarray(consts, dtype=np.complex128)
        images = [
            FreePoly(
                self._d,
                {(s + 1,): coeffs[r, s] for s in range(self._d)}
                | ({(): consts[r]} if consts[r] else {}),
            )
            for r in range(self._d)
        ]
        out = FreePoly.zero(self._d)
        for w, c in self._terms.items():
            term = FreePoly.const(self._d, c)
            for letter in w:
                term = term * images[letter - 1]
            out = out + term
        return out

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "d": self._d,
            "terms": [
                {"coeff": [float(c.real), float(c.imag)], "word": list(w)}
                for w, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "FreePoly":
        d = int(obj["d"])
        terms = {}
        for t in obj["terms"]:
            re, im = t["coeff"]
            w = tuple(int(i) for i in t["word"])
            terms[w] = terms.get(w, 0j) + complex(re, im)
        return cls(d, terms)


def eval_poly(p: FreePoly, x: GradedPoint, cache: EvalCache | None = None) -> np.ndarray:
    """Evaluate ``p`` at the point, an n-by-n matrix."""
    if x.d != p.d:
        raise ShapeMismatch(f"point has {x.d} coordinates, polynomial wants {p.d}")
    out = np.zeros((x.n, x.n), dtype=np.complex128)
    for w, c in p._terms.items():
        out = out + c * eval_word(w, x, cache)
    return out


class PolyMatrix:
    """Rectangular grid of free polynomials sharing one variable count."""

    __slots__ = ("_d", "_rows", "_cols", "_entries")

    def __init__(self, entries, d: int | None = None):
        grid = [list(row) for row in entries]
        rows = len(grid)
        cols = len(grid[0]) if rows else 0
        for row in grid:
            if len(row) != cols:
                raise ShapeMismatch("ragged polynomial grid")
            for p in row:
                if not isinstance(p, FreePoly):
                    raise TypeError("entries must be FreePoly")
        if rows and cols:
            d = grid[0][0].d
            for row in grid:
                for p in row:
                    if p.d != d:
                        raise ShapeMismatch("entries disagree on variable count")
        elif d is None:
            raise ValueError("empty grid needs an explicit variable count")
        object.__setattr__(self, "_d", int(d))
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_cols", cols)
        object.__setattr__(self, "_entries", tuple(tuple(row) for row in grid))

    def __setattr__(self, name, value):
        raise AttributeError("PolyMatrix is immutable")

    @classmethod
    def from_poly(cls, p: FreePoly) -> "PolyMatrix":
        return cls([[p]])

    @classmethod
    def column(cls, polys) -> "PolyMatrix":
        return cls([[p] for p in polys])

    @property
    def d(self):
        return self._d

    @property
    def rows(self):
        return self._rows

    @property
    def cols(self):
        return self._cols

    @property
    def entries(self):
        return self._entries

    def degree(self) -> int:
        return max((p.degree() for row in self._entries for p in row), default=-1)

    def __eq__(self, other):
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return (
            self._d == other._d
            and self._rows == other._rows
            and self._cols == other._cols
            and self._entries == other._entries
        )

    def __hash__(self):
        return hash((self._d, self._rows, self._cols, self._entries))

    def __repr__(self):
        return f"PolyMatrix({self._rows}x{self._cols}, d={self._d})"

    def to_json(self) -> dict:
        return {
            "rows": self._rows,
            "cols": self._cols,
            "d": self._d,
            "entries": [[p.to_json() for p in row] for row in self._entries],
        }

    @classmethod
    def from_json(cls, obj) -> "PolyMatrix":
        entries = [[FreePoly.from_json(p) for p in row] for row in obj["entries"]]
        pm = cls(entries, d=int(obj.get("d", 1)))
        if pm.rows != int(obj["rows"]) or pm.cols != int(obj["cols"]):
            raise ShapeMismatch("polynomial grid header disagrees with entries")
        return pm


def eval_poly_matrix(pm: PolyMatrix, x: GradedPoint, cache: EvalCache | None = None) -> np.ndarray:
    """Blockwise evaluation: an (rows*n)-by-(cols*n) matrix, grid index outer.

    Block (i, j) equals entry (i, j) evaluated at the point, so the direct
    sum of two grids evaluates to the exact block diagonal of the two values.
    """
    if x.d != pm.d:
        raise ShapeMismatch(f"point has {x.d} coordinates, grid wants {pm.d}")
    n = x.n
    if cache is None:
        cache = EvalCache(x)
    out = np.zeros((pm.rows * n, pm.cols * n), dtype=np.complex128)
    for i in range(pm.rows):
        for j in range(pm.cols):
            out[i * n : (i + 1) * n, j * n : (j + 1) * n] = eval_poly(
                pm.entries[i][j], x, cache
            )
    return out


def eval_poly_matrix_promoted(
    pm: PolyMatrix, x: GradedPoint, mult: int, cache: EvalCache | None = None
) -> np.ndarray:
    """Evaluation in the layout level (x) multiplicity (x) grid-index.

    Returns ``sum_{i,j} kron(entry_ij(x), kron(I_mult, E_ij))`` of shape
    ``(n*mult*rows, n*mult*cols)``. This is the form that composes with
    ``kron(I_n, block)`` factors in realization formulas; it is a
    permutation conjugate of :func:`eval_poly_matrix` tensored with the
    multiplicity identity, so operator norms agree.
    """
    if mult < 1:
        raise ShapeMismatch("multiplicity must be at least 1")
    n = x.n
    if cache is None:
        cache = EvalCache(x)
    out = np.zeros((n * mult * pm.rows, n * mult * pm.cols), dtype=np.complex128)
    eye_m = np.eye(mult)
    for i in range(pm.rows):
        for j in range(pm.cols):
            p = pm.entries[i][j]
            if p.is_zero():
                continue
            e = np.zeros((pm.rows, pm.cols))
            e[i, j] = 1.0
            out += np.kron(eval_poly(p, x, cache), np.kron(eye_m, e))
    return out


def delta_direct_sum(d1: PolyMatrix, d2: PolyMatrix) -> PolyMatrix:
    """Block diagonal stack of two grids (membership becomes the conjunction)."""
    if d1.d != d2.d:
        raise ShapeMismatch("grids disagree on variable count")
    zero = FreePoly.zero(d1.d)
    top = [list(row) + [zero] * d2.cols for row in d1.entries]
    bottom = [[zero] * d1.cols + list(row) for row in d2.entries]
    return PolyMatrix(top + bottom, d=d1.d)


def delta_pad_columns(pm: PolyMatrix, extra: int) -> PolyMatrix:
    """Append ``extra`` zero columns on the right.

    Padding with zero columns never changes the value's operator norm, so
    the strict sublevel set is untouched; it only widens the codomain side
    of realization bookkeeping.
    """
    if extra < 0:
        raise ShapeMismatch("cannot pad a negative number of columns")
    if extra == 0:
        return pm
    zero = FreePoly.zero(pm.d)
    if pm.rows == 0:
        return PolyMatrix([], d=pm.d)
    return PolyMatrix([list(row) + [zero] * extra for row in pm.entries], d=pm.d)


def ball_delta(center, radius: float) -> PolyMatrix:
    """Column grid ``((x_r - center_r) / radius)``, the matrix ball domain."""
    center = [complex(c) for c in center]
    d = len(center)
    if radius <= 0:
        raise ValueError("radius must be positive")
    polys = []
    for r, c in enumerate(center, start=1):
        p = FreePoly(d, {(r,): 1.0 / radius, (): -c / radius})
        polys.append(p)
    return PolyMatrix.column(polys)


def commutator_delta() -> PolyMatrix:
    """1 - (x1 x2 - x2 x1)^2 in two variables.

    Its strict sublevel set contains no level-1 point (scalars commute, so
    the value is exactly 1 there) but does contain level-2 points.
    """
    comm = FreePoly(2, {(1, 2): 1.0, (2, 1): -1.0})
    return PolyMatrix.from_poly(FreePoly.const(2, 1.0) - comm * comm)


class MatrixPoly:
    """Free polynomial whose coefficients are complex matrices.

    The value at a graded point is ``sum_w kron(w(x), C_w)`` with the level
    index outer, matching operator-valued evaluation elsewhere.
    """

    __slots__ = ("_d", "_out_dim", "_in_dim", "_terms")

    def __init__(self, d: int, out_dim: int, in_dim: int, terms=None):
        clean = {}
        for word, coeff in (terms or {}).items():
            w = _check_word(word, d)
            c = np.array(coeff, dtype=np.complex128)
            if c.shape != (out_dim, in_dim):
                raise ShapeMismatch(
                    f"coefficient for {w} has shape {c.shape}, want ({out_dim}, {in_dim})"
                )
            if w in clean:
                c = clean[w] + c
            if np.max(np.abs(c)) >= EPS_COEFF:
                c.setflags(write=False)
                clean[w] = c
            else:
                clean.pop(w, None)
        object.__setattr__(self, "_d", int(d))
        object.__setattr__(self, "_out_dim", int(out_dim))
        object.__setattr__(self, "_in_dim", int(in_dim))
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("MatrixPoly is immutable")

    @classmethod
    def constant(cls, d: int, mat) -> "MatrixPoly":
        m = np.asarray(mat, dtype=np.complex128)
        return cls(d, m.shape[0], m.shape[1], {(): m})

    @property
    def d(self):
        return self._d

    @property
    def out_dim(self):
        return self._out_dim

    @property
    def in_dim(self):
        return self._in_dim

    @property
    def terms(self):
        return dict(self._terms)

    def term_count(self) -> int:
        return len(self._terms)

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=-1)

    def words(self):
        return sorted(self._terms, key=graded_lex_key)

    def __add__(self, other):
        if (
            self._d != other._d
            or self._out_dim != other._out_dim
            or self._in_dim != other._in_dim
        ):
            raise ShapeMismatch("matrix polynomials do not share a shape")
        merged = {w: c.copy() for w, c in self._terms.items()}
        for w, c in other._terms.items():
            merged[w] = merged.get(w, 0) + c
        return MatrixPoly(self._d, self._out_dim, self._in_dim, merged)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def __mul__(self, other):
        if self._d != other._d:
            raise ShapeMismatch("variable counts differ")
        if self._in_dim != other._out_dim:
            raise ShapeMismatch(
                f"cannot chain shapes ({self._out_dim},{self._in_dim}) and "
                f"({other._out_dim},{other._in_dim})"
            )
        out = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                prod = c1 @ c2
                w = w1 + w2
                if w in out:
                    out[w] = out[w] + prod
                else:
                    out[w] = prod
        return MatrixPoly(self._d, self._out_dim, other._in_dim, out)

    def scale(self, c) -> "MatrixPoly":
        c = complex(c)
        return MatrixPoly(
            self._d,
            self._out_dim,
            self._in_dim,
            {w: c * m for w, m in self._terms.items()},
        )

    def eval(self, x: GradedPoint, cache: EvalCache | None = None) -> np.ndarray:
        if x.d != self._d:
            raise ShapeMismatch("variable counts differ")
        if cache is None:
            cache = EvalCache(x)
        out = np.zeros(
            (x.n * self._out_dim, x.n * self._in_dim), dtype=np.complex128
        )
        for w, c in self._terms.items():
            out += np.kron(eval_word(w, x, cache), c)
        return out

    def to_poly_matrix(self) -> PolyMatrix:
        """Entrywise view: grid entry (i, j) collects coefficient (i, j) per word."""
        grids = [
            [
                FreePoly(
                    self._d,
                    {w: c[i, j] for w, c in self._terms.items() if abs(c[i, j]) >= EPS_COEFF},
                )
                for j in range(self._in_dim)
            ]
            for i in range(self._out_dim)
        ]
        return PolyMatrix(grids, d=self._d)

    @classmethod
    def from_poly_matrix(cls, pm: PolyMatrix) -> "MatrixPoly":
        terms = {}
        for i in range(pm.rows):
            for j in range(pm.cols):
                for w, c in pm.entries[i][j].terms.items():
                    mat = terms.setdefault(
                        w, np.zeros((pm.rows, pm.cols), dtype=np.complex128)
                    )
                    mat[i, j] += c
        return cls(pm.d, pm.rows, pm.cols, terms)

    def to_json(self) -> dict:
        from .mat import CMatrix

        return {
            "d": self._d,
            "out_dim": self._out_dim,
            "in_dim": self._in_dim,
            "terms": [
                {"word": list(w), "coeff": CMatrix(self._terms[w]).to_json()}
                for w in self.words()
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "MatrixPoly":
        from .mat import CMatrix

        terms = {
            tuple(int(i) for i in t["word"]): CMatrix.from_json(t["coeff"]).array
            for t in obj["terms"]
        }
        return cls(int(obj["d"]), int(obj["out_dim"]), int(obj["in_dim"]), terms)
