"""Free holomorphic functions on matrix tuples.

Evaluation of free polynomials and rational expressions at every matrix
level, membership in basic free open sets, transfer-function realizations
with certified series evaluation, isometry fitting from finite sample data,
certified polynomial approximation, and explicit inversion certificates.
"""

from .errors import (
    BelowFloor,
    DimensionTooSmall,
    ExprSyntaxError,
    FreeholoError,
    GramMismatch,
    NoCover,
    NotInvertible,
    NotPolynomial,
    OutsideDomain,
    RankOverflow,
    RootFindingFailure,
    SchemaError,
    ShapeMismatch,
    SingularMatrix,
    SingularityHit,
    TermBlowup,
    UnknownVariable,
)
from .mat import CMatrix, complete_to_isometry, direct_sum, inv, isometry_defect, op_norm
from .freepoly import (
    EvalCache,
    FreePoly,
    GradedPoint,
    MatrixPoly,
    PolyMatrix,
    ball_delta,
    commutator_delta,
    delta_direct_sum,
    delta_pad_columns,
    eval_poly,
    eval_poly_matrix,
    eval_word,
)
from .exprlang import eval_expr, parse, print_expr, to_free_poly
from .ncpoint import (
    Membership,
    SimilarityWitness,
    check_nc_axioms,
    conjugate,
    envelope_member,
    extend_function,
    in_gdelta,
    nc_derivative,
    point_direct_sum,
)
from .model import ModelSampleSet, model_from_realization, model_residual
from .realize import (
    Realization,
    corona_solve,
    eval_direct,
    eval_neumann,
    fit_lurking_isometry,
)
from .approx import (
    certify_error,
    choose_truncation,
    close_under_direct_sums,
    expand_polynomial,
    in_dictionary_hull,
    select_covering_delta,
)
from .mero import inversion_certificate, singular_scan

SCHEMA_VERSION = "freeholo/1"

__version__ = "0.1.0"
