"""Symbolic expression kernel: immutable trees, calculus, parsing, zero testing."""

from .nodes import (
    BUILTINS,
    HBAR,
    I,
    MOMENTA,
    ONE,
    P1,
    P2,
    P3,
    SPATIAL,
    VARIABLES,
    X,
    Y,
    Z,
    ZERO,
    AbstractFn,
    Add,
    Apply,
    Const,
    Expr,
    Hbar,
    ImaginaryUnit,
    Mul,
    Param,
    Pow,
    Var,
    add,
    apply,
    as_expr,
    const,
    cos,
    cosh,
    exp,
    fn,
    mul,
    neg,
    param,
    params,
    power,
    rational,
    sin,
    sinh,
)
from .calculus import (
    ReductionError,
    RewriteRule,
    atoms,
    depends_on_hbar,
    diff,
    diff_multi,
    expand,
    free_symbols,
    free_variables,
    function_names,
    hbar_coefficients,
    param_names,
    reduce,
    rename_variables,
    substitute,
)
from .parse import ParseError, UnknownBuiltinError, parse
from .printing import to_latex, to_string
from .evaluate import (
    DEFAULT_TOL,
    DEFAULT_TRIALS,
    EvalPoint,
    EvaluationError,
    UnboundSymbolError,
    ZeroTest,
    evaluate,
    evaluate_with_scale,
    is_zero,
    random_point,
    sample_annulus,
)
from .codegen import lambdify

# the operation names used throughout the docs
eval = evaluate
