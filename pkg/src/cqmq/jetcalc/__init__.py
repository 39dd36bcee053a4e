"""Expression parsing and exact truncated Taylor evaluation."""

from cqmq.jetcalc.expr import (
    BinOp,
    Call,
    Const,
    Expression,
    Neg,
    Num,
    Pow,
    Var,
    eval_jet,
    eval_point,
    evaluate,
    num,
    parse,
    to_source,
    var,
    variables,
)
from cqmq.jetcalc.jet import Jet, basis

DEFAULT_ORDER = 4
