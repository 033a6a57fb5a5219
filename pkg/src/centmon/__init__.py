"""Centralising monoids with majority witnesses on small finite sets."""

from .algebra import (
    ConfigurationError,
    FinitaryOp,
    IdentityViolation,
    LeftAbsorptiveOp,
    MajorityOp,
    Monoid,
    Permutation,
    SigmaIndex,
    UnaryOp,
    commutes,
    commutes_on_sigma,
    compose_unary,
    conjugate,
    expand,
    restrict,
    sigma,
    unary_centraliser,
)
from .conditions import (
    TRIVIAL,
    ConditionId,
    all_conditions,
    analyze_image3,
    classify_unary,
    condition_holds,
    general_condition_holds,
)
from .generators import condition_plan, enumerate_commuting
from .search import BACKEND, StageResult, distinct_monoids

__version__ = "0.1.0"
