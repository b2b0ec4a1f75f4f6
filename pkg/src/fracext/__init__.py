"""Fractional derivatives, their parabolic extension, and Harnack experiments."""

__version__ = "0.1.0"

from .quadrature import (  # noqa: F401
    DEFAULT_SPEC,
    GeneralOrder,
    HolderFunction,
    MarchaudResult,
    Order,
    QuadratureSpec,
    Side,
    limit_small_s,
    marchaud,
    marchaud_general,
    oracle_marchaud,
)
from .extension import (  # noqa: F401
    ExtensionQuery,
    LimitSchedule,
    backward_extend,
    compose_check,
    extend,
    flux_limit,
    trace_limit,
)
