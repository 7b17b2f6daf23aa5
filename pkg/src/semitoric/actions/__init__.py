"""Period lattices, action integrals, the regularized action and the
Klein-group algebra on its Taylor series."""

from .k4 import K4, k4_act, k4_canonical, k4_mul, make_series, series_equal
from .periods import (
    ActionChart,
    MonodromyMatrix,
    PeriodBasis,
    action_integrals,
    classical_monodromy,
    fiber_point,
    period_basis,
    rectangle_loop,
)
from .regularized import (
    ModelPeriodSource,
    NormalFormPeriodSource,
    RegularizedAction,
    regularized_action,
    taylor_invariant,
)

__all__ = [
    "K4",
    "ActionChart",
    "ModelPeriodSource",
    "MonodromyMatrix",
    "NormalFormPeriodSource",
    "PeriodBasis",
    "RegularizedAction",
    "action_integrals",
    "classical_monodromy",
    "fiber_point",
    "k4_act",
    "k4_canonical",
    "k4_mul",
    "make_series",
    "period_basis",
    "rectangle_loop",
    "regularized_action",
    "series_equal",
    "taylor_invariant",
]
