"""Built-in integrable systems: moment maps, brackets, flows."""

from __future__ import annotations

import numpy as np

from .defs import (
    CODE,
    MODEL_NAMES,
    ChartPoint,
    IntegrableModel,
    MomentValue,
    TangentVector,
    get_model,
    model_from_json,
)
from .engine import BACKEND, first_return, flow, integrate
from .engine import _combination


def eval_moment(model, p):
    """(J(p), H(p)) for a point on the model's manifold."""
    z = model.check_point(p)
    mj, mh = model.moment(z)
    return MomentValue(float(mj), float(mh))


def hamiltonian_vector_field(model, which, p):
    """The vector field X with omega(X, .) = -d f for f = J, H or a
    combination (t1, t2), evaluated in the embedded chart."""
    cJ, cH = _combination(which)
    z = model.check_point(p)
    return TangentVector(model.chart_id, model.vector_field(z, cJ, cH))


def poisson_bracket(model, f_idx, g_idx, p):
    """{f, g}(p) = omega(X_f, X_g) with f, g picked from (J, H) by index."""
    z = model.check_point(p)
    sel = {0: (1.0, 0.0), 1: (0.0, 1.0), "J": (1.0, 0.0), "H": (0.0, 1.0)}
    cf, cg = sel[f_idx], sel[g_idx]
    xf = model.vector_field(z, *cf)
    xg = model.vector_field(z, *cg)
    return float(model.omega(z, xf, xg))


__all__ = [
    "BACKEND",
    "CODE",
    "MODEL_NAMES",
    "ChartPoint",
    "IntegrableModel",
    "MomentValue",
    "TangentVector",
    "eval_moment",
    "first_return",
    "flow",
    "get_model",
    "hamiltonian_vector_field",
    "integrate",
    "model_from_json",
    "poisson_bracket",
]
