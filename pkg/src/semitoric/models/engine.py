"""Flow integration and first-return shooting on the built-in models.

The hot loop (adaptive Runge-Kutta stepping with constraint projection
and event location) runs in the compiled extension ``_flowcore`` when it
is available and falls back to the pure-Python twin in ``_purepy``
otherwise.  ``BACKEND`` records which one was selected at import.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, IntegrationError, NonCompactFiberError
from . import _purepy
from .defs import ChartPoint, IntegrableModel

try:  # compiled kernels
    from .. import _flowcore

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on the build
    _flowcore = None
    BACKEND = "python"


def _combination(which):
    if isinstance(which, str):
        if which == "J":
            return 1.0, 0.0
        if which == "H":
            return 0.0, 1.0
        raise DomainError(f"unknown flow selector '{which}'")
    cJ, cH = which
    return float(cJ), float(cH)


def integrate(model, z0, cJ, cH, duration, rtol=1e-9, max_steps=2_000_000,
              force_python=False):
    """Flow z0 by the field cJ*X_J + cH*X_H for ``duration`` (signed)."""
    z0 = np.asarray(z0, dtype=float)
    if _flowcore is not None and not force_python:
        z, status, _ = _flowcore.integrate(
            model.code, model.params, z0, cJ, cH, float(duration), rtol, rtol * 1e-2,
            max_steps,
        )
    else:
        z, status, _ = _purepy.integrate(
            lambda w: model.vector_field(w, cJ, cH),
            model.project,
            z0,
            float(duration),
            rtol,
            rtol * 1e-2,
            max_steps,
        )
    if status == _purepy.STEP_COLLAPSE:
        raise IntegrationError(
            f"{model.name}: step size collapsed (near-singular point?)",
            state=z,
        )
    if status == _purepy.CAP_HIT:
        raise IntegrationError(f"{model.name}: step cap exceeded", state=z)
    return z


def flow(model, which, p, duration, tol=1e-9):
    """Adaptive flow of J, H or a combination (t1, t2) starting at p.

    Conservation of J and H along the path is verified to 10*tol
    relative; the state is re-projected onto the constraint set at every
    accepted step.
    """
    cJ, cH = _combination(which)
    z0 = model.check_point(p, tol=1e-8)
    F0 = model.moment(z0)
    z1 = integrate(model, z0, cJ, cH, duration, rtol=tol)
    F1 = model.moment(z1)
    scale = np.maximum(1.0, np.abs(F0))
    drift = np.abs(F1 - F0) / scale
    if np.any(drift > 10 * max(tol, 1e-14) * max(1.0, abs(duration))):
        raise IntegrationError(
            f"{model.name}: conservation drift {drift.max():.3e} exceeds budget",
            state=z1,
        )
    return ChartPoint(model.chart_id, z1, model.name)


def _advance_to_event(model, z0, cJ, cH, inv_idx, target, direction, t_skip,
                      t_max, rtol, force_python=False):
    if _flowcore is not None and not force_python:
        return _flowcore.advance_to_event(
            model.code, model.params, np.asarray(z0, dtype=float), cJ, cH,
            inv_idx, target, direction, t_skip, t_max, rtol, rtol * 1e-2,
        )
    fn = model.invariant_functions()[inv_idx][1]
    return _purepy.advance_to_event(
        lambda w: model.vector_field(w, cJ, cH),
        model.project,
        fn,
        np.asarray(z0, dtype=float),
        target,
        direction,
        t_skip,
        t_max,
        rtol,
        rtol * 1e-2,
    )


def _pick_section(model, z):
    """Invariant with the largest |d/dt| along X_H at z."""
    invs = model.invariant_functions()
    xh = model.vector_field(z, 0.0, 1.0)
    eps = 1e-6
    best, rate = 0, -1.0
    for i, (_, fn) in enumerate(invs):
        d = (fn(model.project(z + eps * xh)) - fn(model.project(z - eps * xh))) / (
            2 * eps
        )
        if abs(d) > rate:
            rate, best = abs(d), i
        if i == 0:
            d0 = d
    _, fn = invs[best]
    d = (fn(model.project(z + eps * xh)) - fn(model.project(z - eps * xh))) / (2 * eps)
    return best, fn, np.sign(d), rate


def first_return(model, seed, t_cap=1e4, rtol=1e-9, match_tol=1e-5):
    """First return of the H-flow to the J-orbit through ``seed``.

    Returns ``(tau2, tau1, z_return)`` where tau2 > 0 is the return time
    and tau1 in [0, 2*pi) is the closing J-flow time, so that flowing H
    for tau2 and then J for tau1 is the identity on the fiber.

    The section is the level set of an S^1-invariant function through
    the seed (crossing direction fixed); each directional crossing is
    accepted only if the state matches the rotated seed, which rules out
    other intersections of the level set with the reduced orbit.
    """
    z0 = model.project(np.asarray(seed.coords if isinstance(seed, ChartPoint)
                                  else seed, dtype=float))
    scale = float(np.linalg.norm(z0)) + 1.0
    # the seed may sit at a turning point of every invariant section
    # (grazing level sets -> missed crossings); probe a few points along
    # the H-orbit and shoot from the most transverse one.  The return
    # time does not depend on the starting point of the fiber.
    best = None
    for dt in (0.0, 0.37, 1.1, 2.9):
        zc = z0 if dt == 0.0 else integrate(model, z0, 0.0, 1.0, dt, rtol=rtol)
        idx_c, fn_c, dir_c, rate_c = _pick_section(model, zc)
        if best is None or rate_c > best[0]:
            best = (rate_c, zc, idx_c, fn_c, dir_c)
        if rate_c > 0.05 * scale:
            break
    rate, zs, idx, fn, direction = best
    if rate < 1e-10 * scale:
        raise NonCompactFiberError(
            f"{model.name}: no transverse section on the fiber (singular?)"
        )
    target = float(fn(zs))
    t_total = 0.0
    z = zs
    for _ in range(512):
        t_ev, z_ev, status = _advance_to_event(
            model, z, 0.0, 1.0, idx, target, direction,
            t_skip=1e-5, t_max=t_cap - t_total, rtol=rtol,
        )
        if status != 0:
            raise NonCompactFiberError(
                f"{model.name}: H-flow did not return within the time cap "
                f"(t={t_total + t_ev:.1f}); fiber non-compact or singular"
            )
        t_total += t_ev
        theta = model.align_angle(z_ev, zs)
        if np.linalg.norm(model.rotate(zs, theta) - z_ev) < match_tol * scale:
            tau2 = t_total
            tau1 = (-theta) % (2 * np.pi)
            if tau1 >= 2 * np.pi * (1 - 1e-12):
                tau1 = 0.0
            return tau2, tau1, z_ev
        z = z_ev
    raise NonCompactFiberError(
        f"{model.name}: exceeded event budget without matching the J-orbit"
    )
