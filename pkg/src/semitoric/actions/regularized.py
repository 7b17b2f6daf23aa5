"""Regularized action at a focus-focus value and its Taylor coefficients.

The second action A2 on a punctured disk minus a vertical cut satisfies

    A2(w) = (1/2*pi) Im(w Log w - w) + h(w)   (mod integer multiples of a)

for a determination Log of the complex logarithm adapted to the cut;
the smooth remainder h is the regularized action.  Its Taylor
polynomial, normalized to h(0,0) = 0 and a-coefficient in [0, 1), is
the series this module computes.

Working directly with the moment-map coordinates (no Eliasson
normalization is constructed), the remainder also contains weak
singular terms of the form (monomial) * log|w| whenever the vertical
Eliasson scale differs from 1; the least-squares fit therefore carries
an auxiliary log-augmented block that absorbs them, and only the
polynomial block is reported.  Coefficients are exact for the
normalized local model and self-consistent (radius-stable) for the
built-in systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ResolutionInsufficientError
from ..models import MomentValue
from .periods import TWO_PI, PeriodField, fiber_point, unwrap_tau1


def arg_cut(a, b, eps):
    """Argument of w = a + i b for the branch with the vertical eps-cut.

    eps=+1 cuts {a=0, b>=0} with values in (-3*pi/2, pi/2]; eps=-1 is
    the reflection, cutting {a=0, b<=0} with values in [-pi/2, 3*pi/2).
    """
    if eps == 1:
        th = np.arctan2(b, a)
        return np.where((a < 0) & (b > 0), th - TWO_PI, th)
    th = np.arctan2(-b, a)
    return -np.where((a < 0) & (-b > 0), th - TWO_PI, th)


def singular_part(a, b, eps):
    """(1/2*pi) Im(w Log w - w) for the eps-branch."""
    r = np.hypot(a, b)
    return (a * arg_cut(a, b, eps) + b * np.log(r) - b) / TWO_PI


@dataclass
class RegularizedAction:
    focus_value: MomentValue
    disk_radius: float
    cut_sign: int
    degree: int
    taylor: dict  # {(i, j): float}, C00 absent, C10 in [0, 1)
    log_terms: dict  # auxiliary singular-basis coefficients
    fit_residual: float
    samples: np.ndarray  # columns a, b, A2, h


def _sample_grid(radius, cut_sign, n_rings, n_theta, sector=0.1):
    """Annulus samples avoiding a sector around the cut direction.

    Returns (ring, slot) indexed arrays of a, b and the edge list of the
    connectivity tree to integrate along (never crossing the cut).
    """
    cut_dir = np.pi / 2 if cut_sign == 1 else -np.pi / 2
    # angles walk the full circle starting just past the cut
    phi = cut_dir + sector + (TWO_PI - 2 * sector) * np.arange(n_theta) / (
        n_theta - 1
    )
    radii = radius * 0.5 ** np.arange(n_rings)
    a = np.outer(radii, np.cos(phi))
    b = np.outer(radii, np.sin(phi))
    edges = []
    for k in range(n_rings):
        for s in range(n_theta - 1):
            # along the ring, off the cut; one Simpson panel suffices
            edges.append(((k, s), (k, s + 1), 1))
    for k in range(n_rings - 1):
        for s in range(0, n_theta, 4):
            # radial edges span a factor 2 in radius where the form is
            # log-singular; composite panels keep the quadrature sharp
            edges.append(((k, s), (k + 1, s), 8))
    return a, b, edges


class ModelPeriodSource:
    """Second-period form field measured by shooting on a model."""

    def __init__(self, model, focus_value, tol=1e-9, seed_guess=None, rng=None):
        self.model = model
        self.c0 = np.asarray(
            focus_value.as_array()
            if isinstance(focus_value, MomentValue)
            else focus_value,
            dtype=float,
        )
        self.field = PeriodField(model, tol=tol)
        if seed_guess is None:
            rng = np.random.default_rng(17) if rng is None else rng
            pts = model.sample(rng, 4000)
            mv = np.array([model.moment(z) for z in pts])
            d = np.sum((mv - self.c0) ** 2, axis=1)
            seed_guess = pts[np.argmin(d)]
        self._guess = np.asarray(seed_guess, dtype=float)

    def form_at(self, a, b):
        """(tau1_form mod 1, tau2_form) of the paper-oriented branch at
        w = (a, b) relative to the focus value."""
        c = self.c0 + np.array([a, b])
        self.field.seed_from(fiber_point(self.model, c, self._guess))
        t1, t2 = self.field.raw(c)
        self._guess = self.field._seed
        # paper branch: tau2_form ~ (1/2pi) log|w| < 0 near the focus
        return (-t1 / TWO_PI) % 1.0, -t2 / TWO_PI


class NormalFormPeriodSource:
    """Exact period form of the normalized focus-focus model glued to a
    trivial outer part: alpha = d(singular part) + dh for a prescribed
    smooth h.  Used as the independent oracle for the fitting machinery."""

    def __init__(self, h_grad, cut_sign=1):
        self.h_grad = h_grad  # (a, b) -> (dh/da, dh/db)
        self.eps = cut_sign

    def form_at(self, a, b):
        ha, hb = self.h_grad(a, b)
        t1 = arg_cut(np.array(a), np.array(b), self.eps) / TWO_PI + ha
        t2 = np.log(np.hypot(a, b)) / TWO_PI + hb
        return float(t1) % 1.0, float(t2)


def _unwrap_and_integrate(src, a, b, edges, t1_frac, t2, eps):
    """Continuity-unwrap tau1 over the sample tree and path-integrate the
    form from the anchor sample (Simpson rule with midpoint evaluations
    of the period form).  Returns (tau1, A2)."""
    n_rings, n_theta = a.shape
    tau1 = np.full(a.shape, np.nan)
    A2 = np.full(a.shape, np.nan)
    # anchor: outer ring, sample farthest from the cut (middle of the walk)
    anchor = (0, n_theta // 2)
    th0 = arg_cut(a[anchor], b[anchor], eps)
    raw = t1_frac[anchor]
    tau1[anchor] = raw + np.round(th0 / TWO_PI - raw)
    A2[anchor] = 0.0
    adj = {}
    for (p, q, panels) in edges:
        adj.setdefault(p, []).append((q, panels))
        adj.setdefault(q, []).append((p, panels))

    def segment_integral(pa, pb, tau1_a, tau2_a, panels):
        """Composite-Simpson integral of the form along pa -> pb with
        continuity unwrapping; returns (integral, tau1 at pb)."""
        total = 0.0
        tau_prev, tau2_prev = tau1_a, tau2_a
        for kk in range(panels):
            p0 = pa + (kk / panels) * (pb - pa)
            p1 = pa + ((kk + 1) / panels) * (pb - pa)
            pm = 0.5 * (p0 + p1)
            t1m_f, tau2_m = src.form_at(pm[0], pm[1])
            tau_m = t1m_f + np.round(tau_prev - t1m_f)
            t11_f, tau2_1 = src.form_at(p1[0], p1[1])
            tau_1 = t11_f + np.round(tau_m - t11_f)
            d = p1 - p0
            total += ((tau_prev + 4.0 * tau_m + tau_1) * d[0]
                      + (tau2_prev + 4.0 * tau2_m + tau2_1) * d[1]) / 6.0
            tau_prev, tau2_prev = tau_1, tau2_1
        return total, tau_prev

    stack = [anchor]
    seen = {anchor}
    while stack:
        p = stack.pop()
        for (q, panels) in adj.get(p, []):
            if q in seen:
                continue
            seen.add(q)
            pa = np.array([a[p], b[p]])
            pb = np.array([a[q], b[q]])
            integral, tq = segment_integral(pa, pb, tau1[p], t2[p], panels)
            # the endpoint unwrap must match the node's own raw fraction
            tau1[q] = t1_frac[q] + np.round(tq - t1_frac[q])
            A2[q] = A2[p] + integral
            stack.append(q)
    return tau1, A2


def _fit_taylor(a, b, h, degree, weights):
    """Weighted LSQ of h on {monomials} + {monomials * log r}."""
    r = np.hypot(a, b)
    cols, labels = [np.ones_like(a)], [("const", 0, 0)]
    for d in range(1, degree + 1):
        for i in range(d + 1):
            j = d - i
            cols.append(a**i * b**j)
            labels.append(("poly", i, j))
    logr = np.log(r)
    for d in range(1, degree + 1):
        for i in range(d + 1):
            j = d - i
            cols.append(a**i * b**j * logr)
            labels.append(("log", i, j))
    X = np.column_stack(cols)
    W = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(X * W[:, None], h * W, rcond=None)
    resid = X @ coef - h
    rms = float(np.sqrt(np.average(resid**2, weights=weights)))
    poly = {}
    logs = {}
    for (kind, i, j), c in zip(labels, coef):
        if kind == "poly":
            poly[(i, j)] = float(c)
        elif kind == "log":
            logs[(i, j)] = float(c)
    return poly, logs, rms


def regularized_action(source, focus_value=None, radius=0.1, cut_sign=1,
                       degree=3, n_rings=4, n_theta=64, fit_tol=1e-3,
                       tol=1e-9, rng=None):
    """Regularized action from a model or a period source.

    ``source`` is an ``IntegrableModel`` (shooting is used to measure
    the period form; ``focus_value`` required) or any object with a
    ``form_at(a, b)`` method.  The disk of the given radius must contain
    no critical value besides the focus value itself.
    """
    if cut_sign not in (1, -1):
        raise DomainError("cut_sign must be +1 or -1")
    if hasattr(source, "form_at"):
        src = source
        c0 = MomentValue(0.0, 0.0) if focus_value is None else focus_value
    else:
        if focus_value is None:
            raise DomainError("focus_value required for a model source")
        c0 = (focus_value if isinstance(focus_value, MomentValue)
              else MomentValue(*focus_value))
        src = ModelPeriodSource(source, c0, tol=tol, rng=rng)

    a, b, edges = _sample_grid(radius, cut_sign, n_rings, n_theta)
    t1_frac = np.empty_like(a)
    t2 = np.empty_like(a)
    for k in range(a.shape[0]):
        for s in range(a.shape[1]):
            t1_frac[k, s], t2[k, s] = src.form_at(a[k, s], b[k, s])
    tau1, A2 = _unwrap_and_integrate(src, a, b, edges, t1_frac, t2, cut_sign)
    h = A2 - singular_part(a, b, cut_sign)

    flat_a, flat_b, flat_h = a.ravel(), b.ravel(), h.ravel()
    # equalize the weight of each annulus
    w = np.repeat(1.0 / a.shape[1], a.size).reshape(a.shape)
    poly, logs, rms = _fit_taylor(flat_a, flat_b, flat_h, degree,
                                  w.ravel())
    if rms > fit_tol:
        raise ResolutionInsufficientError(
            f"regularized-action fit residual {rms:.2e} exceeds {fit_tol:.0e}"
        )
    poly.pop((0, 0), None)
    if (1, 0) in poly:
        poly[(1, 0)] = poly[(1, 0)] % 1.0
    samples = np.column_stack([flat_a, flat_b, A2.ravel(), flat_h])
    return RegularizedAction(
        focus_value=c0,
        disk_radius=float(radius),
        cut_sign=cut_sign,
        degree=degree,
        taylor=poly,
        log_terms=logs,
        fit_residual=rms,
        samples=samples,
    )


def taylor_invariant(ra):
    """Normalized coefficient list [(i, j, value)] with C00 = 0 and the
    a-coefficient reduced into [0, 1); idempotent."""
    coeffs = dict(ra.taylor) if isinstance(ra, RegularizedAction) else dict(ra)
    coeffs.pop((0, 0), None)
    if (1, 0) in coeffs:
        coeffs[(1, 0)] = coeffs[(1, 0)] % 1.0
    return sorted((i, j, float(v)) for (i, j), v in coeffs.items())
