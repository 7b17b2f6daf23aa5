"""Cartographic maps with vertical cuts and semi-toric polygons.

The map f_eps(x, y) = (x, f2(x, y)) straightens the integral affine
structure of the moment image away from the chosen vertical cuts:
df2 = (tau1 da + tau2 db)/2*pi with the tau2 > 0 branch of the period
lattice, integrated along paths that never cross a cut.  f2 is measured
in action units, so the image of a toric system is its Delzant polytope
and the Duistermaat-Heckman function is the vertical extent of the
image.

The spine-and-columns scheme: a horizontal-ish polyline (the spine)
carries f2 across columns, crossing every cut line on its allowed side;
each column is then integrated vertically.  At the column of a cut the
period form has an integrable logarithmic singularity at the focus
value; column integrals toward it attach an analytic log-tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import least_squares

from ..actions.periods import TWO_PI, PeriodField, fiber_point, unwrap_tau1
from ..errors import DomainError, SemitoricError
from ..models import MomentValue
from .group import CutSpec, DecoratedPolygon


# ----------------------------------------------------------------------
# fiber extent in H over a J-level
# ----------------------------------------------------------------------

def _parallel_residual(model, z, level, pin=0):
    """Zero iff z sits on the level set of moment component ``pin`` with
    the restricted moment gradients parallel: 2x2 minors of the
    projected gradients, plus the level and constraint equations.  All
    terms are smooth in the ambient z."""
    P = model.tangent_projector(z)
    g = model.moment_gradients(z)
    u = P @ g[0]
    v = P @ g[1]
    m = len(u)
    minors = [u[i] * v[j] - u[j] * v[i] for i in range(m) for j in range(i + 1, m)]
    cons = list(model.constraint_residuals(z).values())
    return np.array(minors + [model.moment(z)[pin] - level] + cons)


def extremum_on_level(model, pin, level, guess):
    """Critical point of one moment component on a level set of the
    other (the continuation seed picks the branch)."""
    sol = least_squares(lambda w: _parallel_residual(model, w, level, pin),
                        guess, method="lm", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=600)
    z = model.project(sol.x)
    if np.linalg.norm(_parallel_residual(model, z, level, pin)) > 1e-7:
        raise DomainError(
            f"extremum on component-{pin} level {level} did not converge"
        )
    return z, model.moment(z)


def h_extremum(model, x, sign, guess):
    """Extremize H on the level {J = x} (sign picks the branch through
    the continuation seed; the wedge equations carry both)."""
    z, mv = extremum_on_level(model, 0, x, guess)
    return z, mv[1]


class FiberExtent:
    """b_lo(x), b_hi(x) with continuation seeds."""

    def __init__(self, model, rng=None):
        self.model = model
        rng = np.random.default_rng(23) if rng is None else rng
        pts = model.sample(rng, 6000)
        self._mv = np.array([model.moment(z) for z in pts])
        self._pts = pts
        self._seed_hi = None
        self._seed_lo = None

    def _cloud_seeds(self, x):
        width = 0.03 * (1.0 + np.ptp(self._mv[:, 0]))
        mask = np.abs(self._mv[:, 0] - x) < width
        while not mask.any():
            width *= 2
            mask = np.abs(self._mv[:, 0] - x) < width
        cand = self._pts[mask]
        mv = self._mv[mask]
        return [cand[np.argmax(mv[:, 1])], cand[np.argmin(mv[:, 1])]]

    def __call__(self, x):
        """Every converged candidate lies exactly on {J = x}, so the
        fiber extent is the min/max H over all of them (wrong-branch
        convergence is harmless)."""
        seeds = self._cloud_seeds(x)
        if self._seed_hi is not None:
            seeds = [self._seed_hi, self._seed_lo] + seeds
        results = []
        for guess in seeds:
            try:
                results.append(h_extremum(self.model, x, 0, guess))
            except DomainError:
                continue
        if not results:
            raise DomainError(f"fiber extent at J={x}: no extremum converged")
        z_hi, b_hi = max(results, key=lambda zb: zb[1])
        z_lo, b_lo = min(results, key=lambda zb: zb[1])
        self._seed_hi, self._seed_lo = z_hi, z_lo
        return b_lo, b_hi


# ----------------------------------------------------------------------
# the period-form integrator (time units / 2*pi, tau2 > 0 branch)
# ----------------------------------------------------------------------

class FormWalker:
    """Accumulates the integral of (tau1 da + tau2 db)/2*pi along a path
    with tau1-unwrap continuity; Simpson rule per segment."""

    def __init__(self, model, tol=1e-9, rng=None):
        self.field = PeriodField(model, tol=tol)
        self.model = model
        rng = np.random.default_rng(29) if rng is None else rng
        self._pts = model.sample(rng, 6000)
        self._mv = np.array([model.moment(z) for z in self._pts])
        self.c = None
        self.tau = None  # unwrapped (tau1, tau2), time units
        self.value = 0.0

    def jump_to(self, c):
        """Restart the walk at c (value reset to 0)."""
        c = np.asarray(c, dtype=float)
        i = np.argmin(np.sum((self._mv - c) ** 2, axis=1))
        self.field.seed_from(self._pts[i])
        t1, t2 = self.field.raw(c)
        if t1 > np.pi:
            t1 -= TWO_PI
        self.c = c
        self.tau = np.array([t1, t2])
        self.value = 0.0

    def _eval(self, c, ref_t1):
        t1r, t2 = self.field.raw(c)
        return np.array([unwrap_tau1(t1r, ref_t1), t2])

    def advance(self, c_next, panels=1):
        c_next = np.asarray(c_next, dtype=float)
        for k in range(panels):
            p0 = self.c
            p1 = self.c + (c_next - self.c) / (panels - k)
            pm = 0.5 * (p0 + p1)
            tau_m = self._eval(pm, self.tau[0])
            tau_1 = self._eval(p1, tau_m[0])
            d = p1 - p0
            self.value += (
                (self.tau[0] + 4 * tau_m[0] + tau_1[0]) * d[0]
                + (self.tau[1] + 4 * tau_m[1] + tau_1[1]) * d[1]
            ) / (6 * TWO_PI)
            self.c, self.tau = p1, tau_1
        return self.value


def _panels(dist, step=0.05):
    """Simpson panel count for a path of the given length."""
    return max(2, int(np.ceil(dist / step)))


def _logfit(walker, x, b_star, sgn, so):
    """Fit tau2 ~ p + q log u + r u + s u^2 (u = |b - b_star|) from
    samples on the sgn side of b_star; the polynomial block absorbs the
    smooth part of the period through second order."""
    ds, ts = [], []
    for fac in (1.0, 0.75, 0.55, 0.4, 0.28, 0.2):
        d = so * fac
        _, t2 = walker.field.raw(np.array([x, b_star + sgn * d]))
        ds.append(d)
        ts.append(t2)
    ds = np.asarray(ds)
    A = np.column_stack([np.ones_like(ds), np.log(ds), ds, ds * ds])
    coef, *_ = np.linalg.lstsq(A, np.asarray(ts), rcond=None)
    return tuple(coef)


def _logint(coef, u1, u2):
    """Integral of p + q log(u) + r u + s u^2 over u in [u1, u2]."""
    p, q, r, s = coef

    def F(u):
        if u <= 0:
            return 0.0
        return p * u + q * (u * np.log(u) - u) + r * u * u / 2 + s * u**3 / 3

    return F(u2) - F(u1)


@dataclass
class CartographicMap:
    model: object
    cut: CutSpec
    x_window: tuple
    xs: np.ndarray
    b_lo: np.ndarray
    b_hi: np.ndarray
    f2_lo: np.ndarray
    f2_hi: np.ndarray
    marked_images: list  # (x_i, f2 at focus), one per cut
    spine_y: np.ndarray
    spine_f2: np.ndarray
    _extent: object = field(repr=False, default=None)
    _tol: float = field(repr=False, default=1e-9)

    def column_f2(self, x, ys):
        """f2 at the points (x, y), walking from the nearest spine node
        horizontally at spine height and then vertically."""
        walker = FormWalker(self.model, tol=self._tol)
        i = int(np.argmin(np.abs(self.xs - x)))
        y0 = self.spine_y[i]
        out = []
        for y in ys:
            walker.jump_to(np.array([self.xs[i], y0]))
            walker.advance(np.array([x, y0]), panels=2)
            walker.advance(np.array([x, y]), panels=4)
            out.append(self.spine_f2[i] + walker.value)
        return np.array(out)


def _graded_advance(walker, x, y_from, y_to, foci=(), base_step=0.05):
    """Advance vertically with steps graded by the distance to nearby
    focus values (whose neighborhoods the period form varies on)."""
    span = abs(y_to - y_from)
    sgn = np.sign(y_to - y_from)
    b = y_from
    guard = 0
    while abs(y_to - b) > 1e-14 * max(1.0, abs(y_to)) and guard < 100000:
        guard += 1
        d = min((np.hypot(x - xf, b - yf) for (xf, yf) in foci), default=np.inf)
        half = abs(y_to - b)
        step = min(base_step, max(2e-4 * max(span, 1e-6), 0.2 * d), half)
        walker.advance(np.array([x, b + sgn * step]), panels=1)
        b += sgn * step
    return walker.value


def _column_integral(walker, x, y_from, y_to, n_nodes=9, singular_at=None,
                     boundary=False, foci=()):
    """Integral of tau2/2*pi along the vertical segment from y_from.

    ``singular_at``: b-value of a focus value on the segment.  If it is
    the far endpoint, the analytic logarithmic tail is attached; if it
    lies strictly inside, the integrable singularity is crossed with
    log-tails on both sides.  ``boundary``: the far end is an elliptic
    boundary where tau2 is smooth; a linearly extrapolated tail is used
    to avoid shooting on near-degenerate fibers.
    """
    span = y_to - y_from
    sgn = np.sign(span)
    interior_sing = (
        singular_at is not None
        and (singular_at - y_from) * (y_to - singular_at) > 0
    )
    if interior_sing:
        lower = _column_integral(walker, x, y_from, singular_at,
                                 n_nodes=n_nodes, singular_at=singular_at,
                                 foci=foci)
        so = 0.04 * abs(y_to - singular_at)
        coef = _logfit(walker, x, singular_at, sgn, so)
        tail = sgn * _logint(coef, 0.0, so) / TWO_PI
        rest = _column_integral(walker, x, singular_at + sgn * so, y_to,
                                n_nodes=n_nodes, boundary=boundary, foci=foci)
        return lower + tail + rest
    if singular_at is not None:
        so = 0.04 * abs(span)
        y_stop = y_to - sgn * so
        walker.jump_to(np.array([x, y_from]))
        _graded_advance(walker, x, y_from, y_stop, foci=((x, y_to),) + tuple(foci))
        total = walker.value
        coef = _logfit(walker, x, y_to, -sgn, so)
        return total + sgn * _logint(coef, 0.0, so) / TWO_PI
    if boundary:
        so = 5e-3 * abs(span)
        y_stop = y_to - sgn * so
        walker.jump_to(np.array([x, y_from]))
        _graded_advance(walker, x, y_from, y_stop, foci=foci)
        total = walker.value
        # quadratic extrapolation of the (boundary-smooth) tau2 over the
        # last stretch, integrated exactly across the tail
        t2_1 = walker.tau[1]
        _, t2_2 = walker.field.raw(np.array([x, y_to - 2 * sgn * so]))
        _, t2_3 = walker.field.raw(np.array([x, y_to - 3 * sgn * so]))
        # values at distances u = so, 2so, 3so; integrate fit over [0, so]
        c0 = 3 * t2_1 - 3 * t2_2 + t2_3
        c1 = (-2.5 * t2_1 + 4 * t2_2 - 1.5 * t2_3) / so
        c2 = (0.5 * t2_1 - t2_2 + 0.5 * t2_3) / so**2
        tail = c0 * so + c1 * so**2 / 2 + c2 * so**3 / 3
        return total + sgn * tail / TWO_PI
    walker.jump_to(np.array([x, y_from]))
    _graded_advance(walker, x, y_from, y_to, foci=foci)
    return walker.value


def cartographic_map(model, cut, x_window, resolution=33, tol=1e-9,
                     margin=0.02, rng=None):
    """Cartographic map relative to the cut choices.

    ``x_window`` is the closed J-range to cover; each cut must be an
    interior vertical line of the window.  Columns are integrated from a
    spine polyline that crosses every cut line strictly on the allowed
    side of its focus value.
    """
    rng = np.random.default_rng(31) if rng is None else rng
    if not isinstance(cut, CutSpec):
        cut = CutSpec(tuple(cut[0]), tuple(cut[1]))
    xmin, xmax = x_window
    extent = FiberExtent(model, rng=rng)
    span_x = xmax - xmin
    dx = margin * span_x
    xs = list(np.linspace(xmin + dx, xmax - dx, int(resolution)))
    for (xf, _), _e in zip(cut.focus_values, cut.epsilons):
        if not (xmin + dx < xf < xmax - dx):
            raise DomainError("cut line outside the covered window")
        xs.append(xf)
    xs = np.array(sorted(set(xs)))

    b_lo = np.empty_like(xs)
    b_hi = np.empty_like(xs)
    for i, x in enumerate(xs):
        b_lo[i], b_hi[i] = extent(x)

    # spine heights: near the bottom by default; near the top across
    # columns whose cut points down
    frac = np.full_like(xs, 0.2)
    for (xf, yf), e in zip(cut.focus_values, cut.epsilons):
        if e == -1:
            sel = np.abs(xs - xf) < 0.08 * span_x
            frac[sel] = 0.8
    spine_y = b_lo + frac * (b_hi - b_lo)

    # walk the spine along straight chords between adjacent nodes; cut
    # lines are grid columns, so chords touch them only at spine nodes,
    # which sit on the allowed side of their focus value
    walker = FormWalker(model, tol=tol, rng=rng)
    spine_f2 = np.empty_like(xs)
    walker.jump_to(np.array([xs[0], spine_y[0]]))
    spine_f2[0] = 0.0
    for i in range(1, len(xs)):
        dist = np.hypot(xs[i] - xs[i - 1], spine_y[i] - spine_y[i - 1])
        walker.advance(np.array([xs[i], spine_y[i]]), panels=_panels(dist))
        spine_f2[i] = walker.value

    # columns: boundary values of f2
    f2_lo = np.empty_like(xs)
    f2_hi = np.empty_like(xs)
    cut_cols = {}
    for k, ((xf, yf), e) in enumerate(zip(cut.focus_values, cut.epsilons)):
        cut_cols[int(np.argmin(np.abs(xs - xf)))] = (k, yf, e)
    marked_images = [None] * cut.m_ff
    colwalk = FormWalker(model, tol=tol, rng=rng)
    for i, x in enumerate(xs):
        sing = cut_cols.get(i)
        foci = tuple(cut.focus_values)
        if sing is None:
            up = _column_integral(colwalk, x, spine_y[i], b_hi[i],
                                  boundary=True, foci=foci)
            dn = _column_integral(colwalk, x, spine_y[i], b_lo[i],
                                  boundary=True, foci=foci)
        else:
            # the boundary value beyond the focus is the continuous
            # extension of f2 through the singular fiber (f_eps is a
            # homeomorphism; only its derivative jumps across the cut)
            k, yf, e = sing
            if e == 1:
                up = _column_integral(colwalk, x, spine_y[i], b_hi[i],
                                      boundary=True, singular_at=yf, foci=foci)
                dn = _column_integral(colwalk, x, spine_y[i], b_lo[i],
                                      boundary=True, foci=foci)
            else:
                up = _column_integral(colwalk, x, spine_y[i], b_hi[i],
                                      boundary=True, foci=foci)
                dn = _column_integral(colwalk, x, spine_y[i], b_lo[i],
                                      boundary=True, singular_at=yf, foci=foci)
            mk = _column_integral(colwalk, x, spine_y[i], yf, singular_at=yf)
            marked_images[k] = (x, spine_f2[i] + mk)
        f2_hi[i] = spine_f2[i] + up
        f2_lo[i] = spine_f2[i] + dn
    return CartographicMap(
        model, cut, (xmin, xmax), xs, b_lo, b_hi, f2_lo, f2_hi,
        marked_images, spine_y, spine_f2, extent, tol,
    )


# ----------------------------------------------------------------------
# _column_integral through a cut column needs to pass the singular point
# when the target lies beyond it; columns stop at the boundary, so the
# only through-singular case is the marked point itself (handled above).
# ----------------------------------------------------------------------

def _snap(x, max_den=10**6, tol=1e-6):
    """Smallest-denominator rational within tol (continued-fraction
    best approximations, denominator capped); unsnappable values are
    kept exactly and flagged."""
    x = float(x)
    cap = 1
    while cap <= max_den:
        fr = Fraction(x).limit_denominator(cap)
        if abs(float(fr) - x) < tol:
            return fr, True
        cap *= 4
    return Fraction(x), False


def _fit_line(xs, ys):
    A = np.column_stack([xs, np.ones_like(xs)])
    (m, c), *_ = np.linalg.lstsq(A, ys, rcond=None)
    return m, c


def extract_polygon(cm, angle_tol=1e-3, rng=None):
    """Decorated semi-toric polygon of a cartographic map.

    The boundary polyline (bottom edge left-to-right, top edge right-to-
    left, closed by the window ends) is traced; vertices are direction
    changes beyond ``angle_tol``; their coordinates are refined by
    intersecting the straight runs on either side and snapped to small
    rationals.  Twisting integers are initialized to 0: the polygon is
    its own reference gauge and kappa bookkeeping is purely
    combinatorial through the group actions.
    """
    xs, lo, hi = cm.xs, cm.f2_lo, cm.f2_hi
    xmin, xmax = cm.x_window

    # breakpoint detection by direction change on each boundary curve
    def runs(ys):
        """Split columns into maximal straight runs of the curve."""
        breaks = []
        for i in range(1, len(xs) - 1):
            v1 = np.array([xs[i] - xs[i - 1], ys[i] - ys[i - 1]])
            v2 = np.array([xs[i + 1] - xs[i], ys[i + 1] - ys[i]])
            ang = abs(np.arctan2(np.cross(v1, v2), v1 @ v2))
            if ang > angle_tol:
                breaks.append(i)
        # merge adjacent breaks (a vertex between two columns flags both)
        merged = []
        for i in breaks:
            if merged and i - merged[-1][-1] <= 1:
                merged[-1].append(i)
            else:
                merged.append([i])
        segs = []
        start = 0
        for grp in merged:
            end = grp[0]
            segs.append((start, end))
            start = grp[-1] + 1
        segs.append((start, len(xs) - 1))
        return segs

    def lines(ys, segs):
        out = []
        for i0, i1 in segs:
            sel = slice(i0, i1 + 1)
            if i1 - i0 < 1:
                sel = slice(max(0, i0 - 1), min(len(xs), i1 + 2))
            out.append(_fit_line(xs[sel], ys[sel]))
        return out

    lo_segs = runs(lo)
    hi_segs = runs(hi)
    lo_lines = lines(lo, lo_segs)
    hi_lines = lines(hi, hi_segs)

    def isect(l1, l2):
        m1, c1 = l1
        m2, c2 = l2
        if abs(m1 - m2) < 1e-12:
            return None
        x = (c2 - c1) / (m1 - m2)
        return x, m1 * x + c1

    def curve_vertices(lns):
        vs = []
        for l1, l2 in zip(lns, lns[1:]):
            pt = isect(l1, l2)
            if pt is not None:
                vs.append(pt)
        return vs

    def at_end(lns, x):
        m, c = lns
        return m * x + c

    verts = []
    # bottom-left end
    gap_l = at_end(hi_lines[0], xmin) - at_end(lo_lines[0], xmin)
    gap_r = at_end(hi_lines[-1], xmax) - at_end(lo_lines[-1], xmax)
    vert_tol = 1e-3 * max(1.0, np.max(hi) - np.min(lo))
    if gap_l > vert_tol:
        verts.append((xmin, at_end(lo_lines[0], xmin)))
    else:
        pt = isect(lo_lines[0], hi_lines[0])
        verts.append(pt if pt is not None else (xmin, at_end(lo_lines[0], xmin)))
    verts.extend(curve_vertices(lo_lines))
    if gap_r > vert_tol:
        verts.append((xmax, at_end(lo_lines[-1], xmax)))
        verts.append((xmax, at_end(hi_lines[-1], xmax)))
    else:
        pt = isect(lo_lines[-1], hi_lines[-1])
        verts.append(pt if pt is not None else (xmax, at_end(lo_lines[-1], xmax)))
    verts.extend(curve_vertices(hi_lines)[::-1])
    if gap_l > vert_tol:
        verts.append((xmin, at_end(hi_lines[0], xmin)))

    # vertical-translation gauge: bottom-left vertex at height 0
    shift = verts[0][1]
    verts = [(vx, vy - shift) for (vx, vy) in verts]

    snapped = []
    unsnapped = []
    for (vx, vy) in verts:
        fx, okx = _snap(vx)
        fy, oky = _snap(vy)
        snapped.append((fx, fy))
        if not (okx and oky):
            unsnapped.append((float(vx), float(vy)))

    marked = []
    for (mx, my) in cm.marked_images:
        fx, _ = _snap(mx)
        marked.append(((fx, Fraction(float(my - shift))), 0))
    return DecoratedPolygon(
        epsilons=tuple(cm.cut.epsilons),
        vertices=tuple(snapped),
        marked=tuple(marked),
        unsnapped=tuple(unsnapped),
    )
