"""Period lattices on regular fibers, action integrals, monodromy.

Times are physical flow times: the first period of every semi-toric
built-in is (2*pi, 0) because J generates a 2*pi-periodic circle
action.  The associated *period form* alpha = (tau1 da + tau2 db)/2*pi
(the normalization in which the action functions g of the local torus
actions satisfy dg = alpha) is what gets integrated by
``action_integrals`` and friends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, NonClosedFormError, TransportFailureError
from ..models import MomentValue, first_return
from ..models.defs import ChartPoint

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class PeriodBasis:
    at: MomentValue
    first: tuple = (TWO_PI, 0.0)
    second: tuple = (0.0, 0.0)  # (tau1 in [0, 2*pi), tau2 > 0)
    branch_tag: int = 0  # multiples of the first period absorbed

    def __post_init__(self):
        t1, t2 = self.second
        if not t2 > 0:
            raise DomainError("second period must have tau2 > 0")
        if not (0 <= t1 < TWO_PI):
            raise DomainError("tau1 must be normalized into [0, 2*pi)")


@dataclass(frozen=True)
class MonodromyMatrix:
    entries: tuple  # ((int, int), (int, int))

    def __post_init__(self):
        m = self.entries
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        if det != 1:
            raise DomainError("monodromy matrix must lie in SL(2, Z)")

    def as_array(self):
        return np.array(self.entries, dtype=int)

    def __matmul__(self, other):
        a = self.as_array() @ other.as_array()
        return MonodromyMatrix(tuple(tuple(int(x) for x in row) for row in a))


@dataclass
class ActionChart:
    region: tuple  # ((amin, amax), (bmin, bmax))
    base: MomentValue
    grid_a: np.ndarray
    grid_b: np.ndarray
    g1: np.ndarray  # = a - a0
    g2: np.ndarray
    tau1: np.ndarray  # unwrapped, time units
    tau2: np.ndarray
    max_plaquette_defect: float


# ----------------------------------------------------------------------
# fiber seeds
# ----------------------------------------------------------------------

def fiber_point(model, c, guess, tol=1e-12, max_iter=60):
    """Gauss-Newton solve for a point on F^{-1}(c) starting from guess."""
    target = np.asarray([c.a, c.b] if isinstance(c, MomentValue) else c,
                        dtype=float)
    z = model.project(np.asarray(guess, dtype=float))
    for _ in range(max_iter):
        r = target - model.moment(z)
        if np.linalg.norm(r) < tol:
            return z
        basis = model.tangent_basis(z)
        dF = model.moment_gradients(z) @ basis
        step, *_ = np.linalg.lstsq(dF, r, rcond=None)
        if np.linalg.norm(step) > 0.5:
            step *= 0.5 / np.linalg.norm(step)
        z = model.project(z + basis @ step)
    r = target - model.moment(z)
    if np.linalg.norm(r) < 1e-9:
        return z
    raise DomainError(
        f"{model.name}: could not reach fiber F^-1({target}) "
        f"(residual {np.linalg.norm(r):.2e})"
    )


def period_basis(model, c, seed, tol=1e-9, t_cap=1e4):
    """Basis of the period lattice over the regular value c.

    The second basis vector is found by a shooting method: the H-flow is
    followed from the seed until its first return to the J-orbit through
    the seed; the return time is tau2 and the closing J-flow time is
    tau1 (normalized into [0, 2*pi)).
    """
    z = seed.coords if isinstance(seed, ChartPoint) else np.asarray(seed, float)
    cv = c if isinstance(c, MomentValue) else MomentValue(*c)
    res = np.linalg.norm(model.moment(model.project(z)) - cv.as_array())
    if res > 1e-8:
        raise DomainError(
            f"seed is not on the fiber of {cv} (moment residual {res:.1e})"
        )
    tau2, tau1, _ = first_return(model, z, t_cap=t_cap, rtol=tol)
    return PeriodBasis(at=cv, second=(tau1, tau2))


# ----------------------------------------------------------------------
# continuous branches of the period field
# ----------------------------------------------------------------------

class PeriodField:
    """Second-period evaluations with fiber-seed continuation."""

    def __init__(self, model, tol=1e-9, t_cap=1e4):
        self.model = model
        self.tol = tol
        self.t_cap = t_cap
        self._seed = None
        self.calls = 0

    def seed_from(self, z):
        self._seed = np.asarray(z, dtype=float)

    def raw(self, c):
        """(tau1 mod 2*pi, tau2) at the base point c."""
        if self._seed is None:
            raise DomainError("period field needs an initial fiber seed")
        z = fiber_point(self.model, c, self._seed)
        self._seed = z
        pb = period_basis(self.model, MomentValue(*np.asarray(c, float)), z,
                          tol=self.tol, t_cap=self.t_cap)
        self.calls += 1
        return np.array(pb.second)


def unwrap_tau1(tau1_raw, ref):
    """Shift tau1_raw by the multiple of 2*pi closest to a reference."""
    k = np.round((ref - tau1_raw) / TWO_PI)
    return tau1_raw + TWO_PI * k


# ----------------------------------------------------------------------
# action integrals over a grid
# ----------------------------------------------------------------------

def action_integrals(model, region, c0, n_a=12, n_b=12, tol=1e-9,
                     plaquette_tol=1e-4, seed_guess=None, rng=None):
    """Action chart on a simply connected, critical-value-free box.

    g2 is the path integral of the second period form alpha/2*pi from c0
    along grid paths; path-independence is verified on every plaquette.
    g1(c) = a - a0.
    """
    (amin, amax), (bmin, bmax) = region
    c0 = c0 if isinstance(c0, MomentValue) else MomentValue(*c0)
    ga = np.linspace(amin, amax, n_a)
    gb = np.linspace(bmin, bmax, n_b)
    field = PeriodField(model, tol=tol)
    if seed_guess is None:
        rng = np.random.default_rng(5) if rng is None else rng
        pts = model.sample(rng, 4000)
        mv = np.array([model.moment(z) for z in pts])
        i = np.argmin((mv[:, 0] - c0.a) ** 2 + (mv[:, 1] - c0.b) ** 2)
        seed_guess = pts[i]
    field.seed_from(seed_guess)

    tau1 = np.full((n_a, n_b), np.nan)
    tau2 = np.full((n_a, n_b), np.nan)
    g2 = np.full((n_a, n_b), np.nan)

    # march column by column from the node nearest c0
    i0 = int(np.argmin(abs(ga - c0.a)))
    j0 = int(np.argmin(abs(gb - c0.b)))
    order = []
    for di, i in sorted((abs(i - i0), i) for i in range(n_a)):
        col = [(abs(j - j0), j) for j in range(n_b)]
        for dj, j in sorted(col):
            order.append((i, j))

    def neighbor_done(i, j):
        for (pi, pj) in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if 0 <= pi < n_a and 0 <= pj < n_b and not np.isnan(tau1[pi, pj]):
                return pi, pj
        return None

    for (i, j) in order:
        c = np.array([ga[i], gb[j]])
        t1r, t2 = field.raw(c)
        prev = neighbor_done(i, j)
        if prev is None:
            t1 = t1r if t1r < np.pi else t1r - TWO_PI
        else:
            t1 = unwrap_tau1(t1r, tau1[prev])
        tau1[i, j], tau2[i, j] = t1, t2
        if prev is None:
            g2[i, j] = 0.0
        else:
            pi, pj = prev
            da = ga[i] - ga[pi]
            db = gb[j] - gb[pj]
            g2[i, j] = g2[pi, pj] + 0.5 * (
                (tau1[pi, pj] + t1) * da + (tau2[pi, pj] + t2) * db
            ) / TWO_PI

    # plaquette closedness check
    defect = 0.0
    for i in range(n_a - 1):
        for j in range(n_b - 1):
            da = ga[i + 1] - ga[i]
            db = gb[j + 1] - gb[j]
            loop = 0.5 * (
                (tau1[i, j] + tau1[i + 1, j]) * da
                + (tau2[i + 1, j] + tau2[i + 1, j + 1]) * db
                - (tau1[i + 1, j + 1] + tau1[i, j + 1]) * da
                - (tau2[i, j + 1] + tau2[i, j]) * db
            ) / TWO_PI
            defect = max(defect, abs(loop))
    if defect > plaquette_tol:
        raise NonClosedFormError(
            f"plaquette defect {defect:.2e} exceeds {plaquette_tol:.0e}; "
            "is there a critical value inside the region?"
        )

    # normalize at the base node
    g2 -= g2[i0, j0]
    g1 = np.broadcast_to((ga - c0.a)[:, None], g2.shape).copy()
    return ActionChart(region, c0, ga, gb, g1, g2, tau1, tau2, defect)


# ----------------------------------------------------------------------
# monodromy by period transport
# ----------------------------------------------------------------------

def _resample(loop, max_step):
    """Close the polyline and subdivide to the requested step."""
    pts = [np.asarray(p.as_array() if isinstance(p, MomentValue) else p, float)
           for p in loop]
    if np.linalg.norm(pts[0] - pts[-1]) > 1e-14:
        pts.append(pts[0])
    out = [pts[0]]
    for p, q in zip(pts, pts[1:]):
        seg = np.linalg.norm(q - p)
        n = max(1, int(np.ceil(seg / max_step)))
        for k in range(1, n + 1):
            out.append(p + (q - p) * (k / n))
    return out


def classical_monodromy(model, loop, tol=1e-9, max_step=0.1,
                        residual_tol=1e-3, seed_guess=None, rng=None,
                        return_residual=False):
    """Holonomy of the period lattice along a closed base loop.

    The basis ((2*pi, 0), (tau1, tau2)) is transported by nearest
    continuation of the second period; after closing the loop the
    returned basis is expressed in the starting one.  Entries must round
    to integers with residual below ``residual_tol``.
    """
    pts = _resample(loop, max_step)
    field = PeriodField(model, tol=tol)
    if seed_guess is None:
        rng = np.random.default_rng(5) if rng is None else rng
        samples = model.sample(rng, 4000)
        mv = np.array([model.moment(z) for z in samples])
        i = np.argmin(np.sum((mv - pts[0]) ** 2, axis=1))
        seed_guess = samples[i]
    field.seed_from(seed_guess)

    t1_raw, t2 = field.raw(pts[0])
    t1_start, t2_start = t1_raw, t2
    t1_prev, t2_prev = t1_raw, t2
    k = 0
    while k < len(pts) - 1:
        c_next = pts[k + 1]
        t1n_raw, t2n = field.raw(c_next)
        t1n = unwrap_tau1(t1n_raw, t1_prev)
        if (abs(t2n - t2_prev) > 0.05 * max(t2n, t2_prev)
                or abs(t1n - t1_prev) > 0.3 * TWO_PI):
            mid = 0.5 * (pts[k] + c_next)
            if np.linalg.norm(c_next - pts[k]) < 1e-6:
                raise TransportFailureError(
                    "period transport step would not converge",
                    location=tuple(mid),
                )
            pts.insert(k + 1, mid)
            continue
        t1_prev, t2_prev = t1n, t2n
        k += 1

    m_float = (t1_prev - t1_start) / TWO_PI
    m = int(np.round(m_float))
    residual = max(abs(m_float - m), abs(t2_prev - t2_start) / max(1.0, t2_start))
    if residual >= residual_tol:
        raise TransportFailureError(
            f"transport closed with residual {residual:.2e} (>= {residual_tol})",
            location=tuple(pts[0]), residual=residual,
        )
    mat = MonodromyMatrix(((1, 0), (m, 1)))
    if return_residual:
        return mat, residual
    return mat


def rectangle_loop(center, half_width, half_height, ccw=True):
    """Axis-aligned rectangle loop around a base point."""
    cx, cy = (center.a, center.b) if isinstance(center, MomentValue) else center
    w, h = half_width, half_height
    pts = [
        (cx - w, cy - h),
        (cx + w, cy - h),
        (cx + w, cy + h),
        (cx - w, cy + h),
        (cx - w, cy - h),
    ]
    if not ccw:
        pts = pts[::-1]
    return [np.array(p) for p in pts]
