"""Recovering classical data from a joint spectrum.

Convex hulls use exact orientation predicates (floating-point filter
with a Fraction fallback), so degenerate inputs are handled without
epsilon tuning.  Quantum monodromy transports a local lattice cell of
the joint spectrum around a loop by nearest-point continuation, the
discrete counterpart of the period-lattice transport.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, TransportFailureError
from .quantum import JointSpectrum


# ----------------------------------------------------------------------
# exact-predicate convex hull
# ----------------------------------------------------------------------

def _orient(o, a, b):
    """Sign of the cross product (a - o) x (b - o); exact."""
    ax, ay = a[0] - o[0], a[1] - o[1]
    bx, by = b[0] - o[0], b[1] - o[1]
    det = ax * by - ay * bx
    # conservative floating-point error bound for the 2x2 determinant
    err = 4e-16 * (abs(ax * by) + abs(ay * bx)) + 1e-300
    if abs(det) > err:
        return 1 if det > 0 else -1
    det_exact = (
        Fraction(float(a[0])) - Fraction(float(o[0]))
    ) * (Fraction(float(b[1])) - Fraction(float(o[1]))) - (
        Fraction(float(a[1])) - Fraction(float(o[1]))
    ) * (
        Fraction(float(b[0])) - Fraction(float(o[0]))
    )
    return (det_exact > 0) - (det_exact < 0)


@dataclass(frozen=True)
class ConvexHull2D:
    vertices: tuple  # counterclockwise, no three collinear kept

    def __post_init__(self):
        object.__setattr__(
            self, "vertices", tuple((float(x), float(y)) for x, y in self.vertices)
        )

    @property
    def n(self):
        return len(self.vertices)

    def as_array(self):
        return np.array(self.vertices)


def convex_hull(points):
    """Monotone-chain hull with exact orientation (strict turns only,
    so collinear interior points are dropped)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise DomainError("convex_hull expects a non-empty (n, 2) array")
    uniq = sorted(set(map(tuple, pts)))
    if len(uniq) == 1:
        return ConvexHull2D((uniq[0],))
    if len(uniq) == 2:
        return ConvexHull2D(tuple(uniq))

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _orient(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = chain(uniq)
    upper = chain(reversed(uniq))
    verts = lower[:-1] + upper[:-1]
    if len(verts) < 3:  # all points collinear
        return ConvexHull2D((uniq[0], uniq[-1]))
    return ConvexHull2D(tuple(verts))


def _point_segment_dist(p, a, b):
    ab = (b[0] - a[0], b[1] - a[1])
    ap = (p[0] - a[0], p[1] - a[1])
    denom = ab[0] ** 2 + ab[1] ** 2
    if denom == 0:
        return np.hypot(*ap)
    t = min(1.0, max(0.0, (ap[0] * ab[0] + ap[1] * ab[1]) / denom))
    return np.hypot(p[0] - a[0] - t * ab[0], p[1] - a[1] - t * ab[1])


def _point_hull_dist(p, hull):
    vs = hull.vertices
    if len(vs) == 1:
        return np.hypot(p[0] - vs[0][0], p[1] - vs[0][1])
    return min(
        _point_segment_dist(p, vs[i], vs[(i + 1) % len(vs)])
        for i in range(len(vs))
    )


def hausdorff_distance(A, B):
    """Hausdorff distance between convex hulls (vertex-to-boundary is
    enough for convex sets... of their boundaries' vertex sets)."""
    if A.n == 0 or B.n == 0:
        raise DomainError("hausdorff_distance needs non-empty hulls")
    d_ab = max(_point_hull_dist(v, B) for v in A.vertices)
    d_ba = max(_point_hull_dist(v, A) for v in B.vertices)
    return max(d_ab, d_ba)


# ----------------------------------------------------------------------
# lattice transport on joint spectra
# ----------------------------------------------------------------------

@dataclass
class LatticeCell:
    base: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        det = self.v1[0] * self.v2[1] - self.v1[1] * self.v2[0]
        if abs(det) < 1e-12:
            raise DomainError("degenerate lattice cell")


@dataclass
class InverseReport:
    hull: object = None
    hausdorff_by_hbar: list = field(default_factory=list)
    mff_estimate: int = 0
    focus_estimates: list = field(default_factory=list)
    monodromies: list = field(default_factory=list)
    volume_invariants: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _local_cell(tree, pts, c, hbar):
    """Lattice cell of the joint spectrum near c: base = nearest point,
    (v1, v2) = shortest independent displacements to its neighbors."""
    _, idx = tree.query(c, k=min(13, len(pts)))
    base = pts[idx[0]]
    cands = pts[idx[1:]] - base
    order = np.argsort(np.hypot(cands[:, 0], cands[:, 1]))
    v1 = None
    v2 = None
    for i in order:
        v = cands[i]
        if v1 is None:
            v1 = v
            continue
        det = v1[0] * v[1] - v1[1] * v[0]
        if abs(det) > 0.05 * hbar * hbar:
            v2 = v
            break
    if v1 is None or v2 is None:
        raise TransportFailureError(
            "cannot resolve a lattice cell", location=tuple(c)
        )
    return LatticeCell(base, v1, v2)


def _snap_cell(tree, pts, base_pred, v1_pred, v2_pred, hbar, tol_frac=0.2):
    """Snap a predicted cell to actual spectrum points; residuals beyond
    tol_frac * hbar (or ambiguous competitors) fail the transport."""
    out = []
    for pred in (base_pred, base_pred + v1_pred, base_pred + v2_pred):
        d, i = tree.query(pred, k=2)
        if d[0] > tol_frac * hbar:
            raise TransportFailureError(
                f"lattice point {d[0]/hbar:.2f}*hbar from prediction",
                location=tuple(pred), residual=d[0] / hbar,
            )
        if d[1] - d[0] < 0.2 * tol_frac * hbar and d[1] < 0.6 * hbar:
            raise TransportFailureError(
                "ambiguous lattice continuation (two candidates)",
                location=tuple(pred),
            )
        out.append(pts[i[0]])
    base, p1, p2 = out
    return base, p1 - base, p2 - base


def quantum_monodromy(spec, loop, step_frac=0.5, tol_frac=0.2,
                      return_residual=False):
    """Integer holonomy of the joint-spectrum lattice around a loop.

    A cell (base; v1, v2) is transported by nearest-lattice-point
    continuation along the (closed) polyline; the returned cell is
    expressed in the starting one and must round to integers within
    0.2.
    """
    pts = spec.cloud()
    if len(pts) < 8:
        raise DomainError("spectrum too sparse for lattice transport")
    tree = cKDTree(pts)
    hbar = spec.hbar
    path = [np.asarray(p, dtype=float) for p in loop]
    if np.linalg.norm(path[0] - path[-1]) > 1e-12:
        path.append(path[0])
    dense = [path[0]]
    for p, q in zip(path, path[1:]):
        seg = np.linalg.norm(q - p)
        n = max(1, int(np.ceil(seg / (step_frac * hbar))))
        for k in range(1, n + 1):
            dense.append(p + (q - p) * (k / n))

    cell0 = _local_cell(tree, pts, dense[0], hbar)
    base, v1, v2 = cell0.base, cell0.v1.copy(), cell0.v2.copy()
    for c in dense[1:]:
        # move the base towards the current path point by whole cells,
        # then snap the translated frame to actual spectrum points
        delta = c - base
        A = np.column_stack([v1, v2])
        steps = np.rint(np.linalg.solve(A, delta))
        base_pred = base + A @ steps
        base, v1, v2 = _snap_cell(tree, pts, base_pred, v1, v2, hbar, tol_frac)
    # express the returned frame in the starting one
    A0 = np.column_stack([cell0.v1, cell0.v2])
    M = np.linalg.solve(A0, np.column_stack([v1, v2]))
    Mi = np.rint(M)
    resid = float(np.abs(M - Mi).max())
    if resid >= tol_frac:
        raise TransportFailureError(
            f"monodromy entries {resid:.2f} from integers",
            location=tuple(dense[0]), residual=resid,
        )
    from .actions.periods import MonodromyMatrix

    mat = MonodromyMatrix(tuple(tuple(int(x) for x in row) for row in Mi))
    if return_residual:
        return mat, resid
    return mat


def rect_loop(center, half_w, half_h):
    cx, cy = center
    return [
        np.array([cx - half_w, cy - half_h]),
        np.array([cx + half_w, cy - half_h]),
        np.array([cx + half_w, cy + half_h]),
        np.array([cx - half_w, cy + half_h]),
        np.array([cx - half_w, cy - half_h]),
    ]


def detect_focus_focus(spec, region=None, loop_size=None, margin=None):
    """Scan overlapping small rectangular loops; centers with
    non-identity lattice holonomy cluster (radius ~3*hbar) into
    focus-value estimates.

    Adjacent loop centers are spaced by the loop half-size, so every
    interior point of the probed region is enclosed by some loop.
    Ambiguous transports are skipped and reported in the notes list.
    """
    hbar = spec.hbar
    pts = spec.cloud()
    if region is None:
        (mu_lo, mu_hi), (lam_lo, lam_hi) = spec.window
    else:
        (mu_lo, mu_hi), (lam_lo, lam_hi) = region
    margin = 4 * hbar if margin is None else margin
    loop_size = 5 * hbar if loop_size is None else loop_size
    spacing = 2 * hbar
    nx = max(2, int(np.ceil((mu_hi - mu_lo - 2 * margin) / spacing)) + 1)
    ny = max(2, int(np.ceil((lam_hi - lam_lo - 2 * margin) / spacing)) + 1)
    hits = []
    notes = []
    for cx in np.linspace(mu_lo + margin, mu_hi - margin, nx):
        for cy in np.linspace(lam_lo + margin, lam_hi - margin, ny):
            # only probe where the lattice is locally resolvable
            d, _ = tree_query_count(pts, (cx, cy), 2.5 * loop_size)
            if d < 12:
                continue
            try:
                M = quantum_monodromy(spec, rect_loop((cx, cy), loop_size,
                                                      loop_size))
            except (TransportFailureError, DomainError) as exc:
                notes.append(f"({cx:.3f},{cy:.3f}): {exc}")
                continue
            if not np.array_equal(M.as_array(), np.eye(2, dtype=int)):
                hits.append((cx, cy))
    # cluster hits
    clusters = []
    for h in hits:
        for cl in clusters:
            if np.hypot(h[0] - np.mean([p[0] for p in cl]),
                        h[1] - np.mean([p[1] for p in cl])) < 3 * hbar + loop_size:
                cl.append(h)
                break
        else:
            clusters.append([h])
    estimates = [
        (float(np.mean([p[0] for p in cl])), float(np.mean([p[1] for p in cl])))
        for cl in clusters
    ]
    return estimates, notes


def tree_query_count(pts, c, radius):
    tree = cKDTree(pts)
    idx = tree.query_ball_point(np.asarray(c, dtype=float), radius)
    return len(idx), idx


def volume_invariant(spec, focus_estimate):
    """hbar times the number of joint eigenvalues on the J-line through
    the focus estimate lying strictly below its lambda (a Weyl count of
    the action distance to the bottom edge of the polygon)."""
    hbar = spec.hbar
    pts = spec.cloud()
    mus = np.unique(pts[:, 0])
    mu_f, lam_f = focus_estimate
    i = np.argmin(np.abs(mus - mu_f))
    mu_line = mus[i]
    warn = None
    if abs(mu_line - mu_f) > 0.25 * hbar:
        warn = (f"J-line through {mu_f:.4f} off the eigenvalue grid; "
                f"using {mu_line:.4f}")
    sel = np.abs(pts[:, 0] - mu_line) < 1e-9
    count = int(np.sum(pts[sel, 1] < lam_f))
    return hbar * count, warn


def _boundary_refinement(model, window, n=50, rng=None):
    """Exact points on the boundary of F(M) near the window: extremes of
    each moment component along level sets of the other, clipped to the
    window (elliptic-regular curves of the bifurcation diagram)."""
    from .cartography.carto import extremum_on_level

    rng = np.random.default_rng(303) if rng is None else rng
    (mu_lo, mu_hi), (lam_lo, lam_hi) = window
    pts = model.sample(rng, 5000)
    mv = _moment_map_vectorized(model, pts)
    out = []
    for pin, lo, hi in ((0, mu_lo, mu_hi), (1, lam_lo, lam_hi)):
        other = 1 - pin
        levels = np.linspace(lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo), n)
        for pick in (np.argmin, np.argmax):
            sel = (mv[:, pin] > lo) & (mv[:, pin] < hi)
            if not sel.any():
                continue
            cand = pts[sel][pick(mv[sel][:, other])]
            z = cand
            for lev in levels:
                try:
                    z, val = extremum_on_level(model, pin, lev, z)
                except DomainError:
                    continue
                out.append(val)
    out = [
        v for v in out
        if mu_lo - 1e-9 <= v[0] <= mu_hi + 1e-9
        and lam_lo - 1e-9 <= v[1] <= lam_hi + 1e-9
    ]
    return np.array(out) if out else np.empty((0, 2))


def classical_image_hull(model, window, n_samples=10**6, rng=None,
                         momentum_scale=None, refine_boundary=True):
    """Convex hull of F(M) within the window from quasi-random sampling,
    an inner approximation sharpened by exact boundary points along the
    elliptic-regular curves."""
    rng = np.random.default_rng(101) if rng is None else rng
    kw = {}
    if momentum_scale is not None:
        kw["momentum_scale"] = momentum_scale
    pts = model.sample(rng, n_samples, **kw)
    mv = _moment_map_vectorized(model, pts)
    (mu_lo, mu_hi), (lam_lo, lam_hi) = window
    sel = (
        (mv[:, 0] >= mu_lo)
        & (mv[:, 0] <= mu_hi)
        & (mv[:, 1] >= lam_lo)
        & (mv[:, 1] <= lam_hi)
    )
    mv = mv[sel]
    if refine_boundary:
        extra = _boundary_refinement(model, window, rng=rng)
        if len(extra):
            mv = np.vstack([mv, extra]) if len(mv) else extra
    if len(mv) == 0:
        raise DomainError("no classical samples inside the window")
    # thin to hull candidates: per-x-bin extremes plus global extremes
    order = np.argsort(mv[:, 0], kind="stable")
    mv = mv[order]
    nb = 4000
    edges = np.linspace(mv[0, 0], mv[-1, 0], nb + 1)
    idx = np.searchsorted(mv[:, 0], edges[1:-1])
    cands = []
    start = 0
    for end in list(idx) + [len(mv)]:
        if end > start:
            block = mv[start:end]
            cands.append(block[np.argmin(block[:, 1])])
            cands.append(block[np.argmax(block[:, 1])])
            cands.append(block[0])
            cands.append(block[-1])
        start = end
    return convex_hull(np.array(cands))


def _moment_map_vectorized(model, pts):
    """Vectorized F over sample rows (the model formulas are algebraic)."""
    z = np.asarray(pts)
    name = model.name
    if name == "spherical_pendulum":
        x, y = z[:, :3], z[:, 3:]
        return np.column_stack(
            [x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0],
             0.5 * np.sum(y * y, axis=1) + x[:, 2]]
        )
    if name == "coupled_angular_momenta":
        t, a, b = model.params
        x, y = z[:, :3], z[:, 3:]
        return np.column_stack(
            [x[:, 2] + y[:, 2],
             (1 - t) / a * y[:, 2] + t / (a * b) * np.sum(x * y, axis=1)]
        )
    if name == "spin_oscillator":
        return np.column_stack(
            [0.5 * (z[:, 0] ** 2 + z[:, 1] ** 2) + z[:, 4],
             0.5 * (z[:, 0] * z[:, 2] + z[:, 1] * z[:, 3])]
        )
    if name == "toric_product":
        return np.column_stack([z[:, 2], z[:, 5]])
    return np.array([model.moment(row) for row in z])


def spectrum_hull(spec, window=None):
    pts = spec.cloud()
    if window is not None:
        (mu_lo, mu_hi), (lam_lo, lam_hi) = window
        sel = (
            (pts[:, 0] >= mu_lo)
            & (pts[:, 0] <= mu_hi)
            & (pts[:, 1] >= lam_lo)
            & (pts[:, 1] <= lam_hi)
        )
        pts = pts[sel]
    if len(pts) == 0:
        raise DomainError("no spectrum points in the window")
    return convex_hull(pts)


def convergence_test(model, spectra, window, n_samples=10**6, rng=None,
                     momentum_scale=None):
    """Hausdorff distances d_H(conv(spec in window), conv(F(M) in
    window)) for each supplied spectrum (one per hbar)."""
    classical = classical_image_hull(model, window, n_samples, rng=rng,
                                     momentum_scale=momentum_scale)
    report = InverseReport(hull=classical)
    for spec in spectra:
        sh = spectrum_hull(spec, window)
        report.hausdorff_by_hbar.append(
            (spec.hbar, hausdorff_distance(sh, classical))
        )
    report.hausdorff_by_hbar.sort(key=lambda t: -t[0])
    return report
