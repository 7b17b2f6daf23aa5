"""Decorated polygons and the exact group actions on them.

Vertices, marked points and translations are ``fractions.Fraction``
pairs; the vertical-shear group V = {((1,0),(k,1)), (t_a, t_b)} and the
sign-flip action act exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from ..errors import DomainError


def _frac_pair(p):
    x, y = p
    return (Fraction(x), Fraction(y))


@dataclass(frozen=True)
class CutSpec:
    epsilons: tuple  # in {+1, -1}^m
    focus_values: tuple  # of (a, b) pairs, ordered by a

    def __post_init__(self):
        if len(self.epsilons) != len(self.focus_values):
            raise DomainError("cut signs and focus values must have equal length")
        if any(e not in (1, -1) for e in self.epsilons):
            raise DomainError("cut signs must be +1 or -1")
        xs = [c[0] for c in self.focus_values]
        if any(x2 - x1 <= 0 for x1, x2 in zip(xs, xs[1:])):
            raise DomainError("focus values must be strictly increasing in x")

    @property
    def m_ff(self):
        return len(self.epsilons)


@dataclass(frozen=True)
class DecoratedPolygon:
    """(cut signs, rational polygon, marked points with twisting integers).

    ``vertices`` is the counterclockwise cyclic list of Fraction pairs;
    ``marked`` is a tuple of ((a, b) Fraction pair, kappa integer).
    ``unsnapped`` flags vertices whose numerical coordinates admitted no
    small-denominator rational approximation.
    """

    epsilons: tuple
    vertices: tuple
    marked: tuple = ()
    unsnapped: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "vertices", tuple(_frac_pair(v) for v in self.vertices)
        )
        object.__setattr__(
            self,
            "marked",
            tuple((_frac_pair(c), int(k)) for c, k in self.marked),
        )
        if len(self.epsilons) != len(self.marked):
            raise DomainError("one marked point per cut sign required")

    def as_floats(self):
        return [(float(x), float(y)) for x, y in self.vertices]


def primitive_direction(p, q):
    """Primitive integer vector along the edge p -> q (exact)."""
    dx = Fraction(q[0]) - Fraction(p[0])
    dy = Fraction(q[1]) - Fraction(p[1])
    if dx == 0 and dy == 0:
        raise DomainError("degenerate edge")
    den = dx.denominator * dy.denominator // gcd(dx.denominator, dy.denominator)
    ix, iy = int(dx * den), int(dy * den)
    g = gcd(abs(ix), abs(iy))
    return ix // g, iy // g


def edge_normals(vertices):
    """Primitive integer normals of the edges of a rational polygon."""
    out = []
    n = len(vertices)
    for i in range(n):
        dx, dy = primitive_direction(vertices[i], vertices[(i + 1) % n])
        out.append((-dy, dx))
    return out


def _cross(o, p, q):
    return (Fraction(p[0]) - o[0]) * (Fraction(q[1]) - o[1]) - (
        Fraction(p[1]) - o[1]
    ) * (Fraction(q[0]) - o[0])


def check_polygon(dp):
    """Validity report: convexity, simplicity, rationality and a
    per-vertex unimodularity table (determinant of adjacent primitive
    edge directions, exact integers)."""
    vs = dp.vertices if isinstance(dp, DecoratedPolygon) else tuple(
        _frac_pair(v) for v in dp
    )
    n = len(vs)
    report = {
        "convex": True,
        "simple": True,
        "rational": True,
        "smooth_vertices": [],
        "rationality_failures": list(
            dp.unsnapped if isinstance(dp, DecoratedPolygon) else ()
        ),
    }
    if n < 3:
        report["convex"] = report["simple"] = False
        return report
    signs = set()
    for i in range(n):
        c = _cross(vs[i], vs[(i + 1) % n], vs[(i + 2) % n])
        if c != 0:
            signs.add(c > 0)
    if len(signs) != 1:
        report["convex"] = False
    if not all(s for s in signs):
        # clockwise orientation also counts as convex; flag separately
        report["counterclockwise"] = False
    for i in range(n):
        if vs[i] == vs[(i + 1) % n]:
            report["simple"] = False
    dirs = [primitive_direction(vs[i], vs[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        d_in = dirs[(i - 1) % n]
        d_out = dirs[i]
        det = d_in[0] * d_out[1] - d_in[1] * d_out[0]
        report["smooth_vertices"].append(
            {"vertex": vs[i], "det": int(det), "smooth": abs(det) == 1}
        )
    return report


def v_action(dp, rho):
    """Action of rho = (k, (t_a, t_b)) in V: vertices and marked points
    map by (x, y) -> (x + t_a, k*x + y + t_b); kappa_i -> kappa_i + k."""
    k, (ta, tb) = rho
    k = int(k)
    ta, tb = Fraction(ta), Fraction(tb)

    def mv(p):
        x, y = Fraction(p[0]), Fraction(p[1])
        return (x + ta, k * x + y + tb)

    return DecoratedPolygon(
        epsilons=dp.epsilons,
        vertices=tuple(mv(v) for v in dp.vertices),
        marked=tuple((mv(c), kap + k) for c, kap in dp.marked),
        unsnapped=dp.unsnapped,
    )


def v_compose(rho2, rho1):
    """Composition rho2 o rho1 in V (apply rho1 first)."""
    k2, (a2, b2) = rho2
    k1, (a1, b1) = rho1
    return (k1 + k2, (Fraction(a1) + Fraction(a2),
                      Fraction(b1) + Fraction(b2) + k2 * Fraction(a1)))


def _piecewise_shear(p, x0, k):
    """l_{x0}^k: identity for x <= x0, (x, y + k*(x - x0)) beyond."""
    x, y = Fraction(p[0]), Fraction(p[1])
    if x <= x0:
        return (x, y)
    return (x, y + k * (x - x0))


def _insert_line_crossings(vertices, x0):
    """Insert exact boundary points where edges cross the vertical line
    x = x0 (a piecewise map may create vertices there)."""
    out = []
    n = len(vertices)
    for i in range(n):
        p = vertices[i]
        q = vertices[(i + 1) % n]
        out.append(p)
        px, qx = Fraction(p[0]), Fraction(q[0])
        if (px - x0) * (qx - x0) < 0:
            t = (x0 - px) / (qx - px)
            y = Fraction(p[1]) + t * (Fraction(q[1]) - Fraction(p[1]))
            out.append((x0, y))
    return out


def _drop_collinear(vertices):
    out = list(vertices)
    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            a = out[(i - 1) % len(out)]
            b = out[i]
            c = out[(i + 1) % len(out)]
            if _cross(a, b, c) == 0:
                out.pop(i)
                changed = True
                break
    return out


def epsilon_action(dp, eps_prime):
    """Sign-flip action: the piecewise shears l_{x_i}^{k_i} with
    k_i = eps_i (1 - eps_i') / 2 applied at each marked x_i; signs
    multiply; marked points and twisting integers stay fixed.

    The vertex list is recomputed as a subset-of-the-plane operation:
    edge crossings of a shear line become vertices and vertices made
    collinear are dropped.
    """
    eps_prime = tuple(int(e) for e in eps_prime)
    if len(eps_prime) != len(dp.epsilons):
        raise DomainError("sign vector length mismatch")
    if any(e not in (1, -1) for e in eps_prime):
        raise DomainError("signs must be +1 or -1")
    ks = [e * (1 - ep) // 2 for e, ep in zip(dp.epsilons, eps_prime)]
    xs = [Fraction(c[0]) for c, _ in dp.marked]

    verts = [(Fraction(v[0]), Fraction(v[1])) for v in dp.vertices]
    for x0, k in zip(xs, ks):
        if k != 0:
            verts = _insert_line_crossings(verts, x0)

    def mv(p):
        q = p
        for x0, k in zip(xs, ks):
            if k != 0:
                q = _piecewise_shear(q, x0, k)
        return q

    verts = _drop_collinear([mv(v) for v in verts])
    new_eps = tuple(e * ep for e, ep in zip(dp.epsilons, eps_prime))
    return DecoratedPolygon(
        epsilons=new_eps,
        vertices=tuple(verts),
        marked=dp.marked,
        unsnapped=dp.unsnapped,
    )
