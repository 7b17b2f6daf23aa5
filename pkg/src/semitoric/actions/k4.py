"""Exact arithmetic on truncated Taylor series and the Klein-group action.

Series live in the quotient of R[[a, b]] by constants and integer
multiples of a: no constant term, a-coefficient reduced into [0, 1).
Coefficients are ``fractions.Fraction``; every operation here is exact.

The right action of K4 = Z/2 x Z/2 is

    T * (j1, j2) = s(j2) * T(e1 * a, e2 * b) + j1 * a / 2,

with e_i = +1 for j_i = 0 and -1 for j_i = 1, and s(j2) = e2.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import DomainError, UndecidableAtDegreeError

K4 = ((0, 0), (1, 0), (0, 1), (1, 1))


def _to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact binary value
    raise DomainError(f"coefficient {x!r} is not rational")


def make_series(coeffs, degree=None):
    """Normalize a {(i, j): value} mapping into the quotient space.

    Drops the constant term, reduces the a-coefficient modulo 1 into
    [0, 1) and removes zeros.  ``degree`` (maximal stored total degree)
    defaults to the largest total degree present.
    """
    out = {}
    deg = 0
    for (i, j), v in coeffs.items():
        if (i, j) == (0, 0):
            continue
        f = _to_fraction(v)
        if (i, j) == (1, 0):
            f %= 1
        if f != 0:
            out[(i, j)] = f
            deg = max(deg, i + j)
    if degree is None:
        degree = deg
    return out, int(degree)


def k4_mul(j, jp):
    return ((j[0] + jp[0]) % 2, (j[1] + jp[1]) % 2)


def k4_act(series, j, degree=None):
    """Right action T * (j1, j2); exact rational arithmetic."""
    coeffs, degree = make_series(series, degree)
    j1, j2 = j
    e1 = 1 if j1 == 0 else -1
    e2 = 1 if j2 == 0 else -1
    out = {}
    for (p, q), c in coeffs.items():
        out[(p, q)] = c * e2 * (e1**p) * (e2**q)
    out[(1, 0)] = out.get((1, 0), Fraction(0)) + Fraction(j1, 2)
    return make_series(out, degree)[0]


def _relevant_even_b(coeffs, degree):
    """Indices (i1, 2k) ordered lexicographically, within the truncation."""
    idx = []
    for i1 in range(0, degree + 1):
        for i2 in range(0, degree + 1 - i1, 2):
            if (i1, i2) != (0, 0):
                idx.append((i1, i2))
    idx.sort()
    return idx


def _relevant_odd_a(coeffs, degree):
    """Indices (2k+1, i2) except (1, 0), ordered lexicographically."""
    idx = []
    for i1 in range(1, degree + 1, 2):
        for i2 in range(0, degree + 1 - i1):
            if (i1, i2) != (1, 0):
                idx.append((i1, i2))
    idx.sort()
    return idx


def _first_nonzero(coeffs, indices):
    for ij in indices:
        c = coeffs.get(ij, Fraction(0))
        if c != 0:
            return ij, c
    return None, Fraction(0)


def k4_canonical(series, degree=None):
    """Fundamental-domain representative of the K4-orbit.

    Returns (canonical coefficients, j applied to the input).  Rules:
    the a-coefficient lands in (0, 1/4) mod 1 whenever its orbit allows;
    otherwise (a-coefficient 0 or 1/4 mod 1) the sign of the lowest
    lexicographic structurally-relevant coefficient decides, and a
    truncation that leaves the relevant coefficients all zero raises
    ``UndecidableAtDegreeError``.
    """
    coeffs, degree = make_series(series, degree)
    orbit = {j: k4_act(coeffs, j, degree) for j in K4}
    c10 = coeffs.get((1, 0), Fraction(0))
    if (4 * c10) % 1 != 0:
        for j, t in orbit.items():
            a = t.get((1, 0), Fraction(0))
            if Fraction(0) < a < Fraction(1, 4):
                return t, j
        raise DomainError("no orbit representative in (0, 1/4); unreachable")
    # a-coefficient orbit is {0, 1/2} or {1/4, 3/4}
    target = Fraction(0) if (2 * c10) % 1 == 0 else Fraction(1, 4)
    cands = [(j, t) for j, t in orbit.items()
             if t.get((1, 0), Fraction(0)) % 1 == target]
    if target == 0:
        relevant = _relevant_even_b(coeffs, degree)
    else:
        relevant = _relevant_odd_a(coeffs, degree)
    decided = []
    for j, t in cands:
        ij, c = _first_nonzero(t, relevant)
        if c > 0:
            decided.append((j, t))
    if not decided:
        raise UndecidableAtDegreeError(
            f"all relevant coefficients vanish up to degree {degree}; "
            "cannot apply the fundamental-domain sign rule"
        )
    # all decided candidates carry identical series by construction
    decided.sort(key=lambda jt: jt[0])
    return decided[0][1], decided[0][0]


def series_equal(s1, s2):
    c1, _ = make_series(s1)
    c2, _ = make_series(s2)
    return c1 == c2


def series_to_float_items(series):
    """Sorted (i, j, float value) triples, for JSON output."""
    coeffs, _ = make_series(series)
    return [(i, j, float(v)) for (i, j), v in sorted(coeffs.items())]
