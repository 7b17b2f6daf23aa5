"""Critical points of the moment map and their Williamson types.

Classification reads the eigenvalue pattern of the linearized flow of a
generic combination of J and H on the symplectic complement of the
orbit direction: pure-imaginary pairs are elliptic blocks, real pairs
hyperbolic, quadruples (+-alpha +- i beta) focus-focus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import ClassificationUncertainError, DomainError
from .models import ChartPoint, MomentValue, flow
from .models.defs import IntegrableModel

RANK_TOL = 1e-7  # relative singular-value threshold for rank of dF
AXIS_ON = 1e-8  # |Re|/s below this counts as lying on the imaginary axis
AXIS_UNCERTAIN = 1e-6  # gray zone: near an axis but not on it
HESS_STEP = 1e-4


@dataclass(frozen=True)
class WilliamsonType:
    k: int
    k_e: int
    k_h: int
    k_ff: int

    def __post_init__(self):
        if min(self.k, self.k_e, self.k_h, self.k_ff) < 0:
            raise DomainError("Williamson counts must be non-negative")

    @property
    def n(self):
        return self.k + self.k_e + self.k_h + 2 * self.k_ff

    def as_tuple(self):
        return (self.k, self.k_e, self.k_h, self.k_ff)

    def label(self):
        names = {
            (0, 2, 0, 0): "elliptic-elliptic",
            (0, 1, 1, 0): "elliptic-hyperbolic",
            (0, 0, 2, 0): "hyperbolic-hyperbolic",
            (0, 0, 0, 1): "focus-focus",
            (1, 1, 0, 0): "elliptic-regular",
            (1, 0, 1, 0): "hyperbolic-regular",
        }
        return names.get(self.as_tuple(), str(self.as_tuple()))


@dataclass(frozen=True)
class CriticalPoint:
    point: ChartPoint
    rank: int
    wtype: WilliamsonType
    eigenvalues: tuple
    nondegenerate: bool

    @property
    def value(self):
        return self.point  # placeholder; moment value attached separately


@dataclass
class BifurcationDiagram:
    critical_values: list  # of (MomentValue, WilliamsonType)
    focus_values: list  # MomentValue, sorted by first coordinate
    m_ff: int = field(default=0)

    def __post_init__(self):
        xs = [c.a for c in self.focus_values]
        if any(x2 - x1 <= 0 for x1, x2 in zip(xs, xs[1:])):
            raise DomainError(
                "focus values not strictly increasing in the first coordinate"
            )
        self.m_ff = len(self.focus_values)


# ----------------------------------------------------------------------
# linear algebra at a point
# ----------------------------------------------------------------------

def _omega_matrix(model, z, basis):
    m = basis.shape[1]
    out = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            out[i, j] = model.omega(z, basis[:, i], basis[:, j])
    return out


def _hessian(model, z, basis, coeffs, step=HESS_STEP):
    """Intrinsic Hessian of coeffs . F on the tangent basis, by
    second-order central differences along projected probe curves."""

    def f(w):
        mv = model.moment(w)
        return coeffs[0] * mv[0] + coeffs[1] * mv[1]

    m = basis.shape[1]
    H = np.empty((m, m))
    f0 = f(model.project(z))
    for i in range(m):
        ei = basis[:, i]
        fp = f(model.project(z + step * ei))
        fm = f(model.project(z - step * ei))
        H[i, i] = (fp - 2 * f0 + fm) / step**2
        for j in range(i + 1, m):
            ej = basis[:, j]
            fpp = f(model.project(z + step * (ei + ej)))
            fpm = f(model.project(z + step * (ei - ej)))
            fmp = f(model.project(z - step * (ei - ej)))
            fmm = f(model.project(z - step * (ei + ej)))
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4 * step**2)
    return H


def _restricted_dF(model, z):
    basis = model.tangent_basis(z)
    return model.moment_gradients(z) @ basis, basis


def moment_rank(model, z):
    """Numerical rank of the restricted dF.  Relative threshold on the
    largest singular value, floored at the chart gradient scale so that
    rank-0 points (where every singular value is rounding noise) do not
    read as regular."""
    dF, _ = _restricted_dF(model, z)
    sv = np.linalg.svd(dF, compute_uv=False)
    return int(np.sum(sv > RANK_TOL * max(sv[0], 0.1)))


def _pattern(eigs, expected_blocks):
    """Read (k_e, k_h, k_ff, nondegenerate) from the eigenvalue cloud of a
    real Hamiltonian matrix on a 2*expected_blocks...-dim space."""
    s = max(abs(eigs))
    if s == 0.0:
        return 0, 0, 0, False
    ke = kh = kff = 0
    used = 0
    for lam in eigs:
        re, im = abs(lam.real), abs(lam.imag)
        if re <= AXIS_ON * s and im <= AXIS_ON * s:
            continue  # zero eigenvalue: degenerate direction
        on_imag = re <= AXIS_ON * s
        on_real = im <= AXIS_ON * s
        near_imag = re <= AXIS_UNCERTAIN * s
        near_real = im <= AXIS_UNCERTAIN * s
        if (near_imag and not on_imag) or (near_real and not on_real):
            raise ClassificationUncertainError(
                "eigenvalue within the ambiguity band of an axis",
                eigenvalues=tuple(eigs),
            )
        if on_imag:
            if lam.imag > 0:
                ke += 1
            used += 1
        elif on_real:
            if lam.real > 0:
                kh += 1
            used += 1
        else:
            if lam.real > 0 and lam.imag > 0:
                kff += 1
            used += 1
    nondeg = used == len(eigs) and (ke + kh + 2 * kff) * 2 == len(eigs)
    return ke, kh, kff, nondeg


def _symmetry_defect(eigs):
    """Distance of the spectrum from the {lam, -lam, conj} symmetry."""
    eigs = np.asarray(eigs)
    defect = 0.0
    for lam in eigs:
        defect = max(defect, min(abs(eigs + lam)), min(abs(eigs - lam.conjugate())))
    return defect


def classify_point(model, p, rng=None):
    """Williamson classification of a critical point of F.

    Linearizes a generic combination c1*J + c2*H on the symplectic
    complement of the orbit direction and reads the Williamson type off
    the eigenvalue pattern; retries the combination when eigenvalues
    collide.
    """
    rng = np.random.default_rng(1234) if rng is None else rng
    z = model.check_point(p, tol=1e-8)
    z = model.project(z)
    n = model.dof
    rank = moment_rank(model, z)
    if rank >= n:
        raise DomainError("point is regular (rank = n); nothing to classify")

    basis = model.tangent_basis(z)
    dF, _ = _restricted_dF(model, z)

    if rank == 0:
        red_basis = basis
        comb_pool = None
    else:
        # combination annihilated at p spans the critical directions
        _, _, vt = np.linalg.svd(dF)
        # dF is 2 x m; its left-null combination c satisfies c . dF = 0
        u, sv, _ = np.linalg.svd(dF)
        c_null = u[:, -1]
        comb_pool = c_null
        # orbit direction: X_c for the *non*-vanishing combination
        v_orb = model.vector_field(z, *u[:, 0])
        # symplectic complement of the orbit direction inside the tangent
        m = basis.shape[1]
        omega_v = np.array(
            [model.omega(z, v_orb, basis[:, j]) for j in range(m)]
        )
        # coordinates of v_orb in the basis
        v_coords = basis.T @ v_orb
        # W = ker(omega_v . ), then quotient by v_orb
        q, _ = np.linalg.qr(
            np.column_stack([omega_v / np.linalg.norm(omega_v), np.eye(m)])
        )
        W = q[:, 1:m]  # complement of omega_v within R^m = ker
        # remove the orbit direction from W
        vW = W.T @ v_coords
        q2, _ = np.linalg.qr(np.column_stack([vW / np.linalg.norm(vW), np.eye(m - 1)]))
        red_coords = W @ q2[:, 1 : m - 1]
        red_basis = basis @ red_coords

    eigs = None
    for _ in range(5):
        if comb_pool is None:
            phi = rng.uniform(0, 2 * np.pi)
            c = np.array([np.cos(phi), np.sin(phi)])
        else:
            c = comb_pool
        H = _hessian(model, z, red_basis, c)
        Om = _omega_matrix(model, z, red_basis)
        A = np.linalg.solve(Om, H)
        eigs = np.linalg.eigvals(A)
        s = max(abs(eigs))
        if s == 0.0:
            break
        collide = False
        for i in range(len(eigs)):
            for j in range(i + 1, len(eigs)):
                if abs(eigs[i] - eigs[j]) < 1e-6 * s:
                    collide = True
        if not collide or comb_pool is not None:
            break
    ke, kh, kff, nondeg = _pattern(eigs, model.dof - rank)
    wt = WilliamsonType(rank, ke, kh, kff)
    if wt.n != n:
        nondeg = False
    cp = ChartPoint(model.chart_id, z, model.name)
    return CriticalPoint(cp, rank, wt, tuple(eigs), nondeg)


# ----------------------------------------------------------------------
# search
# ----------------------------------------------------------------------

def _wedge_residual(model, z):
    """All 2x2 minors of the restricted gradients (zero iff rank dF < 2)."""
    zp = model.project(z)
    dF, _ = _restricted_dF(model, zp)
    u, v = dF[0], dF[1]
    m = len(u)
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            out.append(u[i] * v[j] - u[j] * v[i])
    return np.array(out)


def wedge_norm(model, z):
    return float(np.linalg.norm(_wedge_residual(model, z)))


def _rank0_residual(model, z):
    """Both restricted moment gradients plus the constraints: zero
    exactly at the (isolated) rank-0 points."""
    P = model.tangent_projector(z)
    g = model.moment_gradients(z)
    cons = list(model.constraint_residuals(z).values())
    return np.concatenate([P @ g[0], P @ g[1], cons])


def find_critical_points(model, region, grid_density=200, newton_tol=1e-9,
                         rng=None):
    """Multi-start least-squares on the minors of dJ ^ dH.

    ``region`` is an (lo, hi) box in ambient chart coordinates; seeds are
    a low-discrepancy sample of the box (``grid_density`` seeds).  A
    second pass drives the full restricted gradients to zero, which
    pins the isolated rank-0 points even when most wedge seeds fall
    into the rank-1 continuum.  Converged points are projected,
    deduplicated at distance 1e-5 and returned with ranks and types.
    """
    rng = np.random.default_rng(42) if rng is None else rng
    lo, hi = (np.asarray(a, dtype=float) for a in region)
    from scipy.stats import qmc

    sampler = qmc.Halton(d=model.dim, seed=int(rng.integers(2**31)))
    seeds = lo + sampler.random(int(grid_density)) * (hi - lo)
    found = []
    for seed in seeds:
        res = least_squares(
            lambda w: _wedge_residual(model, w),
            model.project(seed),
            method="lm",
            xtol=1e-14,
            ftol=1e-14,
            gtol=1e-14,
            max_nfev=400,
        )
        z = model.project(res.x)
        if wedge_norm(model, z) >= newton_tol:
            continue
        if moment_rank(model, z) >= model.dof:
            continue  # weak-gradient stray, not a genuine critical point
        if any(np.linalg.norm(z - w) < 1e-5 for w in found):
            continue
        found.append(z)
    # rank-0 pass (every fourth seed suffices: there are few basins)
    for seed in seeds[::4]:
        res = least_squares(
            lambda w: _rank0_residual(model, w),
            model.project(seed),
            method="lm",
            xtol=1e-14,
            ftol=1e-14,
            gtol=1e-14,
            max_nfev=400,
        )
        z = model.project(res.x)
        if np.linalg.norm(_rank0_residual(model, z)) >= newton_tol:
            continue
        if any(np.linalg.norm(z - w) < 1e-5 for w in found):
            continue
        found.append(z)
    out = []
    for z in sorted(found, key=lambda w: tuple(np.round(w, 8))):
        try:
            out.append(classify_point(model, model.point(z), rng=rng))
        except ClassificationUncertainError:
            cp = ChartPoint(model.chart_id, z, model.name)
            rank = moment_rank(model, z)
            out.append(
                CriticalPoint(cp, rank, WilliamsonType(rank, 0, 0, 0), (), False)
            )
    return out


def _rank1_sweep(model, which, lo, hi, n_steps, extremum, seed, rng):
    """Trace an elliptic-regular branch: extremize one moment component
    on level sets of the other, continuing in the level parameter."""
    j_idx = 0 if which == "J" else 1
    values = []
    z = model.project(seed)
    for lev in np.linspace(lo, hi, n_steps):

        def res(w):
            P = model.tangent_projector(w)
            g = model.moment_gradients(w)
            u, v = P @ g[0], P @ g[1]
            m = len(u)
            minors = [u[i] * v[j] - u[j] * v[i]
                      for i in range(m) for j in range(i + 1, m)]
            cons = list(model.constraint_residuals(w).values())
            return np.array(minors + [model.moment(w)[j_idx] - lev] + cons)

        sol = least_squares(res, z, method="lm", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=400)
        z = model.project(sol.x)
        if np.linalg.norm(res(z)) > 1e-7:
            continue
        mv = model.moment(z)
        values.append((z, MomentValue(*mv)))
    return values


def bifurcation_diagram(model, base_region, phase_region, resolution=40,
                        grid_density=300, rng=None):
    """Critical values of F with Williamson types.

    Rank-0 points come from ``find_critical_points``; rank-1
    (elliptic-regular) curves are traced by continuation of the
    constrained-extremum equations along one-parameter families of
    J-levels (and H-levels, for vertical boundary edges).
    """
    rng = np.random.default_rng(7) if rng is None else rng
    (amin, amax), (bmin, bmax) = base_region
    crits = find_critical_points(model, phase_region, grid_density, rng=rng)
    critical_values = []
    focus = []
    for cp in crits:
        mv = MomentValue(*model.moment(cp.point.coords))
        if not (amin <= mv.a <= amax and bmin <= mv.b <= bmax):
            continue
        critical_values.append((mv, cp.wtype))
        if cp.wtype.as_tuple() == (0, 0, 0, 1):
            focus.append(mv)

    # rank-1 branches over J-levels, seeded from extreme H samples
    pts = model.sample(rng, 4000)
    mvals = np.array([model.moment(z) for z in pts])
    margin = 1e-3 * (amax - amin)
    for pick in (np.argmin, np.argmax):
        seed = pts[pick(mvals[:, 1])]
        branch = _rank1_sweep(
            model, "J", amin + margin, amax - margin, resolution,
            pick is np.argmax, seed, rng,
        )
        for z, mv in branch:
            if moment_rank(model, z) != 1:
                continue
            if not (amin <= mv.a <= amax and bmin <= mv.b <= bmax):
                continue
            try:
                cp = classify_point(model, model.point(z), rng=rng)
                critical_values.append((mv, cp.wtype))
            except ClassificationUncertainError:
                continue
    focus.sort(key=lambda c: c.a)
    return BifurcationDiagram(critical_values, focus)


def check_semitoric(model, sample_budget=50, rng=None, phase_region=None,
                    grid_density=300):
    """Probe the semi-toric hypotheses.

    s1: all located singular points non-degenerate without hyperbolic
    blocks; s2: the J-flow is 2*pi-periodic at sampled points; s3: focus
    values have pairwise distinct first coordinates.  Properness of J is
    out of numerical reach and reported as not checked.
    """
    rng = np.random.default_rng(11) if rng is None else rng
    report = {"s1_nondegenerate": True, "s2_circle_action": True,
              "s3_simple": True, "properness": "not checked"}
    pts = model.sample(rng, sample_budget)
    for z in pts:
        start = model.point(model.project(z))
        end = flow(model, "J", start, 2 * np.pi, tol=1e-10)
        if np.linalg.norm(end.coords - start.coords) > 1e-6:
            report["s2_circle_action"] = False
            break
    if phase_region is None:
        scale = np.max(np.abs(pts)) * 1.2
        phase_region = (-scale * np.ones(model.dim), scale * np.ones(model.dim))
    crits = find_critical_points(model, phase_region, grid_density, rng=rng)
    focus_x = []
    for cp in crits:
        if not cp.nondegenerate or cp.wtype.k_h > 0:
            report["s1_nondegenerate"] = False
        if cp.wtype.as_tuple() == (0, 0, 0, 1):
            focus_x.append(model.moment(cp.point.coords)[0])
    focus_x.sort()
    if any(abs(x2 - x1) < 1e-8 for x1, x2 in zip(focus_x, focus_x[1:])):
        report["s3_simple"] = False
    report["n_critical_points"] = len(crits)
    report["m_ff"] = len(focus_x)
    return report
