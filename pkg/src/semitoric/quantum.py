"""Commuting operator blocks and joint spectra for the quantum spherical
pendulum and the Jaynes-Cummings (spin-oscillator) model.

Pendulum: H = -(hbar^2/2) Laplace-Beltrami + x3 on L^2(S^2), J = angular
momentum about the vertical axis.  In the spherical-harmonic basis
Y_l^m the J-eigenvalue is hbar*m and H is real symmetric tridiagonal in
l with the standard cos(theta) matrix elements.

Jaynes-Cummings: spin-j x oscillator with hbar = 1/(j+1/2), so the spin
sphere has radius^2 = 1 - hbar^2/4;
J = hbar(N+1/2) + s_z and H = (u s_x + v s_y)/2, which in ladder form is
(hbar/2) sqrt(hbar/2) (a S+ + a' S-).  Blocks are labelled by the
conserved excitation number n + m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, SolverError


@dataclass(frozen=True)
class QuantizationParams:
    hbar: float
    L: int = 0  # pendulum truncation in l
    j: float = 0.0  # JC spin
    N_max: int = 0  # JC oscillator cutoff

    def __post_init__(self):
        if not (0 < self.hbar <= 1):
            raise DomainError("hbar must lie in (0, 1]")


def pendulum_params(hbar, L):
    if L < 0:
        raise DomainError("pendulum truncation L must be >= 0")
    return QuantizationParams(hbar=float(hbar), L=int(L))


def jc_params(j, N_max):
    jj = float(j)
    if abs(2 * jj - round(2 * jj)) > 1e-12 or jj <= 0:
        raise DomainError("spin j must be a positive half-integer")
    if N_max < 1:
        raise DomainError("oscillator cutoff N_max must be >= 1")
    return QuantizationParams(hbar=1.0 / (jj + 0.5), j=jj, N_max=int(N_max))


@dataclass
class OperatorBlock:
    label: object  # m for the pendulum, n + m_s for JC
    diag: np.ndarray
    offdiag: np.ndarray  # length len(diag) - 1; blocks are tridiagonal
    j_eigenvalue: float
    basis: list  # quantum numbers of the basis states
    trusted: bool = True  # False when the block misses truncated states
    truncated: bool = False  # True when high basis states are cut off

    @property
    def matrix(self):
        n = len(self.diag)
        M = np.diag(self.diag)
        if n > 1:
            M += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return M

    @property
    def dim(self):
        return len(self.diag)


def build_pendulum_blocks(qp):
    """One block per m in {-L, ..., L}; basis Y_l^m, l = |m|..L."""
    blocks = []
    hbar, L = qp.hbar, qp.L
    for m in range(-L, L + 1):
        ls = np.arange(abs(m), L + 1)
        diag = 0.5 * hbar**2 * ls * (ls + 1.0)
        l = ls[:-1].astype(float)
        off = np.sqrt(((l + 1) ** 2 - m**2) / ((2 * l + 1) * (2 * l + 3)))
        blocks.append(
            OperatorBlock(
                label=m,
                diag=diag,
                offdiag=off,
                j_eigenvalue=hbar * m,
                basis=[(int(l_), m) for l_ in ls],
                truncated=True,
            )
        )
    return blocks


def build_jc_blocks(qp):
    """Spin-j (x) oscillator blocks labelled by k = n + m."""
    hbar, j, N_max = qp.hbar, qp.j, qp.N_max
    two_j = int(round(2 * j))
    blocks = []
    c = 0.5 * np.sqrt(hbar / 2.0) * hbar
    k = -j
    while k <= j + N_max + 1e-9:
        m_hi = min(j, k)
        m_lo = max(-j, k - N_max)
        if m_hi < m_lo - 1e-9:
            k += 1
            continue
        ms = np.arange(m_hi, m_lo - 0.5, -1.0)  # n ascending
        ns = k - ms
        dim = len(ms)
        diag = np.zeros(dim)
        off = np.empty(max(dim - 1, 0))
        for i in range(dim - 1):
            n_low, m_high = ns[i], ms[i]
            # <n+1, m-1 | H | n, m>
            off[i] = c * np.sqrt((n_low + 1) * (j * (j + 1) - m_high * (m_high - 1)))
        blocks.append(
            OperatorBlock(
                label=float(k),
                diag=diag,
                offdiag=off,
                j_eigenvalue=hbar * (k + 0.5),
                basis=[(int(round(n)), m) for n, m in zip(ns, ms)],
                trusted=(k + j) <= N_max,
            )
        )
        k += 1
    return blocks


def eigensolve(block, tol=1e-12, with_vectors=False):
    """Eigenvalues (ascending) of a Hermitian block.

    Tridiagonal blocks go through the specialized symmetric solver,
    dense ones through the Hermitian solver; every pair is verified
    against the residual contract |A v - lam v| <= tol * |A|.
    """
    if isinstance(block, OperatorBlock):
        if block.dim == 1:
            vals = np.array([block.diag[0]])
            vecs = np.array([[1.0]])
        else:
            vals, vecs = eigh_tridiagonal(block.diag, block.offdiag)
        A = block.matrix
    else:
        A = np.asarray(block)
        if not np.allclose(A, A.conj().T, rtol=0, atol=1e-14 * max(1, abs(A).max())):
            raise DomainError("eigensolve expects a Hermitian matrix")
        vals, vecs = np.linalg.eigh(A)
    norm = max(np.abs(vals).max(), 1e-300)
    resid = np.linalg.norm(A @ vecs - vecs * vals, axis=0)
    if np.any(resid > max(tol, 1e-15) * norm * 50):
        raise SolverError(
            f"eigenpair residual {resid.max():.2e} exceeds contract "
            f"({tol:.0e} * |A|)"
        )
    if with_vectors:
        return vals, vecs
    return vals


@dataclass
class JointSpectrum:
    hbar: float
    points: np.ndarray  # columns mu, lambda, multiplicity
    trusted: np.ndarray  # bool per point
    window: tuple
    meta: dict = field(default_factory=dict)

    def cloud(self, trusted_only=True):
        sel = self.trusted if trusted_only else slice(None)
        return self.points[sel][:, :2]


def joint_spectrum(blocks, window, merge_tol=1e-10, edge_frac=0.2):
    """All (J-value, H-eigenvalue) pairs inside the window.

    Degenerate pairs merge with multiplicities at ``merge_tol``.  A point
    is trusted when its block does not touch the truncation and its
    eigenvector carries negligible weight on the top ``edge_frac`` of
    the block basis.
    """
    (mu_lo, mu_hi), (lam_lo, lam_hi) = window
    rows = []
    trust = []
    for blk in blocks:
        mu = blk.j_eigenvalue
        if not (mu_lo <= mu <= mu_hi):
            continue
        vals, vecs = eigensolve(blk, with_vectors=True)
        if blk.truncated:
            n_edge = max(1, int(np.ceil(edge_frac * blk.dim)))
            edge_mass = np.sum(np.abs(vecs[-n_edge:, :]) ** 2, axis=0)
        else:
            # complete invariant subspace: no truncation error at all
            edge_mass = np.zeros(blk.dim)
        for lam, em in zip(vals, edge_mass):
            if lam_lo <= lam <= lam_hi:
                rows.append((mu, float(lam)))
                trust.append(bool(blk.trusted and em < 1e-9))
    rows = np.array(rows) if rows else np.empty((0, 2))
    order = np.lexsort((rows[:, 1], rows[:, 0])) if len(rows) else []
    merged = []
    mtrust = []
    for i in order:
        mu, lam = rows[i]
        if merged and abs(merged[-1][0] - mu) <= merge_tol and abs(
            merged[-1][1] - lam
        ) <= merge_tol:
            merged[-1][2] += 1
            mtrust[-1] = mtrust[-1] and trust[i]
        else:
            merged.append([mu, lam, 1])
            mtrust.append(trust[i])
    pts = np.array(merged) if merged else np.empty((0, 3))
    return JointSpectrum(
        hbar=0.0,
        points=pts,
        trusted=np.array(mtrust, dtype=bool),
        window=window,
    )


def pendulum_spectrum(qp, window):
    spec = joint_spectrum(build_pendulum_blocks(qp), window)
    spec.hbar = qp.hbar
    spec.meta = {"model": "spherical_pendulum", "L": qp.L}
    return spec


def jc_spectrum(qp, window):
    spec = joint_spectrum(build_jc_blocks(qp), window)
    spec.hbar = qp.hbar
    spec.meta = {"model": "spin_oscillator", "j": qp.j, "N_max": qp.N_max}
    return spec


# ----------------------------------------------------------------------
# commutation checks
# ----------------------------------------------------------------------

def spin_matrices(j):
    """Standard spin-j matrices (S_x, S_y, S_z), m decreasing j..-j."""
    two_j = int(round(2 * j))
    ms = np.array([j - i for i in range(two_j + 1)])
    sz = np.diag(ms)
    sp = np.zeros((two_j + 1, two_j + 1))
    for i in range(1, two_j + 1):
        m = ms[i]
        sp[i - 1, i] = np.sqrt(j * (j + 1) - m * (m + 1))
    sx = 0.5 * (sp + sp.T)
    sy = -0.5j * (sp - sp.T)
    return sx, sy, sz


def jc_full_operators(qp, n_cap=None):
    """(J, H) assembled on the full spin (x) oscillator tensor space with
    oscillator levels 0..n_cap (default N_max); basis index = n * (2j+1)
    + spin slot."""
    hbar, j = qp.hbar, qp.j
    n_cap = qp.N_max if n_cap is None else n_cap
    sx, sy, sz = spin_matrices(j)
    d_s = sx.shape[0]
    n = np.arange(n_cap + 1)
    a = np.diag(np.sqrt(n[1:]), 1)
    num = np.diag(n.astype(float))
    eye_o = np.eye(n_cap + 1)
    eye_s = np.eye(d_s)
    u = np.sqrt(hbar / 2.0) * (a + a.T)
    # orientation giving the conserved ladder combination a S+ + a' S-
    v = 1j * np.sqrt(hbar / 2.0) * (a - a.T)
    J = hbar * np.kron(num + 0.5 * eye_o, eye_s) + np.kron(eye_o, hbar * sz)
    H = 0.5 * (np.kron(u, hbar * sx) + np.kron(v, hbar * sy))
    return J, H


def check_commutation(blocks_or_pair, interior_frac=0.8):
    """Relative commutator norm |[J, H]| / (|J| |H|).

    For a block list the operators are block-diagonal with J scalar per
    block, so the result is exactly 0; for a pair (J, H) of matrices the
    norm is computed directly (restrict to the truncation interior
    before calling for a meaningful JC check).
    """
    if isinstance(blocks_or_pair, (list, tuple)) and blocks_or_pair and isinstance(
        blocks_or_pair[0], OperatorBlock
    ):
        worst = 0.0
        for blk in blocks_or_pair:
            A = blk.matrix
            Jb = blk.j_eigenvalue * np.eye(blk.dim)
            comm = np.linalg.norm(Jb @ A - A @ Jb)
            denom = max(np.linalg.norm(Jb) * np.linalg.norm(A), 1e-300)
            worst = max(worst, comm / denom)
        return worst
    J, H = blocks_or_pair
    comm = np.linalg.norm(J @ H - H @ J, 2)
    return comm / max(np.linalg.norm(J, 2) * np.linalg.norm(H, 2), 1e-300)


def jc_commutation_interior(qp, interior_frac=0.8):
    """|P [J, H] P| / (|J||H|) with P the projector onto oscillator
    levels away from the cutoff.

    J is diagonal in the tensor basis, so the commutator entries are
    (J_a - J_b) H_ab over the sparse ladder couplings of H; the ladder
    conserves n + m, making every interior entry vanish to rounding.
    The numerator uses the Frobenius norm (an upper bound for the
    spectral norm), the denominator exact spectral norms.
    """
    hbar, j, N_max = qp.hbar, qp.j, qp.N_max
    n_int = int(np.floor(interior_frac * N_max))
    c = 0.5 * np.sqrt(hbar / 2.0) * hbar

    def jdiag(n, m):
        return hbar * (n + 0.5) + hbar * m

    num2 = 0.0
    h_entries = []
    ms = np.arange(-j, j + 0.5)
    for n in range(N_max):
        for m in ms:
            if m + 1 > j:
                continue
            # <n, m+1 | H | n+1, m> ladder pair
            val = c * np.sqrt((n + 1) * (j * (j + 1) - (m + 1) * m))
            h_entries.append(abs(val))
            if n + 1 <= n_int:
                d = jdiag(n, m + 1) - jdiag(n + 1, m)
                num2 += 2 * (d * val) ** 2  # entry and its adjoint
    norm_j = hbar * (N_max + 0.5) + hbar * j
    # |H|_2 = max block eigenvalue magnitude
    norm_h = 0.0
    for blk in build_jc_blocks(qp):
        if blk.dim == 1:
            continue
        vals = eigensolve(blk)
        norm_h = max(norm_h, float(np.abs(vals).max()))
    return float(np.sqrt(num2)) / max(norm_j * norm_h, 1e-300)
