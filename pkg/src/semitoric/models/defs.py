"""Built-in integrable models in embedded ambient coordinates.

Every model lives on a constraint set inside some R^N and carries an
ambient Poisson structure for which the constraints are either Casimirs
(sphere radii) or second-class pairs handled by the Dirac bracket
(tangency of TS^2).  Working in embedded coordinates with per-step
orthogonal projection avoids polar-chart bookkeeping entirely.

Conventions (fixed once for the whole package):

* A sphere factor of radius r carries the bracket with X_f = grad(f) x s,
  so the ambient height s3 generates the counterclockwise rotation of
  period 2*pi regardless of r.  This is the normalization under which
  J is the moment map of an effective S^1-action for every semi-toric
  built-in (the corresponding area form has total mass 4*pi*r).
* R^2 oscillator factors carry omega = du ^ dv, i.e. X_f = (-f_v, f_u);
  (u^2+v^2)/2 rotates (u, v) counterclockwise with period 2*pi.
* T*R^3 carries Omega = sum dy_i ^ dx_i, i.e. xdot = f_y, ydot = -f_x,
  restricted to TS^2 through the Dirac bracket.
* Canonical R^{2n} models use coordinates (x_1..x_n, xi_1..xi_n) with
  omega = sum dxi_i ^ dx_i, so X_{xi_j} = d/dx_j.

With these choices the J-flow of every semi-toric built-in is the
simultaneous counterclockwise rotation of the planes listed in
``rotation_planes``; the monodromy computations inherit this
orientation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError

MODEL_NAMES = (
    "spherical_pendulum",
    "coupled_angular_momenta",
    "spin_oscillator",
    "toric_product",
    "local_model_Q",
)

# integer codes shared with the compiled backend
CODE = {name: i for i, name in enumerate(MODEL_NAMES)}


@dataclass(frozen=True)
class ChartPoint:
    """A point of a model's phase space in ambient chart coordinates."""

    chart_id: str
    coords: np.ndarray
    model_id: str

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))


@dataclass(frozen=True)
class MomentValue:
    a: float  # J-value
    b: float  # H-value

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise DomainError("moment value has non-finite components")

    def as_array(self):
        return np.array([self.a, self.b])


@dataclass(frozen=True)
class TangentVector:
    chart_id: str
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))


def _cross(a, b):
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


@dataclass(frozen=True)
class IntegrableModel:
    """One of the built-in systems (M, omega, F=(J,H)).

    ``params`` is the flat parameter vector handed to the flow backend:

    * spherical_pendulum: ()            on TS^2, J = x1 y2 - x2 y1,
                                        H = |y|^2/2 + x3
    * coupled_angular_momenta: (t,a,b)  on S^2_a x S^2_b; the sphere
                                        carrying y has radius a, the one
                                        carrying x has radius b;
                                        J = x3 + y3,
                                        H = (1-t)/a y3 + t/(a b) <x,y>
    * spin_oscillator: ()               on R^2 x S^2, J = (u^2+v^2)/2 + z,
                                        H = (u x + v y)/2
    * toric_product: (a,b)              two height functions on
                                        S^2_a x S^2_b, J = x3, H = y3
    * local_model_Q: (k,ke,kh,kff)      canonical R^{2n} Williamson model
    """

    name: str
    params: np.ndarray
    dof: int = 2

    def __post_init__(self):
        if self.name not in CODE:
            raise DomainError(f"unknown model '{self.name}'")
        object.__setattr__(self, "params", np.asarray(self.params, dtype=float))

    # ------------------------------------------------------------------
    # bookkeeping
    # ------------------------------------------------------------------
    @property
    def code(self):
        return CODE[self.name]

    @property
    def dim(self):
        if self.name in ("spherical_pendulum", "coupled_angular_momenta", "toric_product"):
            return 6
        if self.name == "spin_oscillator":
            return 5
        return 2 * self.dof

    @property
    def chart_id(self):
        return f"{self.name}:embedded"

    def point(self, coords):
        return ChartPoint(self.chart_id, np.asarray(coords, dtype=float), self.name)

    def signature(self):
        """Williamson signature of a local model (k, ke, kh, kff)."""
        if self.name != "local_model_Q":
            raise DomainError("signature only defined for local_model_Q")
        return tuple(int(round(p)) for p in self.params)

    # ------------------------------------------------------------------
    # constraints
    # ------------------------------------------------------------------
    def constraint_residuals(self, z):
        """Named residuals of the chart invariants at z."""
        z = np.asarray(z, dtype=float)
        if self.name == "spherical_pendulum":
            x, y = z[:3], z[3:]
            return {"|x|^2 - 1": x @ x - 1.0, "<x,y>": x @ y}
        if self.name == "coupled_angular_momenta":
            t, a, b = self.params
            return {
                "|x|^2 - b^2": z[:3] @ z[:3] - b * b,
                "|y|^2 - a^2": z[3:] @ z[3:] - a * a,
            }
        if self.name == "spin_oscillator":
            s = z[2:]
            return {"|s|^2 - 1": s @ s - 1.0}
        if self.name == "toric_product":
            a, b = self.params
            return {
                "|x|^2 - a^2": z[:3] @ z[:3] - a * a,
                "|y|^2 - b^2": z[3:] @ z[3:] - b * b,
            }
        return {}

    def check_point(self, p, tol=1e-10):
        z = p.coords if isinstance(p, ChartPoint) else np.asarray(p, dtype=float)
        if z.shape != (self.dim,):
            raise DomainError(
                f"{self.name}: expected {self.dim} coordinates, got {z.shape}"
            )
        for label, r in self.constraint_residuals(z).items():
            if abs(r) >= tol:
                raise DomainError(
                    f"{self.name}: chart invariant '{label}' violated (residual {r:.3e})"
                )
        return z

    def project(self, z):
        """Orthogonal projection back onto the constraint set."""
        z = np.array(z, dtype=float)
        if self.name == "spherical_pendulum":
            x = z[:3]
            x /= np.linalg.norm(x)
            y = z[3:]
            y -= (x @ y) * x
            return np.concatenate([x, y])
        if self.name == "coupled_angular_momenta":
            _, a, b = self.params
            x = z[:3] * (b / np.linalg.norm(z[:3]))
            y = z[3:] * (a / np.linalg.norm(z[3:]))
            return np.concatenate([x, y])
        if self.name == "spin_oscillator":
            s = z[2:]
            return np.concatenate([z[:2], s / np.linalg.norm(s)])
        if self.name == "toric_product":
            a, b = self.params
            x = z[:3] * (a / np.linalg.norm(z[:3]))
            y = z[3:] * (b / np.linalg.norm(z[3:]))
            return np.concatenate([x, y])
        return z

    def tangent_projector(self, z):
        """Orthogonal projector onto the tangent space at z; smooth in z
        near the constraint set (Gram-Schmidt on constraint gradients)."""
        grads = []
        if self.name == "spherical_pendulum":
            x, y = z[:3], z[3:]
            grads = [np.concatenate([x, np.zeros(3)]), np.concatenate([y, x])]
        elif self.name in ("coupled_angular_momenta", "toric_product"):
            grads = [
                np.concatenate([z[:3], np.zeros(3)]),
                np.concatenate([np.zeros(3), z[3:]]),
            ]
        elif self.name == "spin_oscillator":
            grads = [np.concatenate([np.zeros(2), z[2:]])]
        P = np.eye(self.dim)
        basis = []
        for g in grads:
            for bvec in basis:
                g = g - (bvec @ g) * bvec
            g = g / np.linalg.norm(g)
            basis.append(g)
            P -= np.outer(g, g)
        return P

    def tangent_basis(self, z):
        """Orthonormal basis of the tangent space at z (columns)."""
        grads = []
        if self.name == "spherical_pendulum":
            x, y = z[:3], z[3:]
            grads = [np.concatenate([x, np.zeros(3)]), np.concatenate([y, x])]
        elif self.name in ("coupled_angular_momenta", "toric_product"):
            grads = [
                np.concatenate([z[:3], np.zeros(3)]),
                np.concatenate([np.zeros(3), z[3:]]),
            ]
        elif self.name == "spin_oscillator":
            grads = [np.concatenate([np.zeros(2), z[2:]])]
        if not grads:
            return np.eye(self.dim)
        g = np.column_stack(grads)
        q, _ = np.linalg.qr(np.column_stack([g, np.eye(self.dim)]))
        # first columns span the normal space; the rest the tangent space
        k = g.shape[1]
        return q[:, k : self.dim]

    # ------------------------------------------------------------------
    # moment map
    # ------------------------------------------------------------------
    def moment(self, z):
        z = np.asarray(z, dtype=float)
        if self.name == "spherical_pendulum":
            x, y = z[:3], z[3:]
            return np.array([x[0] * y[1] - x[1] * y[0], 0.5 * (y @ y) + x[2]])
        if self.name == "coupled_angular_momenta":
            t, a, b = self.params
            x, y = z[:3], z[3:]
            return np.array(
                [x[2] + y[2], (1.0 - t) / a * y[2] + t / (a * b) * (x @ y)]
            )
        if self.name == "spin_oscillator":
            u, v = z[0], z[1]
            x, y, zc = z[2], z[3], z[4]
            return np.array([0.5 * (u * u + v * v) + zc, 0.5 * (u * x + v * y)])
        if self.name == "toric_product":
            return np.array([z[2], z[5]])
        # local models: first two component functions (n=1 models pad with 0)
        q = self._local_q(z)
        if len(q) == 1:
            return np.array([q[0], 0.0])
        return np.array(q[:2])

    def moment_gradients(self, z):
        """Ambient gradients (grad J, grad H) at z, as rows of a 2 x dim
        array (restrict with the tangent basis for intrinsic gradients)."""
        z = np.asarray(z, dtype=float)
        g = np.zeros((2, self.dim))
        if self.name == "spherical_pendulum":
            x, y = z[:3], z[3:]
            g[0, :3] = [y[1], -y[0], 0.0]
            g[0, 3:] = [-x[1], x[0], 0.0]
            g[1, 2] = 1.0
            g[1, 3:] = y
        elif self.name == "coupled_angular_momenta":
            t, a, b = self.params
            x, y = z[:3], z[3:]
            g[0, 2] = 1.0
            g[0, 5] = 1.0
            g[1, :3] = (t / (a * b)) * y
            g[1, 3:] = (t / (a * b)) * x
            g[1, 5] += (1.0 - t) / a
        elif self.name == "spin_oscillator":
            u, v = z[0], z[1]
            g[0] = [u, v, 0.0, 0.0, 1.0]
            g[1] = [0.5 * z[2], 0.5 * z[3], 0.5 * u, 0.5 * v, 0.0]
        elif self.name == "toric_product":
            g[0, 2] = 1.0
            g[1, 5] = 1.0
        else:
            n = self.dof
            x, xi = z[:n], z[n:]
            for comp, (kind, i) in enumerate(self._local_components()):
                if comp > 1:
                    break
                if kind == "reg":
                    g[comp, n + i] = 1.0
                elif kind == "ell":
                    g[comp, i] = x[i]
                    g[comp, n + i] = xi[i]
                elif kind == "hyp":
                    g[comp, i] = xi[i]
                    g[comp, n + i] = x[i]
                elif kind == "ff1":
                    g[comp, i] = xi[i + 1]
                    g[comp, i + 1] = -xi[i]
                    g[comp, n + i] = -x[i + 1]
                    g[comp, n + i + 1] = x[i]
                else:
                    g[comp, i] = xi[i]
                    g[comp, i + 1] = xi[i + 1]
                    g[comp, n + i] = x[i]
                    g[comp, n + i + 1] = x[i + 1]
        return g

    def _local_components(self):
        """Per-index component kind for local_model_Q: list of
        ('reg'|'ell'|'hyp', i) or ('ff1'|'ff2', i) with i the first
        coordinate index of the block."""
        k, ke, kh, kff = self.signature()
        comps = []
        i = 0
        for _ in range(k):
            comps.append(("reg", i))
            i += 1
        for _ in range(ke):
            comps.append(("ell", i))
            i += 1
        for _ in range(kh):
            comps.append(("hyp", i))
            i += 1
        for _ in range(kff):
            comps.append(("ff1", i))
            comps.append(("ff2", i))
            i += 2
        return comps

    def _local_q(self, z):
        n = self.dof
        x, xi = z[:n], z[n:]
        vals = []
        for kind, i in self._local_components():
            if kind == "reg":
                vals.append(xi[i])
            elif kind == "ell":
                vals.append(0.5 * (x[i] ** 2 + xi[i] ** 2))
            elif kind == "hyp":
                vals.append(x[i] * xi[i])
            elif kind == "ff1":
                vals.append(x[i] * xi[i + 1] - x[i + 1] * xi[i])
            else:
                vals.append(x[i] * xi[i] + x[i + 1] * xi[i + 1])
        return vals

    # ------------------------------------------------------------------
    # Hamiltonian vector fields (analytic, evaluated on the constraint set)
    # ------------------------------------------------------------------
    def vector_field(self, z, cJ, cH):
        """X at z for the combination cJ*J + cH*H."""
        z = np.asarray(z, dtype=float)
        if self.name == "spherical_pendulum":
            x, y = z[:3], z[3:]
            xdot = cJ * np.array([-x[1], x[0], 0.0]) + cH * y
            lam = x[2] - y @ y
            ydot = cJ * np.array([-y[1], y[0], 0.0]) + cH * (
                np.array([0.0, 0.0, -1.0]) + lam * x
            )
            return np.concatenate([xdot, ydot])
        if self.name == "coupled_angular_momenta":
            t, a, b = self.params
            x, y = z[:3], z[3:]
            e3 = np.array([0.0, 0.0, 1.0])
            gx = cJ * e3 + cH * (t / (a * b)) * y
            gy = cJ * e3 + cH * ((1.0 - t) / a * e3 + (t / (a * b)) * x)
            return np.concatenate([_cross(gx, x), _cross(gy, y)])
        if self.name == "spin_oscillator":
            u, v = z[0], z[1]
            s = z[2:]
            # oscillator factor: X_f = (-f_v, f_u)
            udot = cJ * (-v) + cH * (-0.5 * s[1])
            vdot = cJ * u + cH * (0.5 * s[0])
            gs = cJ * np.array([0.0, 0.0, 1.0]) + cH * np.array([0.5 * u, 0.5 * v, 0.0])
            return np.concatenate([[udot, vdot], _cross(gs, s)])
        if self.name == "toric_product":
            e3 = np.array([0.0, 0.0, 1.0])
            return np.concatenate([cJ * _cross(e3, z[:3]), cH * _cross(e3, z[3:])])
        return self._local_vf(z, cJ, cH)

    def _local_vf(self, z, c1, c2):
        n = self.dof
        x, xi = np.array(z[:n]), np.array(z[n:])
        xdot = np.zeros(n)
        xidot = np.zeros(n)
        coeffs = [c1, c2] + [0.0] * max(0, n - 2)
        for c, (kind, i) in zip(coeffs, self._local_components()):
            if c == 0.0:
                continue
            if kind == "reg":
                xdot[i] += c
            elif kind == "ell":
                xdot[i] += c * xi[i]
                xidot[i] += -c * x[i]
            elif kind == "hyp":
                xdot[i] += c * x[i]
                xidot[i] += -c * xi[i]
            elif kind == "ff1":
                xdot[i] += -c * x[i + 1]
                xdot[i + 1] += c * x[i]
                xidot[i] += -c * xi[i + 1]
                xidot[i + 1] += c * xi[i]
            else:  # ff2
                xdot[i] += c * x[i]
                xdot[i + 1] += c * x[i + 1]
                xidot[i] += -c * xi[i]
                xidot[i + 1] += -c * xi[i + 1]
        return np.concatenate([xdot, xidot])

    # ------------------------------------------------------------------
    # symplectic form on tangent vectors (ambient representation)
    # ------------------------------------------------------------------
    def omega(self, z, u, v):
        """omega_z(u, v) for tangent vectors u, v at z."""
        z = np.asarray(z, dtype=float)
        if self.name == "spherical_pendulum":
            # restriction of sum dy_i ^ dx_i
            return u[3:] @ v[:3] - u[:3] @ v[3:]
        if self.name == "coupled_angular_momenta":
            _, a, b = self.params
            return -(z[:3] @ _cross(u[:3], v[:3])) / (b * b) - (
                z[3:] @ _cross(u[3:], v[3:])
            ) / (a * a)
        if self.name == "spin_oscillator":
            osc = u[0] * v[1] - u[1] * v[0]
            sph = -(z[2:] @ _cross(u[2:], v[2:]))
            return osc + sph
        if self.name == "toric_product":
            a, b = self.params
            return -(z[:3] @ _cross(u[:3], v[:3])) / (a * a) - (
                z[3:] @ _cross(u[3:], v[3:])
            ) / (b * b)
        n = self.dof
        # omega = sum dxi_i ^ dx_i
        return u[n:] @ v[:n] - u[:n] @ v[n:]

    # ------------------------------------------------------------------
    # S^1 structure and shooting helpers
    # ------------------------------------------------------------------
    def rotation_planes(self):
        """Coordinate planes rotated (counterclockwise, unit speed) by the
        J-flow; empty when J does not generate a circle action."""
        if self.name in ("spherical_pendulum", "coupled_angular_momenta"):
            return [(0, 1), (3, 4)]
        if self.name == "spin_oscillator":
            return [(0, 1), (2, 3)]
        if self.name == "toric_product":
            return [(0, 1)]
        if self.name == "local_model_Q" and self.signature() == (0, 0, 0, 1):
            return [(0, 1), (2, 3)]
        return []

    def rotate(self, z, theta):
        """Closed form of the time-theta J-flow (rotation models only)."""
        planes = self.rotation_planes()
        if not planes:
            raise DomainError(f"{self.name}: J-flow is not a rotation")
        z = np.array(z, dtype=float)
        c, s = np.cos(theta), np.sin(theta)
        for i, j in planes:
            zi, zj = z[i], z[j]
            z[i] = c * zi - s * zj
            z[j] = s * zi + c * zj
        return z

    def align_angle(self, z, ref):
        """Angle theta with rotate(ref, theta) closest to z, from the
        rotating plane where ref has the largest radius."""
        planes = self.rotation_planes()
        best, rad = None, -1.0
        for i, j in planes:
            r = np.hypot(ref[i], ref[j])
            if r > rad:
                rad, best = r, (i, j)
        i, j = best
        return (np.arctan2(z[j], z[i]) - np.arctan2(ref[j], ref[i])) % (2 * np.pi)

    def invariant_functions(self):
        """S^1-invariant coordinate functions usable as Poincare sections
        (indices shared with the compiled backend)."""
        if self.name == "spherical_pendulum":
            return [
                ("x3", lambda z: z[2]),
                ("y3", lambda z: z[5]),
                ("x.y_perp", lambda z: z[0] * z[3] + z[1] * z[4]),
            ]
        if self.name == "coupled_angular_momenta":
            return [
                ("x3", lambda z: z[2]),
                ("y3", lambda z: z[5]),
                ("<x,y>", lambda z: z[:3] @ z[3:]),
            ]
        if self.name == "spin_oscillator":
            return [
                ("z", lambda z: z[4]),
                ("osc", lambda z: 0.5 * (z[0] ** 2 + z[1] ** 2)),
                ("uy-vx", lambda z: z[0] * z[3] - z[1] * z[2]),
            ]
        if self.name == "toric_product":
            return [
                ("y1", lambda z: z[3]),
                ("y2", lambda z: z[4]),
                ("x3", lambda z: z[2]),
            ]
        raise DomainError(f"{self.name}: no section functions (no S^1 action)")

    # ------------------------------------------------------------------
    # sampling (uniform for the Liouville measure)
    # ------------------------------------------------------------------
    def sample(self, rng, n, momentum_scale=1.5):
        """n phase-space points, uniform w.r.t. the Liouville measure on
        the compact models and on a bounded momentum window otherwise."""

        def unit_sphere(m):
            w = rng.normal(size=(m, 3))
            return w / np.linalg.norm(w, axis=1)[:, None]

        if self.name == "spherical_pendulum":
            x = unit_sphere(n)
            # uniform in the tangent disk of radius momentum_scale
            raw = rng.normal(size=(n, 3))
            raw -= np.sum(raw * x, axis=1)[:, None] * x
            raw /= np.linalg.norm(raw, axis=1)[:, None]
            r = momentum_scale * np.sqrt(rng.uniform(size=n))
            y = raw * r[:, None]
            return np.hstack([x, y])
        if self.name == "coupled_angular_momenta":
            _, a, b = self.params
            return np.hstack([b * unit_sphere(n), a * unit_sphere(n)])
        if self.name == "spin_oscillator":
            r = momentum_scale * np.sqrt(rng.uniform(size=n))
            phi = rng.uniform(0.0, 2 * np.pi, size=n)
            uv = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
            return np.hstack([uv, unit_sphere(n)])
        if self.name == "toric_product":
            a, b = self.params
            return np.hstack([a * unit_sphere(n), b * unit_sphere(n)])
        return rng.uniform(-momentum_scale, momentum_scale, size=(n, self.dim))

    def liouville_mass(self, momentum_scale=1.5):
        """Total Liouville volume of the sampled region."""
        if self.name == "spherical_pendulum":
            return 4 * np.pi * np.pi * momentum_scale**2
        if self.name == "coupled_angular_momenta":
            _, a, b = self.params
            return (4 * np.pi * a) * (4 * np.pi * b)
        if self.name == "spin_oscillator":
            return (np.pi * momentum_scale**2) * (4 * np.pi)
        if self.name == "toric_product":
            a, b = self.params
            return (4 * np.pi * a) * (4 * np.pi * b)
        return (2 * momentum_scale) ** self.dim


_DEFAULT_PARAMS = {
    "spherical_pendulum": (),
    "coupled_angular_momenta": (0.5, 1.0, 2.0),
    "spin_oscillator": (),
    "toric_product": (1.0, 1.0),
    "local_model_Q": (0, 0, 0, 1),
}


def get_model(name, **params):
    """Build a model by name with keyword parameters.

    coupled_angular_momenta: t, a, b; toric_product: a, b;
    local_model_Q: k, ke, kh, kff.
    """
    if name not in MODEL_NAMES:
        raise DomainError(f"unknown model '{name}'")
    if name == "coupled_angular_momenta":
        t = params.pop("t", 0.5)
        a = params.pop("a", 1.0)
        b = params.pop("b", 2.0)
        vec = (t, a, b)
    elif name == "toric_product":
        vec = (params.pop("a", 1.0), params.pop("b", 1.0))
    elif name == "local_model_Q":
        sig = (
            int(params.pop("k", 0)),
            int(params.pop("ke", 0)),
            int(params.pop("kh", 0)),
            int(params.pop("kff", 1)),
        )
        n = sig[0] + sig[1] + sig[2] + 2 * sig[3]
        if params.pop("n", n) != n or n not in (1, 2):
            raise DomainError(f"unsupported local model signature {sig}")
        if params:
            raise DomainError(f"unexpected parameters {sorted(params)}")
        return IntegrableModel(name, np.array(sig, dtype=float), dof=n)
    else:
        vec = ()
    if params:
        raise DomainError(f"unexpected parameters {sorted(params)} for {name}")
    return IntegrableModel(name, np.array(vec, dtype=float))


def model_from_json(doc):
    """Deserialize {"model": name, "params": {...}} (string or dict)."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if "model" not in doc:
        raise DomainError("model descriptor needs a 'model' field")
    return get_model(doc["model"], **doc.get("params", {}))
