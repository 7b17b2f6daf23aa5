import numpy as np
import pytest
from numpy.testing import assert_allclose

from semitoric.errors import DomainError
from semitoric.models import (
    ChartPoint,
    eval_moment,
    first_return,
    flow,
    get_model,
    hamiltonian_vector_field,
    integrate,
    model_from_json,
    poisson_bracket,
)

ALL_MODELS = ["spherical_pendulum", "coupled_angular_momenta",
              "spin_oscillator", "toric_product"]
SEMITORIC = ["coupled_angular_momenta", "spin_oscillator", "toric_product"]


# ----------------------------------------------------------------------
# moment evaluation
# ----------------------------------------------------------------------

def test_pendulum_north_rest(pendulum):
    mv = eval_moment(pendulum, pendulum.point([0, 0, 1, 0, 0, 0]))
    assert mv.a == 0.0 and mv.b == 1.0


def test_spin_oscillator_south_pole(spin_osc):
    mv = eval_moment(spin_osc, spin_osc.point([0, 0, 0, 0, -1]))
    assert mv.a == -1.0 and mv.b == 0.0


def test_cam_north_north_t0():
    m = get_model("coupled_angular_momenta", a=1.0, b=1.0, t=0.0)
    mv = eval_moment(m, m.point([0, 0, 1, 0, 0, 1]))
    assert mv.a == 2.0 and mv.b == 1.0


def test_constraint_violation_names_invariant(pendulum):
    with pytest.raises(DomainError, match=r"\|x\|\^2 - 1"):
        eval_moment(pendulum, pendulum.point([0, 0, 1.1, 0, 0, 0]))
    with pytest.raises(DomainError, match="<x,y>"):
        eval_moment(pendulum, pendulum.point([0, 0, 1.0, 0, 0.1, 0.1]))


def test_model_from_json():
    m = model_from_json('{"model": "coupled_angular_momenta", '
                        '"params": {"t": 0.25, "a": 1.5, "b": 2.5}}')
    assert m.params[0] == 0.25 and m.params[2] == 2.5
    with pytest.raises(DomainError):
        model_from_json({"model": "nonsense"})


# ----------------------------------------------------------------------
# Hamiltonian vector fields
# ----------------------------------------------------------------------

def test_local_model_canonical_field():
    m = get_model("local_model_Q", k=2, ke=0, kh=0, kff=0)
    v = hamiltonian_vector_field(m, "J", m.point([0.3, -0.2, 0.5, 0.7]))
    assert_allclose(v.components, [1, 0, 0, 0], atol=1e-15)


def test_pendulum_J_vanishes_at_pole(pendulum):
    v = hamiltonian_vector_field(pendulum, "J", pendulum.point([0, 0, 1, 0, 0, 0]))
    assert np.linalg.norm(v.components) == 0.0


def _fd_vector_field(model, z, cJ, cH, step=1e-6):
    """Finite-difference oracle: invert the restricted symplectic pairing
    against central differences of the combination along projected
    probes."""
    basis = model.tangent_basis(z)
    m = basis.shape[1]
    omega = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            omega[i, j] = model.omega(z, basis[:, i], basis[:, j])

    def f(w):
        mv = model.moment(w)
        return cJ * mv[0] + cH * mv[1]

    df = np.empty(m)
    for i in range(m):
        df[i] = (f(model.project(z + step * basis[:, i]))
                 - f(model.project(z - step * basis[:, i]))) / (2 * step)
    # omega(X, e_j) = -df_j with X = basis @ c reads omega.T c = -df
    coords = np.linalg.solve(omega.T, -df)
    return basis @ coords


@pytest.mark.parametrize("name", ALL_MODELS)
def test_vector_field_matches_fd_oracle(name, rng):
    model = get_model(name)
    for z in model.sample(rng, 10):
        z = model.project(z)
        cJ, cH = rng.normal(size=2)
        v = model.vector_field(z, cJ, cH)
        v_fd = _fd_vector_field(model, z, cJ, cH)
        scale = max(1.0, np.linalg.norm(v))
        assert np.linalg.norm(v - v_fd) / scale < 1e-6


def test_pendulum_H_field_example(pendulum):
    z = pendulum.project([1, 0, 0, 0, 0, 1])
    v = pendulum.vector_field(z, 0.0, 1.0)
    v_fd = _fd_vector_field(pendulum, z, 0.0, 1.0)
    assert np.linalg.norm(v - v_fd) < 1e-6


# ----------------------------------------------------------------------
# Poisson brackets
# ----------------------------------------------------------------------

@pytest.mark.parametrize("name", ALL_MODELS)
def test_bracket_involution_everywhere(name, rng):
    model = get_model(name)
    pts = model.sample(rng, 1000)
    worst = max(
        abs(poisson_bracket(model, 0, 1, model.point(model.project(z))))
        for z in pts
    )
    assert worst < 1e-9


def test_bracket_antisymmetry(pendulum, rng):
    z = pendulum.project(pendulum.sample(rng, 1)[0])
    assert poisson_bracket(pendulum, 0, 0, pendulum.point(z)) == 0.0


def test_local_model_darboux_bracket():
    # {xi_1, x_1} = 1 on the canonical chart: the regular local model has
    # J = xi_1, and omega(X_J, X) recovers the pairing
    m = get_model("local_model_Q", k=2, ke=0, kh=0, kff=0)
    z = np.array([0.1, 0.2, -0.3, 0.4])
    xj = m.vector_field(z, 1.0, 0.0)
    xh = m.vector_field(z, 0.0, 1.0)
    # {J, H} = {xi_1, xi_2} = 0; and omega(X_{xi_1}, d/dxi_1-dual) = 1
    assert abs(m.omega(z, xj, xh)) < 1e-15
    # direct check of {xi_1, x_1}: X_{x_1} = -d/dxi_1
    x1_field = np.array([0, 0, -1, 0.0])
    assert abs(m.omega(z, xj, x1_field) - 1.0) < 1e-15


# ----------------------------------------------------------------------
# flows
# ----------------------------------------------------------------------

def test_flow_duration_zero_is_identity(pendulum):
    p = pendulum.point([1, 0, 0, 0, 0.3, 0.4])
    q = flow(pendulum, "H", p, 0.0)
    assert_allclose(q.coords, p.coords)


@pytest.mark.parametrize("name", ALL_MODELS)
def test_flow_J_2pi_identity(name, rng):
    model = get_model(name)
    for z in model.sample(rng, 8):
        p = model.point(model.project(z))
        q = flow(model, "J", p, 2 * np.pi, tol=1e-10)
        assert np.linalg.norm(q.coords - p.coords) < 1e-6


@pytest.mark.parametrize("name", ALL_MODELS)
def test_flow_reversibility(name, rng):
    model = get_model(name)
    tol = 1e-9
    z = model.project(model.sample(rng, 1)[0])
    fwd = integrate(model, z, 0.3, 0.9, 2.3, rtol=tol)
    back = integrate(model, fwd, 0.3, 0.9, -2.3, rtol=tol)
    assert np.linalg.norm(back - z) < 2e-6


def test_energy_drift_long_orbit(pendulum):
    # duration-100 orbit against a tighter-tolerance reference integration
    z = pendulum.project([1, 0, 0, 0, 0.4, 0.7])
    F0 = pendulum.moment(z)
    z1 = integrate(pendulum, z, 0.0, 1.0, 100.0, rtol=1e-9)
    drift = np.abs(pendulum.moment(z1) - F0).max()
    assert drift < 1e-6
    z_ref = integrate(pendulum, z, 0.0, 1.0, 100.0, rtol=1e-12)
    assert np.linalg.norm(z1 - z_ref) < 1e-3


def test_backends_agree(pendulum):
    z = pendulum.project([0.6, -0.3, 0.74, 0.2, 0.5, 0.1])
    zc = integrate(pendulum, z, 0.4, 1.1, 3.7, rtol=1e-11)
    zp = integrate(pendulum, z, 0.4, 1.1, 3.7, rtol=1e-11, force_python=True)
    assert np.linalg.norm(zc - zp) < 1e-9


# ----------------------------------------------------------------------
# first return (shared shooting machinery)
# ----------------------------------------------------------------------

def test_first_return_closes_lattice(pendulum):
    z = np.array([1.0, 0, 0, 0, 0, 0.5])
    tau2, tau1, _ = first_return(pendulum, z)
    zz = integrate(pendulum, z, 0.0, 1.0, tau2, rtol=1e-11)
    zz = integrate(pendulum, zz, 1.0, 0.0, tau1, rtol=1e-11)
    assert np.linalg.norm(zz - z) < 1e-8


def test_first_return_is_fiber_intrinsic(pendulum):
    z = np.array([1.0, 0, 0, 0, 0, 0.5])
    t2a, t1a, _ = first_return(pendulum, z)
    z2 = integrate(pendulum, z, 0.0, 1.0, 0.789, rtol=1e-11)
    t2b, t1b, _ = first_return(pendulum, z2)
    assert abs(t2a - t2b) < 1e-8
    assert abs(t1a - t1b) < 1e-6
