import numpy as np
import pytest

from semitoric.actions import (
    action_integrals,
    classical_monodromy,
    fiber_point,
    period_basis,
    rectangle_loop,
)
from semitoric.actions.periods import TWO_PI
from semitoric.errors import DomainError, NonClosedFormError
from semitoric.models import MomentValue, get_model, integrate


def _pendulum_fiber_seed(b, theta=2.0):
    """Point on the pendulum fiber J=0, H=b (constructed by hand)."""
    c, s = np.cos(theta), np.sin(theta)
    y = np.sqrt(2 * (b - c)) * np.array([c, 0, -s])
    return np.concatenate([[s, 0, c], y])


def test_period_basis_first_element(pendulum):
    z = _pendulum_fiber_seed(0.3)
    pb = period_basis(pendulum, MomentValue(0.0, 0.3), z)
    assert pb.first == (TWO_PI, 0.0)
    assert pb.second[1] > 0
    assert 0 <= pb.second[0] < TWO_PI


def test_period_basis_rejects_off_fiber_seed(pendulum):
    z = _pendulum_fiber_seed(0.3)
    with pytest.raises(DomainError):
        period_basis(pendulum, MomentValue(0.0, 0.5), z)


def test_period_consistency_across_seeds(pendulum):
    z1 = _pendulum_fiber_seed(0.3)
    z2 = integrate(pendulum, z1, 0.7, 1.3, 2.1, rtol=1e-11)
    pb1 = period_basis(pendulum, MomentValue(0.0, 0.3), z1)
    pb2 = period_basis(pendulum, MomentValue(0.0, 0.3), z2)
    assert abs(pb1.second[1] - pb2.second[1]) < 1e-6
    d = abs(pb1.second[0] - pb2.second[0]) % TWO_PI
    assert min(d, TWO_PI - d) < 1e-6


def test_tau2_lograrithmic_divergence(pendulum):
    # tau2/2*pi ~ (1/2*pi) log(1/|w|) approaching the focus value (0, 1)
    rads = np.array([3e-3, 1e-2, 3e-2, 1e-1])
    taus = []
    for r in rads:
        z = _pendulum_fiber_seed(1.0 - r)
        pb = period_basis(pendulum, MomentValue(0.0, 1.0 - r), z)
        taus.append(pb.second[1] / TWO_PI)
    logs = np.log(1.0 / rads)
    slope = np.polyfit(logs, taus, 1)[0]
    assert abs(slope - 1 / TWO_PI) / (1 / TWO_PI) < 0.05
    # the decomposition's smooth remainder stays bounded
    rem = np.asarray(taus) - logs / TWO_PI
    assert np.ptp(rem) < 0.1


def test_action_chart_gradients(pendulum):
    region = ((0.55, 1.15), (1.2, 2.0))
    ch = action_integrals(pendulum, region, MomentValue(0.85, 1.6),
                          n_a=17, n_b=17)
    assert ch.max_plaquette_defect < 1e-5
    i, j = 8, 8
    db = ch.grid_b[1] - ch.grid_b[0]
    da = ch.grid_a[1] - ch.grid_a[0]
    dg2db = (ch.g2[i, j + 1] - ch.g2[i, j - 1]) / (2 * db)
    dg2da = (ch.g2[i + 1, j] - ch.g2[i - 1, j]) / (2 * da)
    assert abs(dg2db - ch.tau2[i, j] / TWO_PI) < 1e-4
    assert abs(dg2da - ch.tau1[i, j] / TWO_PI) < 1e-4
    # base-point normalization
    i0 = np.argmin(abs(ch.grid_a - 0.85))
    j0 = np.argmin(abs(ch.grid_b - 1.6))
    assert ch.g2[i0, j0] == 0.0
    assert ch.g1[i0, j0] == pytest.approx(0.0, abs=1e-12)


def test_action_chart_detects_enclosed_critical_value(pendulum):
    region = ((-0.4, 0.4), (0.6, 1.4))  # contains the focus value (0, 1)
    with pytest.raises(NonClosedFormError):
        action_integrals(pendulum, region, MomentValue(-0.3, 0.7),
                         n_a=9, n_b=9)


def _is_unipotent_shear(mat):
    M = mat.as_array()
    if not np.array_equal(M, np.eye(2, dtype=int)):
        D = M - np.eye(2, dtype=int)
        return np.trace(M) == 2 and np.max(np.abs(D)) == 1 and \
            round(np.linalg.det(M)) == 1
    return False


def test_pendulum_monodromy_unipotent(pendulum):
    loop = rectangle_loop(MomentValue(0.0, 1.0), 0.6, 0.55)
    mat, resid = classical_monodromy(pendulum, loop, return_residual=True)
    assert resid < 1e-3
    assert _is_unipotent_shear(mat)


def test_monodromy_trivial_in_regular_region(pendulum):
    loop = rectangle_loop(MomentValue(1.2, 2.0), 0.3, 0.4)
    mat = classical_monodromy(pendulum, loop)
    assert np.array_equal(mat.as_array(), np.eye(2, dtype=int))


def test_monodromy_reversed_loop_inverse(pendulum):
    loop = rectangle_loop(MomentValue(0.0, 1.0), 0.6, 0.55)
    m1 = classical_monodromy(pendulum, loop)
    m2 = classical_monodromy(pendulum, loop[::-1])
    assert np.array_equal(m1.as_array() @ m2.as_array(), np.eye(2, dtype=int))


@pytest.mark.parametrize("name,center", [
    ("spin_oscillator", (1.0, 0.0)),
    ("coupled_angular_momenta", (-1.0, 0.0)),
])
def test_monodromy_other_focus_models(name, center):
    model = get_model(name)
    loop = rectangle_loop(MomentValue(*center), 0.45, 0.3)
    mat = classical_monodromy(model, loop)
    assert _is_unipotent_shear(mat)
    assert round(np.linalg.det(mat.as_array())) == 1
    assert np.trace(mat.as_array()) == 2


def test_fiber_point_accuracy(cam, rng):
    pts = cam.sample(rng, 500)
    mv = np.array([cam.moment(z) for z in pts])
    target = np.array([0.7, 0.4])
    guess = pts[np.argmin(np.sum((mv - target) ** 2, axis=1))]
    z = fiber_point(cam, target, guess)
    assert np.linalg.norm(cam.moment(z) - target) < 1e-10
    for label, r in cam.constraint_residuals(z).items():
        assert abs(r) < 1e-12, label
