import numpy as np
import pytest

from semitoric.errors import DomainError
from semitoric.models import get_model
from semitoric.singularities import (
    WilliamsonType,
    bifurcation_diagram,
    check_semitoric,
    classify_point,
    find_critical_points,
    moment_rank,
    wedge_norm,
)

SINGULAR_SIGNATURES = [
    (1, 1, 0, 0),
    (1, 0, 1, 0),
    (0, 2, 0, 0),
    (0, 1, 1, 0),
    (0, 0, 2, 0),
    (0, 0, 0, 1),
]


def test_williamson_constraint_validation():
    wt = WilliamsonType(0, 0, 0, 1)
    assert wt.n == 2
    with pytest.raises(DomainError):
        WilliamsonType(-1, 0, 0, 0)


@pytest.mark.parametrize("sig", SINGULAR_SIGNATURES)
def test_local_models_classified_exactly(sig, rng):
    model = get_model("local_model_Q", k=sig[0], ke=sig[1], kh=sig[2],
                      kff=sig[3])
    cp = classify_point(model, model.point(np.zeros(model.dim)), rng=rng)
    assert cp.wtype.as_tuple() == sig
    assert cp.nondegenerate


def test_local_models_many_combinations(rng):
    # classification independent of the random generic combination
    for sig in SINGULAR_SIGNATURES:
        model = get_model("local_model_Q", k=sig[0], ke=sig[1], kh=sig[2],
                          kff=sig[3])
        origin = model.point(np.zeros(model.dim))
        for _ in range(25):
            cp = classify_point(model, origin, rng=rng)
            assert cp.wtype.as_tuple() == sig


def test_eigenvalue_symmetry(rng):
    model = get_model("local_model_Q", kff=1)
    cp = classify_point(model, model.point(np.zeros(4)), rng=rng)
    eigs = np.array(cp.eigenvalues)
    s = max(abs(eigs))
    for lam in eigs:
        assert min(abs(eigs + lam)) < 1e-8 * s
        assert min(abs(eigs - lam.conjugate())) < 1e-8 * s


def test_pendulum_poles(pendulum, rng):
    top = classify_point(pendulum, pendulum.point([0, 0, 1, 0, 0, 0]), rng=rng)
    bottom = classify_point(pendulum, pendulum.point([0, 0, -1, 0, 0, 0]),
                            rng=rng)
    assert top.wtype.as_tuple() == (0, 0, 0, 1)
    assert bottom.wtype.as_tuple() == (0, 2, 0, 0)
    assert top.nondegenerate and bottom.nondegenerate


def test_cam_pole_types(cam, rng):
    expected = {(2.0, 1.0): (0, 2, 0, 0), (2.0, -1.0): (0, 2, 0, 0),
                (-2.0, 1.0): (0, 0, 0, 1), (-2.0, -1.0): (0, 2, 0, 0)}
    for (x3, y3), sig in expected.items():
        cp = classify_point(cam, cam.point([0, 0, x3, 0, 0, y3]), rng=rng)
        assert cp.wtype.as_tuple() == sig, (x3, y3)


def test_spin_osc_poles(spin_osc, rng):
    ff = classify_point(spin_osc, spin_osc.point([0, 0, 0, 0, 1.0]), rng=rng)
    ee = classify_point(spin_osc, spin_osc.point([0, 0, 0, 0, -1.0]), rng=rng)
    assert ff.wtype.as_tuple() == (0, 0, 0, 1)
    assert ee.wtype.as_tuple() == (0, 2, 0, 0)


def test_classification_invariant_under_momentum_shear(rng):
    # (J, H) -> (J, H + 0.3 J) preserves the quadruple at rank-0 points
    class Sheared:
        def __init__(self, base):
            self.base = base

        def __getattr__(self, name):
            return getattr(self.base, name)

        def moment(self, z):
            mj, mh = self.base.moment(z)
            return np.array([mj, mh + 0.3 * mj])

        def moment_gradients(self, z):
            g = self.base.moment_gradients(z)
            return np.array([g[0], g[1] + 0.3 * g[0]])

        def vector_field(self, z, cJ, cH):
            return self.base.vector_field(z, cJ + 0.3 * cH, cH)

    for name, z, sig in [
        ("spherical_pendulum", [0, 0, 1, 0, 0, 0], (0, 0, 0, 1)),
        ("spherical_pendulum", [0, 0, -1, 0, 0, 0], (0, 2, 0, 0)),
        ("coupled_angular_momenta", [0, 0, -2, 0, 0, 1], (0, 0, 0, 1)),
    ]:
        sheared = Sheared(get_model(name))
        cp = classify_point(sheared, sheared.point(z), rng=rng)
        assert cp.wtype.as_tuple() == sig


def test_regular_point_rejected(pendulum, rng):
    z = pendulum.project([1, 0, 0, 0, 0.3, 0.4])
    assert moment_rank(pendulum, z) == 2
    with pytest.raises(DomainError):
        classify_point(pendulum, pendulum.point(z), rng=rng)


# ----------------------------------------------------------------------
# search
# ----------------------------------------------------------------------

def test_pendulum_rank0_points_found(pendulum, rng):
    lo = -1.3 * np.ones(6)
    hi = 1.3 * np.ones(6)
    crits = find_critical_points(pendulum, (lo, hi), grid_density=150,
                                 rng=rng)
    rank0 = [cp for cp in crits if cp.rank == 0]
    assert len(rank0) == 2
    poles = sorted(round(cp.point.coords[2], 6) for cp in rank0)
    assert poles == [-1.0, 1.0]
    for cp in rank0:
        assert np.linalg.norm(cp.point.coords[3:]) < 1e-6
        assert wedge_norm(pendulum, cp.point.coords) < 1e-9


def test_toric_four_corners(toric, rng):
    lo = -1.2 * np.ones(6)
    hi = 1.2 * np.ones(6)
    crits = find_critical_points(toric, (lo, hi), grid_density=200, rng=rng)
    rank0 = [cp for cp in crits if cp.rank == 0]
    assert len(rank0) == 4
    assert all(cp.wtype.as_tuple() == (0, 2, 0, 0) for cp in rank0)


def test_local_ff_origin_only(rng):
    model = get_model("local_model_Q", kff=1)
    lo = -0.8 * np.ones(4)
    hi = 0.8 * np.ones(4)
    crits = find_critical_points(model, (lo, hi), grid_density=120, rng=rng)
    assert len(crits) == 1
    assert np.linalg.norm(crits[0].point.coords) < 1e-6
    assert crits[0].wtype.as_tuple() == (0, 0, 0, 1)


def test_williamson_constraint_on_outputs(cam, rng):
    lo = -2.3 * np.ones(6)
    hi = 2.3 * np.ones(6)
    for cp in find_critical_points(cam, (lo, hi), grid_density=150, rng=rng):
        wt = cp.wtype
        assert wt.k + wt.k_e + wt.k_h + 2 * wt.k_ff == 2


# ----------------------------------------------------------------------
# bifurcation diagram / semi-toric checks
# ----------------------------------------------------------------------

@pytest.mark.parametrize(
    "name,m_ff",
    [("spherical_pendulum", 1), ("spin_oscillator", 1), ("toric_product", 0),
     ("coupled_angular_momenta", 1)],
)
def test_m_ff_counts(name, m_ff, rng):
    model = get_model(name)
    scale = {"spherical_pendulum": 1.6, "spin_oscillator": 1.8}.get(name, 2.3)
    lo = -scale * np.ones(model.dim)
    hi = scale * np.ones(model.dim)
    diag = bifurcation_diagram(model, ((-4, 4), (-4, 4)), (lo, hi),
                               resolution=12, grid_density=200, rng=rng)
    assert diag.m_ff == m_ff


def test_pendulum_diagram_values(pendulum, rng):
    lo = -1.6 * np.ones(6)
    hi = 1.6 * np.ones(6)
    diag = bifurcation_diagram(pendulum, ((-3, 3), (-2, 4)), (lo, hi),
                               resolution=15, grid_density=150, rng=rng)
    assert diag.m_ff == 1
    f = diag.focus_values[0]
    assert abs(f.a) < 1e-8 and abs(f.b - 1.0) < 1e-8
    ee = [mv for mv, wt in diag.critical_values if wt.as_tuple() == (0, 2, 0, 0)]
    assert any(abs(mv.a) < 1e-8 and abs(mv.b + 1.0) < 1e-8 for mv in ee)
    er = [(mv, wt) for mv, wt in diag.critical_values if wt.k == 1]
    assert len(er) > 5
    assert all(wt.as_tuple() == (1, 1, 0, 0) for _, wt in er)
    # the elliptic-regular boundary curve opens upward: min at a = 0
    bs = {round(mv.a, 3): mv.b for mv, _ in er}
    assert min(bs.values()) >= -1.0 - 1e-9


@pytest.mark.parametrize("name", ["spin_oscillator", "coupled_angular_momenta"])
def test_check_semitoric(name, rng):
    model = get_model(name)
    report = check_semitoric(model, sample_budget=25, rng=rng,
                             grid_density=150)
    assert report["s1_nondegenerate"]
    assert report["s2_circle_action"]
    assert report["s3_simple"]
    assert report["properness"] == "not checked"


def test_cam_semitoric_at_spec_parameters(rng):
    model = get_model("coupled_angular_momenta", t=0.5, a=1.0, b=2.0)
    report = check_semitoric(model, sample_budget=20, rng=rng,
                             grid_density=150)
    assert report["s1_nondegenerate"] and report["s2_circle_action"]
    assert report["s3_simple"] and report["m_ff"] == 1
