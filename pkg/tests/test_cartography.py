import random
from fractions import Fraction as Fr

import numpy as np
import pytest

from semitoric.cartography import (
    CutSpec,
    DecoratedPolygon,
    cartographic_map,
    check_polygon,
    duistermaat_heckman,
    epsilon_action,
    extract_polygon,
    v_action,
    v_compose,
)
from semitoric.errors import DomainError
from semitoric.models import get_model


# ----------------------------------------------------------------------
# exact polygon algebra
# ----------------------------------------------------------------------

def test_v_action_unit_square():
    sq = DecoratedPolygon(epsilons=(), vertices=((0, 0), (1, 0), (1, 1), (0, 1)))
    out = v_action(sq, (1, (0, 0)))
    assert out.as_floats() == [(0, 0), (1, 1), (1, 2), (0, 1)]


def test_v_action_increments_kappa():
    dp = DecoratedPolygon(epsilons=(1,), vertices=((0, 0), (2, 0), (1, 2)),
                          marked=(((1, 1), 3),))
    out = v_action(dp, (2, (Fr(1, 2), 0)))
    assert out.marked[0][1] == 5
    assert out.marked[0][0] == (Fr(3, 2), 3)


def test_v_action_identity_and_composition():
    rnd = random.Random(3)
    dp = DecoratedPolygon(
        epsilons=(1,),
        vertices=((0, 0), (3, 0), (2, 2), (0, 1)),
        marked=(((1, 1), 0),),
    )
    assert v_action(dp, (0, (0, 0))).vertices == dp.vertices
    for _ in range(30):
        r1 = (rnd.randint(-3, 3), (Fr(rnd.randint(-5, 5), 3),
                                   Fr(rnd.randint(-5, 5), 4)))
        r2 = (rnd.randint(-3, 3), (Fr(rnd.randint(-5, 5), 2),
                                   Fr(rnd.randint(-5, 5), 5)))
        lhs = v_action(v_action(dp, r1), r2)
        rhs = v_action(dp, v_compose(r2, r1))
        assert lhs.vertices == rhs.vertices
        assert lhs.marked == rhs.marked


def _random_decorated(rnd, m=1):
    # convex polygon around the marked x-lines
    xs = sorted(rnd.sample(range(-4, 5), 3))
    base = DecoratedPolygon(
        epsilons=tuple(rnd.choice((1, -1)) for _ in range(m)),
        vertices=((xs[0], 0), (xs[2], 0), (xs[2], 3), (xs[0], 3)),
        marked=tuple(((Fr(xs[1]), Fr(1)), rnd.randint(-2, 2))
                     for _ in range(m)),
    )
    return base


def test_epsilon_action_identity_and_involution():
    rnd = random.Random(5)
    for _ in range(40):
        dp = _random_decorated(rnd)
        same = epsilon_action(dp, (1,))
        assert same.vertices == dp.vertices
        flip = epsilon_action(dp, (-1,))
        assert flip.epsilons == (-dp.epsilons[0],)
        assert flip.marked == dp.marked
        back = epsilon_action(flip, (-1,))
        assert back.vertices == dp.vertices
        assert back.epsilons == dp.epsilons


def test_epsilon_and_v_actions_commute():
    rnd = random.Random(9)
    for _ in range(60):
        dp = _random_decorated(rnd)
        rho = (rnd.randint(-2, 2), (Fr(rnd.randint(-4, 4), 3),
                                    Fr(rnd.randint(-4, 4), 2)))
        eps = (rnd.choice((1, -1)),)
        a = epsilon_action(v_action(dp, rho), eps)
        b = v_action(epsilon_action(dp, eps), rho)
        assert a.vertices == b.vertices
        assert a.marked == b.marked
        assert a.epsilons == b.epsilons


def test_epsilon_action_inserts_shear_vertices():
    # shearing right of an edge-interior x creates boundary kinks there;
    # convexity is not preserved along the orbit in general
    dp = DecoratedPolygon(
        epsilons=(1,),
        vertices=((0, 0), (4, 0), (4, 2), (0, 2)),
        marked=(((Fr(2), Fr(1)), 0),),
    )
    out = epsilon_action(dp, (-1,))
    xs = sorted(set(v[0] for v in out.vertices))
    assert Fr(2) in xs
    rep = check_polygon(out)
    assert not rep["convex"]
    assert epsilon_action(out, (-1,)).vertices == dp.vertices


def test_check_polygon_examples():
    rect = DecoratedPolygon(epsilons=(), vertices=((0, 0), (2, 0), (2, 1), (0, 1)))
    rep = check_polygon(rect)
    assert rep["convex"] and rep["simple"]
    assert all(v["smooth"] for v in rep["smooth_vertices"])

    tri = DecoratedPolygon(epsilons=(), vertices=((0, 0), (2, 0), (0, 1)))
    rep = check_polygon(tri)
    by_vertex = {v["vertex"]: v for v in rep["smooth_vertices"]}
    assert by_vertex[(Fr(2), Fr(0))]["smooth"]
    assert abs(by_vertex[(Fr(2), Fr(0))]["det"]) == 1
    # the (0,1) vertex has primitive directions (2,-1), (0,-1): det 2
    assert not by_vertex[(Fr(0), Fr(1))]["smooth"]
    assert abs(by_vertex[(Fr(0), Fr(1))]["det"]) == 2


def test_non_unimodular_pair_detected():
    # normals (0,1) and (2,3): determinant -2, not unimodular
    dp = DecoratedPolygon(epsilons=(), vertices=((0, 0), (3, 0), (0, 2)))
    rep = check_polygon(dp)
    by_vertex = {v["vertex"]: v for v in rep["smooth_vertices"]}
    assert not by_vertex[(Fr(3), Fr(0))]["smooth"]


# ----------------------------------------------------------------------
# cartographic maps
# ----------------------------------------------------------------------

def test_toric_product_rectangle(toric):
    cm = cartographic_map(toric, CutSpec((), ()), x_window=(-1.0, 1.0),
                          resolution=21)
    dp = extract_polygon(cm)
    assert dp.as_floats() == [(-1, 0), (1, 0), (1, 2), (-1, 2)]
    rep = check_polygon(dp)
    assert rep["convex"] and all(v["smooth"] for v in rep["smooth_vertices"])


def test_cam_polygon_structure(cam_polygon_map):
    dp = extract_polygon(cam_polygon_map)
    assert dp.as_floats() == [(-3, 0), (1, -4), (3, -4), (-1, 0)]
    rep = check_polygon(dp)
    assert rep["convex"] and rep["simple"]
    assert not dp.unsnapped  # rational
    focus_x = Fr(-1)
    for v in rep["smooth_vertices"]:
        # off-cut vertices must be unimodular; non-smooth ones (here:
        # none arise, the boundary slopes are integers) would have to
        # share their x with the focus value
        if v["vertex"][0] != focus_x:
            assert v["smooth"]
        if not v["smooth"]:
            assert v["vertex"][0] == focus_x
    # marked point inside the polygon on the cut line
    (mx, my), kappa = dp.marked[0]
    assert mx == focus_x and kappa == 0
    assert -2 < float(my) < 0


def test_cam_polygon_resolution_stability(cam, cam_polygon_map):
    dp1 = extract_polygon(cam_polygon_map)
    cm2 = cartographic_map(cam, CutSpec((1,), ((-1.0, 0.0),)),
                           x_window=(-3.0, 3.0), resolution=66)
    dp2 = extract_polygon(cm2)
    v1 = np.array(dp1.as_floats())
    v2 = np.array(dp2.as_floats())
    assert v1.shape == v2.shape
    assert np.max(np.abs(v1 - v2)) < 1e-4


def test_cam_eps_flip_consistent_with_group_action(cam, cam_polygon_map):
    cm_minus = cartographic_map(cam, CutSpec((-1,), ((-1.0, 0.0),)),
                                x_window=(-3.0, 3.0), resolution=33)
    direct = extract_polygon(cm_minus)
    derived = epsilon_action(extract_polygon(cam_polygon_map), (-1,))
    assert direct.epsilons == derived.epsilons == (-1,)
    assert set(direct.vertices) == set(derived.vertices)


def test_eq13_jump_across_cut(cam, cam_polygon_map):
    # one-sided Jacobians above the focus value differ by a unit shear
    # [[1,0],[j,1]] with |j| = |eps| = 1 (the sign is -eps in this
    # package's counterclockwise orientation); the y-derivative is
    # continuous across the cut
    cm = cam_polygon_map
    y_probe = 0.35  # above the focus (-1, 0)
    d = 0.02
    f = {}
    for off in (-2 * d, -d, d, 2 * d):
        f[off] = cm.column_f2(-1.0 + off, [y_probe])[0]
    left_slope = (f[-d] - f[-2 * d]) / d
    right_slope = (f[2 * d] - f[d]) / d
    assert abs(left_slope - right_slope + 1.0) < 0.05
    fy = {}
    for off in (-d, d):
        lo, hi = cm.column_f2(-1.0 + off, [y_probe - 0.05, y_probe + 0.05])
        fy[off] = (hi - lo) / 0.1
    assert abs(fy[-d] - fy[d]) < 0.05


# ----------------------------------------------------------------------
# Duistermaat-Heckman
# ----------------------------------------------------------------------

def test_dh_toric_constant(toric, rng):
    dh = duistermaat_heckman(toric, (-0.9, 0.9), resolution=9,
                             mc_samples=100_000, breakpoints=[], rng=rng)
    assert np.allclose(dh.values, 2.0, atol=1e-6)
    assert dh.consistent


def test_dh_cam_tent(rng):
    model = get_model("coupled_angular_momenta", a=1.0, b=1.0, t=0.0)
    dh = duistermaat_heckman(model, (-2, 2), resolution=25,
                             mc_samples=150_000, breakpoints=[0.0], rng=rng)
    assert dh(0.0) == pytest.approx(2.0, abs=1e-3)
    assert dh(1.0) == pytest.approx(1.0, abs=1e-3)
    slopes = dh.slopes
    assert slopes[0] == pytest.approx(1.0, abs=1e-3)
    assert slopes[1] == pytest.approx(-1.0, abs=1e-3)
    assert dh.consistent
    assert dh.max_fit_residual < 1e-3


def test_dh_cam_focus_slope_change_integer(cam, rng):
    dh = duistermaat_heckman(cam, (-2.9, 2.9), resolution=30,
                             mc_samples=150_000,
                             breakpoints=[-1.0, 1.0], rng=rng)
    assert dh.max_fit_residual < 1e-3
    jumps = np.diff(dh.slopes)
    for j in jumps:
        assert abs(j - round(j)) < 1e-3
    # slope change at the focus x = -1 is the -1 of an isotropy weight
    assert round(jumps[0]) == -1
    assert dh.consistent
