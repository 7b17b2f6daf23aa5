import numpy as np
import pytest

from semitoric.models import get_model


@pytest.fixture(scope="session")
def pendulum():
    return get_model("spherical_pendulum")


@pytest.fixture(scope="session")
def cam():
    return get_model("coupled_angular_momenta")


@pytest.fixture(scope="session")
def spin_osc():
    return get_model("spin_oscillator")


@pytest.fixture(scope="session")
def toric():
    return get_model("toric_product")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def pendulum_spec_01():
    from semitoric.quantum import pendulum_params, pendulum_spectrum

    return pendulum_spectrum(pendulum_params(0.1, 60), ((-2, 2), (-1.2, 3)))


@pytest.fixture(scope="session")
def jc_spec_01():
    from semitoric.quantum import jc_params, jc_spectrum

    return jc_spectrum(jc_params(9.5, 140), ((-2.0, 2.5), (-1.5, 1.5)))


@pytest.fixture(scope="session")
def cam_polygon_map():
    from semitoric.cartography import CutSpec, cartographic_map

    model = get_model("coupled_angular_momenta")
    cut = CutSpec((1,), ((-1.0, 0.0),))
    return cartographic_map(model, cut, x_window=(-3.0, 3.0), resolution=33)
