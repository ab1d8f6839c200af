import math

import pytest
from hypothesis import given, strategies as st

from characterize.diagnostics import angle_flatness, infer_efficiency_from_squeezing, squeezing_from_efficiency
from optics.errors import NoSqueezing, UnphysicalPair
from spectra.covariance import Covariance2, rotate_covariance


def test_angle_flatness():
    assert angle_flatness(Covariance2.vacuum()) == 0
    assert angle_flatness(Covariance2(1.0, 1.0)) == 0
    assert angle_flatness(Covariance2(0.25, 1.0)) == pytest.approx(0.75)


@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(-0.9, 0.9), st.floats(-math.pi, math.pi))
def test_angle_flatness_ignores_rotation(vxx, vpp, correlation, psi):
    sigma = Covariance2(vxx, vpp, correlation * math.sqrt(vxx * vpp))
    assert angle_flatness(rotate_covariance(sigma, psi)) == pytest.approx(angle_flatness(sigma), abs=1e-9)


def test_infer_efficiency_from_squeezing():
    state = infer_efficiency_from_squeezing(-2.6, 6.0)
    assert state.eta == pytest.approx(0.531, abs=0.002)
    assert state.r > 0

    lossless = infer_efficiency_from_squeezing(-4.0, 4.0)
    assert lossless.eta == pytest.approx(1.0)
    assert lossless.r == pytest.approx(math.log(10 ** 0.4) / 2)

    state = infer_efficiency_from_squeezing(-3.0, 10.0)
    sqz, antisqz = squeezing_from_efficiency(state.eta, state.r)
    assert sqz == pytest.approx(-3.0)
    assert antisqz == pytest.approx(10.0)


@given(st.floats(0.05, 0.99), st.floats(0.05, 2.0))
def test_inference_inverts_the_forward_model(eta, r):
    sqz, antisqz = squeezing_from_efficiency(eta, r)
    state = infer_efficiency_from_squeezing(sqz, antisqz)
    assert state.eta == pytest.approx(eta, rel=1e-9)
    assert state.r == pytest.approx(r, rel=1e-9)


def test_infer_efficiency_errors():
    with pytest.raises(NoSqueezing):
        infer_efficiency_from_squeezing(0.5, 3.0)
    with pytest.raises(NoSqueezing):
        infer_efficiency_from_squeezing(-0.5, 0.0)
    with pytest.raises(UnphysicalPair):
        infer_efficiency_from_squeezing(-6.0, 3.0)
