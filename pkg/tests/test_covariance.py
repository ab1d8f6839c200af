import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from optics.errors import InvalidParameter, NotPositiveDefinite, SingularConfiguration
from optics.params import Band, hz
from spectra.covariance import PRINTED, Covariance2, apply_loss, canonical_angle, ellipse_from_covariance, \
    ellipse_spectrum, enmo_covariance, loss_term, physicality_report, rotate_covariance, rotation_matrix, \
    variance_at_angle


@st.composite
def covariances(draw):
    vxx = draw(st.floats(0.1, 10.0))
    vpp = draw(st.floats(0.1, 10.0))
    vxp = draw(st.floats(-0.99, 0.99)) * math.sqrt(vxx * vpp)
    return Covariance2(vxx, vpp, vxp)


angles = st.floats(-2 * math.pi, 2 * math.pi)


def test_covariance_validation():
    assert Covariance2.vacuum().matrix.tolist() == [[0.5, 0.0], [0.0, 0.5]]
    with pytest.raises(InvalidParameter):
        Covariance2(0.0, 0.5)
    with pytest.raises(InvalidParameter):
        Covariance2(0.5, np.nan)

    sigma = Covariance2.from_matrix([[1.0, 0.2], [0.4, 2.0]])
    assert sigma.vxp == pytest.approx(0.3)
    assert sigma.det == pytest.approx(2.0 - 0.09)
    assert sigma.trace == 3.0


def test_enmo_covariance_without_coupling_is_vacuum(enmo):
    sigma = enmo_covariance(enmo.with_coupling(0.0, 0.0), hz(np.geomspace(1e3, 5e6, 50)))
    assert_allclose(sigma.vxx, 0.5)
    assert_allclose(sigma.vpp, 0.5)
    assert_allclose(sigma.vxp, 0.0)


def test_enmo_covariance_excess_is_the_loss_term(enmo):
    omega = hz(np.geomspace(1e3, 5e6, 200))
    sigma = enmo_covariance(enmo, omega)
    assert_allclose(sigma.det - 0.25, loss_term(enmo, omega) / 2, rtol=1e-9, atol=1e-15)
    assert physicality_report(sigma)["physical"]


def test_printed_cross_term_is_reported_unphysical(enmo):
    frequencies_hz = np.geomspace(1e4, 2e6, 50)
    sigma = enmo_covariance(enmo, hz(frequencies_hz), cross_term=PRINTED)
    report = physicality_report(sigma, frequencies_hz=frequencies_hz)
    assert not report["physical"]
    assert report["n_violations"] == len(report["violation_frequencies_hz"]) > 0
    assert report["min_margin"] < 0

    with pytest.raises(InvalidParameter):
        enmo_covariance(enmo, 0.0, cross_term="literal")


def test_zero_detuning_is_singular(enmo):
    with pytest.raises(SingularConfiguration):
        enmo_covariance(enmo.with_ancilla(detuning=0.0), hz(100e3))


def test_rotation():
    sigma = Covariance2(0.25, 1.0, 0.1)
    swapped = rotate_covariance(sigma, math.pi / 2)
    assert_allclose([swapped.vxx, swapped.vpp, swapped.vxp], [1.0, 0.25, -0.1], atol=1e-15)

    psi = 0.7
    rotation = rotation_matrix(psi)
    expected = rotation @ sigma.matrix @ rotation.T
    assert_allclose(rotate_covariance(sigma, psi).matrix, expected)


@given(covariances(), angles)
def test_rotation_preserves_invariants(sigma, psi):
    rotated = rotate_covariance(sigma, psi)
    assert rotated.det == pytest.approx(sigma.det, rel=1e-9)
    assert rotated.trace == pytest.approx(sigma.trace, rel=1e-9)
    assert variance_at_angle(sigma, psi) == pytest.approx(rotated.vpp, rel=1e-9)


@given(covariances(), angles)
def test_variance_at_angle_is_pi_periodic(sigma, psi):
    assert variance_at_angle(sigma, psi + math.pi) == pytest.approx(variance_at_angle(sigma, psi), rel=1e-9)


def test_variance_at_angle():
    sigma = Covariance2(0.25, 1.0, 0.1)
    assert variance_at_angle(sigma, 0.0) == 1.0
    assert variance_at_angle(sigma, math.pi / 2) == pytest.approx(0.25)


def test_apply_loss():
    sigma = Covariance2(0.5, 2.0)
    assert apply_loss(sigma, 1.0) == sigma
    assert apply_loss(sigma, 0.0) == Covariance2.vacuum()
    assert apply_loss(sigma, 0.5).vpp == pytest.approx(1.25)

    with pytest.raises(InvalidParameter):
        apply_loss(sigma, 1.1)
    with pytest.raises(InvalidParameter):
        apply_loss(sigma, -0.1)


@given(covariances(), st.floats(0.0, 1.0))
def test_apply_loss_scales_distance_to_vacuum(sigma, eta):
    lossy = apply_loss(sigma, eta)
    assert lossy.vxx - 0.5 == pytest.approx(eta * (sigma.vxx - 0.5), abs=1e-12)
    assert lossy.vpp - 0.5 == pytest.approx(eta * (sigma.vpp - 0.5), abs=1e-12)
    assert lossy.vxp == pytest.approx(eta * sigma.vxp, abs=1e-12)


def test_ellipse_from_covariance():
    ellipse = ellipse_from_covariance(Covariance2(0.25, 1.0))
    assert ellipse.v_min == pytest.approx(0.25)
    assert ellipse.v_max == pytest.approx(1.0)
    assert ellipse.angle == pytest.approx(math.pi / 2)
    assert ellipse.squeezing_db == pytest.approx(10 * math.log10(0.5))

    vacuum = ellipse_from_covariance(Covariance2.vacuum())
    assert vacuum.v_min == vacuum.v_max == pytest.approx(0.5)
    assert vacuum.angle == 0.0

    with pytest.raises(NotPositiveDefinite) as error:
        ellipse_from_covariance(Covariance2(0.5, 0.5, 0.6))
    assert error.value.determinant == pytest.approx(0.25 - 0.36)


@given(covariances())
def test_ellipse_angle_minimizes_the_variance(sigma):
    ellipse = ellipse_from_covariance(sigma)
    assert 0 <= ellipse.angle < math.pi
    assert variance_at_angle(sigma, ellipse.angle) == pytest.approx(ellipse.v_min, rel=1e-9, abs=1e-12)
    assert variance_at_angle(sigma, ellipse.angle + math.pi / 2) == pytest.approx(ellipse.v_max, rel=1e-9, abs=1e-12)
    scan = [variance_at_angle(sigma, psi) for psi in np.linspace(0, math.pi, 181)]
    assert max(scan) <= ellipse.v_max * (1 + 1e-9)
    assert ellipse.v_min <= ellipse.v_max


def test_ellipse_follows_rotation():
    sigma = Covariance2(0.25, 1.0)
    for psi0 in (0.3, 1.0, 2.5):
        ellipse = ellipse_from_covariance(rotate_covariance(sigma, psi0))
        assert ellipse.angle == pytest.approx(canonical_angle(math.pi / 2 - psi0))


def test_ellipse_spectrum(enmo):
    band = Band(1e4, 2e6, 64)
    spectrum = ellipse_spectrum(enmo, 0.53, band)
    frame = spectrum.to_frame()
    assert list(frame.columns) == ["frequency_hz", "v_min", "v_max", "angle_rad", "squeezing_db", "antisqueezing_db",
                                   "physical"]
    assert frame.physical.all()
    assert spectrum.physicality["physical"]
    assert_allclose(frame.antisqueezing_db, 10 * np.log10(frame.v_max / 0.5))
    assert len(frame) == len(spectrum) == 64
    assert np.all(frame.v_min <= frame.v_max)
    assert np.all((frame.angle_rad >= 0) & (frame.angle_rad < math.pi))

    vacuum = ellipse_spectrum(enmo.with_coupling(0.0, 0.0), 1.0, band).to_frame()
    assert_allclose(vacuum.v_min, 0.5)
    assert_allclose(vacuum.v_max, 0.5)
    assert np.all(vacuum.angle_rad == 0)


def test_ellipse_spectrum_with_printed_cross_term(enmo):
    spectrum = ellipse_spectrum(enmo, 0.53, Band(1e4, 2e6, 64), cross_term=PRINTED)
    frame = spectrum.to_frame()
    assert len(frame) == 64
    assert not spectrum.physicality["physical"]
    assert spectrum.physicality["n_violations"] == int((~frame.physical).sum())
    assert frame.v_min.isna().any()
    assert frame[frame.v_min.isna()].physical.eq(False).all()


def test_ellipse_angle_across_the_ancilla_resonance(enmo):
    # The tilt away from pi/2 shrinks as the ancilla response grows, so it is smallest just above 710 kHz
    below = ellipse_spectrum(enmo, 0.53, Band(50e3, 700e3, 300, "linear")).to_frame().angle_rad.to_numpy()
    above = ellipse_spectrum(enmo, 0.53, Band(720e3, 1.2e6, 300, "linear")).to_frame().angle_rad.to_numpy()
    assert np.all(np.diff(below) < 0)
    assert np.all(np.diff(above) > 0)
    assert np.all((below > math.pi / 2) & (below < 3 * math.pi / 4))

    # eta doesn't move the angle
    lossless = ellipse_spectrum(enmo, 1.0, Band(50e3, 700e3, 300, "linear")).to_frame().angle_rad.to_numpy()
    assert_allclose(lossless, below, atol=1e-12)
