import numpy as np
import pytest
from numpy.testing import assert_allclose

from optics.errors import InvalidParameter
from optics.params import CavityMode, MechanicalMode, Variant, hz, table_i_enmo
from optics.response import chi_cavity, chi_mech, enmo_strength, measurement_strength


def test_chi_cavity():
    ancilla = CavityMode.from_hz(160e3, -710e3)
    # On the detuned resonance the susceptibility is real and maximal
    assert_allclose(chi_cavity(ancilla, hz(710e3)), 2 / hz(160e3))

    assert_allclose(abs(chi_cavity(ancilla, 0.0)), 1 / np.sqrt((hz(160e3) / 2) ** 2 + hz(710e3) ** 2))
    assert chi_cavity(CavityMode(2.0), 0.0) == 1.0


def test_chi_mech():
    mech = MechanicalMode.from_hz(710e3, 1.0)
    assert_allclose(chi_mech(mech, hz(710e3)), -2 / hz(1.0))

    omega = hz(np.linspace(1e3, 2e6, 20001))
    matched = CavityMode(mech.gamma_m, -mech.omega_m)
    assert np.all(chi_cavity(matched, omega) + chi_mech(mech, omega) == 0)


def test_chi_rejects_non_finite_frequency():
    with pytest.raises(InvalidParameter):
        chi_cavity(CavityMode(1.0), np.nan)
    with pytest.raises(InvalidParameter):
        chi_mech(MechanicalMode(10.0, 1.0), [0.0, np.inf])


def test_measurement_strength():
    assert_allclose(measurement_strength(2.0, 3.0, 0.5), 6.0)
    assert measurement_strength(0.0, 3.0, 0.5) == 0

    with pytest.raises(InvalidParameter):
        measurement_strength(-1.0, 3.0, 0.5)
    with pytest.raises(InvalidParameter):
        measurement_strength(1.0, 3.0, [0.5, -0.1])


def test_enmo_strength_variants():
    enmo = table_i_enmo()
    # 4 g_a^2 / kappa_a at the ancilla resonance
    assert_allclose(enmo_strength(enmo, hz(710e3)), hz(3062.5e3))

    meter = enmo.with_variant(Variant.METER_ANALOGY)
    assert_allclose(enmo_strength(meter, 0.0), 4 * hz(350e3) ** 2 / hz(980e3))
    assert_allclose(enmo_strength(meter, hz(490e3)), hz(350e3) ** 2 * hz(980e3) / (2 * hz(490e3) ** 2))
