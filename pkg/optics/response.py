"""
Susceptibilities and measurement strengths.

Sign convention, used everywhere in the library:

    chi_cavity(w) =  1 / (kappa/2   - i (w + Delta))
    chi_mech(w)   = -1 / (gamma_m/2 - i (w - omega_m))

With Delta_a = -omega_m and kappa_a = gamma_m the two are exact negatives of each other, which is the cancellation
the second term of the CQNC spectral density relies on.
"""

import numpy as np

from optics.errors import InvalidParameter
from optics.params import Variant, require_finite


def chi_cavity(mode, omega):
    """Complex susceptibility [s] of an optical mode, peaking at omega = -detuning with value 2/kappa."""
    require_finite("omega", omega)
    return 1 / (mode.kappa / 2 - 1j * (np.asarray(omega) + mode.detuning))


def chi_mech(mech, omega):
    """Complex susceptibility [s] of the mechanical oscillator, -2/gamma_m on resonance."""
    require_finite("omega", omega)
    return -1 / (mech.gamma_m / 2 - 1j * (np.asarray(omega) - mech.omega_m))


def measurement_strength(g, kappa, chi_mag_sq):
    """G = g^2 kappa |chi|^2, a rate [rad/s]"""
    for name, value in (("g", g), ("kappa", kappa), ("chi_mag_sq", chi_mag_sq)):
        require_finite(name, value)
        if np.any(np.asarray(value) < 0):
            raise InvalidParameter(name, value, "must be non-negative")
    return g ** 2 * kappa * np.asarray(chi_mag_sq)


def enmo_strength(enmo, omega):
    """G_a of the ENMO, with the cavity picked by the configured variant."""
    cavity = enmo.ancilla if enmo.variant is Variant.AS_PRINTED else enmo.meter
    return measurement_strength(enmo.g_a, cavity.kappa, np.abs(chi_cavity(cavity, omega)) ** 2)


def oms_strength(oms, omega):
    """G_om of the opto-mechanical sensor, set by its meter cavity."""
    return measurement_strength(oms.g_om, oms.meter.kappa, np.abs(chi_cavity(oms.meter, omega)) ** 2)
