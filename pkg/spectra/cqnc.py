"""
Phase-quadrature noise of the opto-mechanical sensor with and without the ENMO in front of it, and the metrics used
to judge the cancellation.
"""

import logging

import numpy as np
import pandas as pd

from app_config import GUARD_BAND_LINEWIDTHS, SHOT_NOISE
from optics.errors import InvalidParameter
from optics.params import to_hz
from optics.response import chi_cavity, chi_mech, enmo_strength, oms_strength
from spectra.covariance import loss_term

logger = logging.getLogger(__name__)

OMS_BASELINE_NOTE = ("S_oms is reconstructed as 1/2 + G_om^2 |chi_m|^2 / 2 (CQNC spectral density with the ENMO "
                     "removed and no loss term)")


class NoiseSpectrum:
    """Variance on a frequency grid, in shot-noise units with vacuum = 1/2."""

    def __init__(self, frequencies_hz, values, label=""):
        self.frequencies_hz = np.asarray(frequencies_hz, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.label = label
        if self.frequencies_hz.shape != self.values.shape:
            raise InvalidParameter("values", self.values.shape, "must match the frequency grid")
        if np.any(np.diff(self.frequencies_hz) <= 0):
            raise InvalidParameter("frequencies_hz", self.frequencies_hz, "the grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise InvalidParameter(label or "values", self.values, "spectra must be finite and positive")

    @property
    def db(self):
        """10 log10(S / (1/2)), i.e. dB relative to shot noise"""
        return 10 * np.log10(self.values / SHOT_NOISE)

    def __len__(self):
        return len(self.values)


def s_cqnc_terms(enmo, oms, omega):
    """The three terms of the CQNC phase-quadrature spectral density, evaluated separately."""
    omega = np.asarray(omega, dtype=float)
    strength = enmo_strength(enmo, omega)
    chi_sum = chi_mech(oms.mech, omega) + chi_cavity(enmo.ancilla, omega)
    return {
        "shot": np.full_like(omega, SHOT_NOISE) if omega.ndim else SHOT_NOISE,
        "back_action": strength ** 2 / 2 * np.abs(chi_sum) ** 2,
        "loss": loss_term(enmo, omega, strength),
    }


def s_cqnc(enmo, oms, omega):
    terms = s_cqnc_terms(enmo, oms, omega)
    return terms["shot"] + terms["back_action"] + terms["loss"]


def s_oms_only(oms, omega):
    """Ponderomotively squeezed phase noise of the OMS alone. See OMS_BASELINE_NOTE."""
    omega = np.asarray(omega, dtype=float)
    return SHOT_NOISE + oms_strength(oms, omega) ** 2 / 2 * np.abs(chi_mech(oms.mech, omega)) ** 2


def cancellation_db(s_before, s_after):
    """10 log10(s_before / s_after)"""
    s_before, s_after = np.asarray(s_before, dtype=float), np.asarray(s_after, dtype=float)
    if np.any(s_before <= 0) or np.any(s_after <= 0):
        raise InvalidParameter("spectrum", (s_before, s_after), "noise powers must be positive")
    return 10 * np.log10(s_before / s_after)


def qba_cancellation_fraction(s_before, s_after, floor=SHOT_NOISE):
    """
    Share of the excess noise above ``floor`` that was removed: (s_before - s_after) / (s_before - floor). One means
    everything above the floor is gone, negative values mean noise was added.
    """
    s_before, s_after = np.asarray(s_before, dtype=float), np.asarray(s_after, dtype=float)
    if np.any(s_before <= floor):
        raise InvalidParameter("s_before", s_before, "must exceed the floor {}".format(floor))
    return (s_before - s_after) / (s_before - floor)


def peak(values, frequencies_hz, omega_m_hz, mask):
    """Return the maximum of a curve restricted to mask, with where it occurs."""
    candidates = mask & np.isfinite(values)
    if not np.any(candidates):
        return None
    index = np.flatnonzero(candidates)[np.argmax(values[candidates])]
    return {
        "value": float(values[index]),
        "frequency_hz": float(frequencies_hz[index]),
        "frequency_over_omega_m": float(frequencies_hz[index] / omega_m_hz),
    }


class Projection:

    fraction_formula = "(S_oms - S_cqnc) / (S_oms - floor)"

    def __init__(self, enmo, oms, frequencies_hz, s_oms, s_after, guard_mask, guard_hz, floor, enmo_active):
        self.enmo = enmo
        self.oms = oms
        self.frequencies_hz = frequencies_hz
        self.omega_m_hz = to_hz(oms.mech.omega_m)
        self.s_oms = NoiseSpectrum(frequencies_hz, s_oms, "s_oms")
        self.s_cqnc = NoiseSpectrum(frequencies_hz, s_after, "s_cqnc")
        self.floor = floor
        self.guard_mask = guard_mask
        self.guard_hz = guard_hz
        self.enmo_active = enmo_active

        self.reduction_db = cancellation_db(s_oms, s_after)
        excess = s_oms > floor
        self.fraction = np.full_like(s_oms, np.nan)
        self.fraction[excess] = qba_cancellation_fraction(s_oms[excess], s_after[excess], floor)

        self.max_db = peak(self.reduction_db, frequencies_hz, self.omega_m_hz, guard_mask)
        self.max_fraction = peak(self.fraction, frequencies_hz, self.omega_m_hz, guard_mask)

    @property
    def cancels(self):
        return bool(self.enmo_active and self.max_db is not None and self.max_db["value"] > 0)

    def to_frame(self):
        return pd.DataFrame({
            "frequency_hz": self.frequencies_hz,
            "frequency_over_omega_m": self.frequencies_hz / self.omega_m_hz,
            "s_oms": self.s_oms.values,
            "s_cqnc": self.s_cqnc.values,
            "s_oms_db": self.s_oms.db,
            "s_cqnc_db": self.s_cqnc.db,
            "reduction_db": self.reduction_db,
            "qba_fraction": self.fraction,
            "in_guard_band": ~self.guard_mask,
        })

    def summary(self):
        return {
            "variant": self.enmo.variant.value,
            "cancels": self.cancels,
            "max_reduction_db": self.max_db,
            "max_qba_fraction": self.max_fraction,
            "fraction_formula": self.fraction_formula,
            "fraction_floor": self.floor,
            "omega_m_hz": self.omega_m_hz,
            "guard_band_hz": self.guard_hz,
            "notes": [OMS_BASELINE_NOTE] + ([] if self.enmo_active else
                                            ["g_a = 0: the ENMO is transparent, no cancellation"]),
        }


def project_cqnc(enmo, oms, band, guard_linewidths=GUARD_BAND_LINEWIDTHS, floor=SHOT_NOISE):
    """
    Compare the OMS alone with the ENMO + OMS cascade over a band.

    Maxima are searched outside omega_m +- guard_linewidths * gamma_m, where the bare mechanical resonance dominates
    every curve. An ENMO with g_a = 0 does nothing to the light, so the cascade then equals the OMS baseline.
    """
    frequencies_hz = band.frequencies_hz
    omega = band.omega
    s_oms = s_oms_only(oms, omega)
    enmo_active = enmo.g_a > 0
    s_after = s_cqnc(enmo, oms, omega) if enmo_active else s_oms.copy()
    guard = guard_linewidths * oms.mech.gamma_m
    guard_mask = np.abs(omega - oms.mech.omega_m) > guard

    projection = Projection(enmo, oms, frequencies_hz, s_oms, s_after, guard_mask, to_hz(guard), floor, enmo_active)
    if projection.max_db is not None:
        logger.info("Max reduction %.2f dB at %.3f omega_m (%s)", projection.max_db["value"],
                    projection.max_db["frequency_over_omega_m"], enmo.variant.value)
    if not projection.cancels:
        logger.warning("The ENMO doesn't reduce the OMS noise anywhere in the band")
    return projection
