"""Polarization coupling inside the ENMO cavity: the tilted waveplate acting as a beamsplitter between s and p."""

from collections import namedtuple

import numpy as np

from optics.errors import InvalidParameter
from optics.params import WaveplateSetting


BeamsplitterCheck = namedtuple("BeamsplitterCheck", ["passed", "residuals"])


def waveplate_matrix(wp):
    """Return the 2x2 coupling matrix of a waveplate with its optical axis at delta and retardation theta."""
    c, s = np.cos(wp.delta), np.sin(wp.delta)
    phase = np.exp(-1j * wp.theta)
    off_diagonal = (phase - 1) * s * c
    return np.array([[c ** 2 + phase * s ** 2, off_diagonal],
                     [off_diagonal, phase * c ** 2 + s ** 2]])


def beamsplitter_relations_check(matrix, tol=1e-10):
    """
    Check whether a coupling matrix [[t, r], [r', t']] behaves like a lossless beamsplitter.

    The three relations are |r| = |r'| and |t| = |t'|, |r|^2 + |t|^2 = 1, and t r'* + r t'* = 0. The last one is
    written with complex conjugates; without them it only holds for special waveplate angles.
    """
    if tol <= 0:
        raise InvalidParameter("tol", tol, "the tolerance must be positive")
    matrix = np.asarray(matrix, dtype=complex)
    (t, r), (r_prime, t_prime) = matrix
    residuals = {
        "equal_magnitudes": max(abs(abs(r) - abs(r_prime)), abs(abs(t) - abs(t_prime))),
        "energy_conservation": abs(abs(r) ** 2 + abs(t) ** 2 - 1),
        "phase_relation": abs(t * np.conj(r_prime) + r * np.conj(t_prime)),
    }
    return BeamsplitterCheck(all(value < tol for value in residuals.values()), residuals)


def g_bs_from_waveplate(wp, fsr):
    """g_bs = sin(2 delta) theta FSR"""
    if fsr <= 0:
        raise InvalidParameter("fsr", fsr, "the free spectral range must be positive")
    return np.sin(2 * wp.delta) * wp.theta * fsr


def waveplate_for_g_bs(g_bs, fsr, theta):
    """
    Return the WaveplateSetting with retardation theta that produces the beamsplitter coupling g_bs. The angle is
    taken on the branch delta in [0, pi/4].
    """
    if fsr <= 0:
        raise InvalidParameter("fsr", fsr, "the free spectral range must be positive")
    if theta == 0:
        raise InvalidParameter("theta", theta, "a waveplate without retardation can't couple the modes")
    sin_2delta = g_bs / (theta * fsr)
    if not -1 <= sin_2delta <= 1:
        raise InvalidParameter("g_bs", g_bs, "needs |sin(2 delta)| = {:.4g} > 1 at theta = {}".format(
            sin_2delta, theta))
    return WaveplateSetting(np.arcsin(sin_2delta) / 2, theta)


def normal_mode_splitting(delta_rel, g_bs):
    """
    Splitting of the two coupled polarization modes. At degeneracy it is 2 g_bs; away from it the usual two-mode
    eigenvalue result 2 sqrt((delta_rel/2)^2 + g_bs^2) is used.
    """
    if np.any(np.asarray(g_bs) < 0):
        raise InvalidParameter("g_bs", g_bs, "coupling strengths can't be negative")
    return 2 * np.sqrt((np.asarray(delta_rel) / 2) ** 2 + np.asarray(g_bs) ** 2)
