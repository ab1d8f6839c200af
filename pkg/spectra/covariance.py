"""
Quadrature covariance matrices of the ENMO output, their rotation to a detection angle, optical loss, and the
squeezing ellipses they describe.

Convention: vacuum is 1/2 * I. Every field of Covariance2 may be a scalar or a numpy array over a frequency grid.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from app_config import PHYSICALITY_TOL, SHOT_NOISE
from optics.errors import InvalidParameter, NotPositiveDefinite, SingularConfiguration
from optics.params import require_finite
from optics.response import chi_cavity, enmo_strength

logger = logging.getLogger(__name__)

NORMALIZED = "normalized"
PRINTED = "printed"


@dataclass(frozen=True)
class Covariance2:
    vxx: object
    vpp: object
    vxp: object = 0.0

    def __post_init__(self):
        for name in ("vxx", "vpp", "vxp"):
            require_finite(name, getattr(self, name))
        for name in ("vxx", "vpp"):
            if np.any(np.asarray(getattr(self, name)) <= 0):
                raise InvalidParameter(name, getattr(self, name), "quadrature variances must be positive")

    @classmethod
    def vacuum(cls):
        return cls(SHOT_NOISE, SHOT_NOISE, 0.0)

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix[0, 0], matrix[1, 1], (matrix[0, 1] + matrix[1, 0]) / 2)

    @property
    def matrix(self):
        """Return the 2x2 matrix; only defined for scalar covariances"""
        return np.array([[self.vxx, self.vxp], [self.vxp, self.vpp]], dtype=float)

    @property
    def det(self):
        return self.vxx * self.vpp - self.vxp ** 2

    @property
    def trace(self):
        return self.vxx + self.vpp

    def __len__(self):
        return int(np.size(self.vpp))

    def at(self, index):
        """Pick one frequency out of a covariance evaluated on a grid."""
        return Covariance2(*(float(np.broadcast_to(v, np.shape(self.vpp))[index])
                             for v in (self.vxx, self.vpp, self.vxp)))


def rotation_matrix(psi):
    return np.array([[np.cos(psi), np.sin(psi)],
                     [-np.sin(psi), np.cos(psi)]])


def loss_term(enmo, omega, strength=None):
    """Vacuum noise let in by the ancilla cavity losses, the last term of the CQNC spectral density."""
    ancilla = enmo.ancilla
    if ancilla.detuning == 0:
        raise SingularConfiguration("The ancilla detuning delta_a is zero, but the loss term of the CQNC spectral "
                                    "density divides by delta_a^2.")
    omega = np.asarray(omega, dtype=float)
    strength = enmo_strength(enmo, omega) if strength is None else strength
    chi_sq = np.abs(chi_cavity(ancilla, omega)) ** 2
    return strength * ancilla.kappa * chi_sq / 2 * ((omega ** 2 + ancilla.kappa ** 2 / 4) / ancilla.detuning ** 2 + 1)


def enmo_covariance(enmo, omega, cross_term=NORMALIZED):
    """
    Covariance of the ENMO output field at angular frequency omega.

    The amplitude variance is 1/2 and the phase variance is 1/2 + G_a^2 |chi_a|^2 / 2 + loss. For the amplitude-phase
    correlation, ``cross_term="normalized"`` uses the dimensionless -G_a |chi_a| / 2, which makes the lossless matrix
    a minimum-uncertainty state. ``cross_term="printed"`` uses -G_a itself, in rad/s.
    """
    omega = np.asarray(omega, dtype=float)
    strength = enmo_strength(enmo, omega)
    chi_sq = np.abs(chi_cavity(enmo.ancilla, omega)) ** 2
    vpp = SHOT_NOISE + strength ** 2 * chi_sq / 2 + loss_term(enmo, omega, strength)
    if cross_term == NORMALIZED:
        vxp = -strength * np.sqrt(chi_sq) / 2
    elif cross_term == PRINTED:
        vxp = -strength
    else:
        raise InvalidParameter("cross_term", cross_term, "expected '{}' or '{}'".format(NORMALIZED, PRINTED))
    vxx = np.full_like(vpp, SHOT_NOISE) if np.ndim(vpp) else SHOT_NOISE
    return Covariance2(vxx, vpp, vxp)


def rotate_covariance(sigma, psi):
    """R(psi) sigma R(psi)^T"""
    c, s = np.cos(psi), np.sin(psi)
    return Covariance2(
        c ** 2 * sigma.vxx + 2 * c * s * sigma.vxp + s ** 2 * sigma.vpp,
        s ** 2 * sigma.vxx - 2 * c * s * sigma.vxp + c ** 2 * sigma.vpp,
        -c * s * sigma.vxx + (c ** 2 - s ** 2) * sigma.vxp + c * s * sigma.vpp,
    )


def apply_loss(sigma, eta):
    """Mix in vacuum: eta * sigma + (1 - eta) * I / 2"""
    if not 0 <= eta <= 1:
        raise InvalidParameter("eta", eta, "the efficiency must lie in [0, 1]")
    vacuum = (1 - eta) * SHOT_NOISE
    return Covariance2(eta * sigma.vxx + vacuum, eta * sigma.vpp + vacuum, eta * sigma.vxp)


def variance_at_angle(sigma, psi):
    """The (2, 2) element of the covariance rotated to detection angle psi."""
    c, s = np.cos(psi), np.sin(psi)
    return s ** 2 * sigma.vxx - 2 * s * c * sigma.vxp + c ** 2 * sigma.vpp


def physicality_report(sigma, tol=PHYSICALITY_TOL, frequencies_hz=None):
    """
    Compare det(sigma) against the uncertainty bound 1/4. The printed ENMO matrix is a model rather than a derived
    state, so violations are reported here instead of being assumed away.
    """
    margin = np.atleast_1d(sigma.det - SHOT_NOISE ** 2)
    violations = np.flatnonzero(margin < -tol)
    report = {
        "min_margin": float(np.min(margin)),
        "n_violations": int(len(violations)),
        "physical": bool(len(violations) == 0),
    }
    if frequencies_hz is not None:
        report["violation_frequencies_hz"] = [float(f) for f in np.asarray(frequencies_hz)[violations]]
    if len(violations):
        logger.warning("Covariance below the uncertainty bound at %d point(s), worst det - 1/4 = %.3g",
                       len(violations), report["min_margin"])
    return report


def canonical_angle(angle):
    """Fold an angle into [0, pi)."""
    angle = float(np.mod(angle, np.pi))
    return 0.0 if angle >= np.pi else angle


@dataclass(frozen=True)
class SqueezeEllipse:
    v_min: float
    v_max: float
    angle: float

    @property
    def squeezing_db(self):
        return 10 * np.log10(self.v_min / SHOT_NOISE)

    @property
    def antisqueezing_db(self):
        return 10 * np.log10(self.v_max / SHOT_NOISE)


def ellipse_from_covariance(sigma, degenerate_tol=1e-12):
    """
    Decompose a 2x2 covariance into its squeezing ellipse.

    ``angle`` is the detection angle psi at which variance_at_angle is smallest, so diag(1/4, 1) gives pi/2 and
    rotating the covariance by psi0 moves the angle by -psi0 (mod pi). Circles get angle 0.
    """
    if sigma.vxx <= 0 or sigma.det <= 0:
        raise NotPositiveDefinite(sigma.vxx, sigma.vpp, sigma.vxp)
    eigenvalues, eigenvectors = np.linalg.eigh(sigma.matrix)
    v_min, v_max = float(eigenvalues[0]), float(eigenvalues[1])
    if v_max - v_min <= degenerate_tol * v_max:
        return SqueezeEllipse(v_min, v_max, 0.0)
    x, p = eigenvectors[:, 0]
    # variance_at_angle reads the covariance along (-sin psi, cos psi)
    return SqueezeEllipse(v_min, v_max, canonical_angle(np.arctan2(-x, p)))


class EllipseSpectrum:
    """Ellipses over a band. Points whose covariance isn't positive definite hold NaN ellipses."""

    def __init__(self, frequencies_hz, ellipses, physical=None, physicality=None):
        self.frequencies_hz = np.asarray(frequencies_hz, dtype=float)
        self.ellipses = list(ellipses)
        self.physical = np.ones(len(self.ellipses), dtype=bool) if physical is None else np.asarray(physical)
        self.physicality = physicality

    def __len__(self):
        return len(self.ellipses)

    def __iter__(self):
        return iter(self.ellipses)

    def to_frame(self):
        return pd.DataFrame({
            "frequency_hz": self.frequencies_hz,
            "v_min": [e.v_min for e in self.ellipses],
            "v_max": [e.v_max for e in self.ellipses],
            "angle_rad": [e.angle for e in self.ellipses],
            "squeezing_db": [e.squeezing_db for e in self.ellipses],
            "antisqueezing_db": [e.antisqueezing_db for e in self.ellipses],
            "physical": self.physical,
        })


UNDEFINED_ELLIPSE = SqueezeEllipse(np.nan, np.nan, np.nan)


def ellipse_spectrum(enmo, eta, band, cross_term=NORMALIZED, tol=PHYSICALITY_TOL):
    """
    Squeezing ellipse of the detected ENMO output (after loss eta) at every frequency of the band. Points below the
    uncertainty bound are marked unphysical; those that aren't even positive definite get an undefined ellipse.
    """
    frequencies_hz = band.frequencies_hz
    sigma = apply_loss(enmo_covariance(enmo, band.omega, cross_term), eta)
    report = physicality_report(sigma, tol, frequencies_hz)
    physical = np.atleast_1d(sigma.det - SHOT_NOISE ** 2) >= -tol
    ellipses = []
    for i in range(len(sigma)):
        try:
            ellipses.append(ellipse_from_covariance(sigma.at(i)))
        except NotPositiveDefinite:
            ellipses.append(UNDEFINED_ELLIPSE)
    undefined = sum(e is UNDEFINED_ELLIPSE for e in ellipses)
    if undefined:
        logger.warning("No ellipse at %d point(s): the covariance isn't positive definite there", undefined)
    return EllipseSpectrum(frequencies_hz, ellipses, physical, report)
