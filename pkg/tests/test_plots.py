import math

import numpy as np
import pytest

from cli.plots import ellipse_patch, plot_ellipses
from optics.params import Band
from spectra.covariance import PRINTED, Covariance2, ellipse_from_covariance, ellipse_spectrum, rotate_covariance


def minor_axis(patch):
    angle = math.radians(patch.angle)
    return np.array([math.cos(angle), math.sin(angle)])


def test_ellipse_patch_minor_axis():
    sigma = Covariance2(0.25, 1.0)
    patch = ellipse_patch(ellipse_from_covariance(sigma), 0.0, 1.0)
    assert patch.angle % 180 == pytest.approx(0.0, abs=1e-9)
    assert patch.width < patch.height

    for psi0 in (0.3, 1.0, 2.5):
        rotated = rotate_covariance(sigma, psi0)
        ellipse = ellipse_from_covariance(rotated)
        axis = minor_axis(ellipse_patch(ellipse, 1.0, 2.0))
        assert axis @ rotated.matrix @ axis == pytest.approx(ellipse.v_min, rel=1e-9)


def test_plot_ellipses_without_ellipses(enmo, tmp_path):
    spectrum = ellipse_spectrum(enmo, 0.53, Band(1e4, 2e6, 32), cross_term=PRINTED)
    path = plot_ellipses(spectrum, str(tmp_path / "ellipses.svg"))
    with open(path) as f:
        assert "n/a" in f.read()
