"""Static SVG renderings. Fixed hash salt and no date metadata, so the same inputs give the same file."""

import logging

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from colour import Color  # noqa: E402
from matplotlib.patches import Ellipse  # noqa: E402

from app_config import TOOL_NAME  # noqa: E402

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = TOOL_NAME
matplotlib.rcParams["svg.fonttype"] = "none"


def rgb(color_string):
    return Color(color_string).rgb


PALETTE = {
    "oms": rgb("gray"),
    "cqnc": rgb("darkblue"),
    "reduction": rgb("darkgreen"),
    "guard": rgb("lightgray"),
    "ellipse": rgb("steelblue"),
    "vacuum": rgb("black"),
}


def save_svg(figure, path):
    figure.savefig(path, format="svg", metadata={"Date": None})
    plt.close(figure)
    logger.info("Wrote %s", path)
    return path


def plot_projection(projection, path):
    """Noise of the OMS alone and of the cascade, in dB relative to shot noise, against omega / omega_m."""
    x = projection.frequencies_hz / projection.omega_m_hz
    figure, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    top.plot(x, projection.s_oms.db, color=PALETTE["oms"], label="OMS alone")
    top.plot(x, projection.s_cqnc.db, color=PALETTE["cqnc"], label="ENMO + OMS")
    top.axhline(0.0, color=PALETTE["vacuum"], linewidth=0.5, linestyle=":")
    top.set_ylabel("noise [dB rel. shot noise]")
    top.legend(loc="upper right", frameon=False)

    bottom.plot(x, projection.reduction_db, color=PALETTE["reduction"])
    bottom.axhline(0.0, color=PALETTE["vacuum"], linewidth=0.5, linestyle=":")
    guard = projection.guard_hz / projection.omega_m_hz
    for axis in (top, bottom):
        axis.axvspan(1 - guard, 1 + guard, color=PALETTE["guard"])
        axis.set_xscale("log")
    bottom.set_ylabel("reduction [dB]")
    bottom.set_xlabel(r"$\omega / \omega_m$")
    return save_svg(figure, path)


def ellipse_patch(ellipse, position, scale):
    """Width along the minimum-variance quadrature, which points at psi + 90 degrees in the (x, p) plane."""
    return Ellipse((position, 0.0), 0.9 * np.sqrt(ellipse.v_min) / scale, 0.9 * np.sqrt(ellipse.v_max) / scale,
                   angle=np.degrees(ellipse.angle) + 90, facecolor=PALETTE["ellipse"], edgecolor=PALETTE["vacuum"],
                   linewidth=0.5)


def plot_ellipses(spectrum, path, n_samples=9):
    """
    A strip of squeezing ellipses at log-spaced samples of the band. The minor axis lies along the minimum-variance
    quadrature (-sin psi, cos psi) of the detection angle psi = angle_rad. Points without an ellipse are marked n/a.
    """
    indices = np.unique(np.round(np.geomspace(1, len(spectrum), n_samples)).astype(int) - 1)
    figure, axis = plt.subplots(figsize=(1.2 * len(indices) + 1, 2.2))
    drawn = [i for i in indices if np.isfinite(spectrum.ellipses[i].v_max)]
    scale = max((np.sqrt(spectrum.ellipses[i].v_max) for i in drawn), default=1.0)
    for position, index in enumerate(indices):
        ellipse = spectrum.ellipses[index]
        if index not in drawn:
            axis.text(position, 0.0, "n/a", ha="center", va="center", fontsize=8)
            continue
        axis.add_patch(ellipse_patch(ellipse, position, scale))
    axis.set_xlim(-0.6, len(indices) - 0.4)
    axis.set_ylim(-0.6, 0.6)
    axis.set_aspect("equal")
    axis.set_yticks([])
    axis.set_xticks(range(len(indices)))
    axis.set_xticklabels(["{:.3g}".format(spectrum.frequencies_hz[i] / 1e3) for i in indices])
    axis.set_xlabel("frequency [kHz]")
    return save_svg(figure, path)
