import math
from collections import namedtuple

from optics.errors import NoSqueezing, UnphysicalPair
from spectra.covariance import ellipse_from_covariance


SqueezerState = namedtuple("SqueezerState", ["eta", "r"])


def angle_flatness(sigma):
    """
    Spread of the variance over all detection angles, v_max - v_min. A thermal or vacuum state gives 0, which is
    what the g_bs = 0 alignment procedure minimizes.
    """
    ellipse = ellipse_from_covariance(sigma)
    return ellipse.v_max - ellipse.v_min


def db_to_ratio(db):
    return 10 ** (db / 10)


def infer_efficiency_from_squeezing(sqz_db, antisqz_db):
    """
    Solve V+- = eta e^{+-2r} + (1 - eta) for the efficiency and squeeze parameter of a single-mode squeezer. V is
    in vacuum-normalized units, so V = 10^(dB/10).

    With a = V+ - 1 and b = V- - 1 the ratio a / b = -e^{2r} fixes r, and eta = a / (e^{2r} - 1).
    """
    if sqz_db >= 0 or antisqz_db <= 0:
        raise NoSqueezing("Need squeezing below 0 dB and anti-squeezing above 0 dB, got {} dB / {} dB".format(
            sqz_db, antisqz_db))
    if -sqz_db > antisqz_db:
        raise UnphysicalPair("{} dB of squeezing with only {} dB of anti-squeezing would need an efficiency "
                             "above 1".format(sqz_db, antisqz_db))
    a = db_to_ratio(antisqz_db) - 1
    b = db_to_ratio(sqz_db) - 1
    gain = -a / b
    eta = a / (gain - 1)
    return SqueezerState(min(eta, 1.0), math.log(gain) / 2)


def squeezing_from_efficiency(eta, r):
    """Forward model of infer_efficiency_from_squeezing: return (squeezing dB, anti-squeezing dB)."""
    v_minus = eta * math.exp(-2 * r) + (1 - eta)
    v_plus = eta * math.exp(2 * r) + (1 - eta)
    return 10 * math.log10(v_minus), 10 * math.log10(v_plus)
