"""
Term-by-term scalar evaluation of the ENMO covariance and the CQNC spectral density in plain complex arithmetic,
written without any library code so the vectorised implementation can be checked against it.
"""


def cavity(kappa, detuning, omega):
    return 1 / complex(kappa / 2, -(omega + detuning))


def mechanics(omega_m, gamma_m, omega):
    return -1 / complex(gamma_m / 2, -(omega - omega_m))


def strength(g_a, kappa_a, delta_a, kappa_c, delta_c, omega, meter_analogy):
    if meter_analogy:
        return g_a ** 2 * kappa_c * abs(cavity(kappa_c, delta_c, omega)) ** 2
    return g_a ** 2 * kappa_a * abs(cavity(kappa_a, delta_a, omega)) ** 2


def loss(g, kappa_a, delta_a, omega):
    chi_a_sq = abs(cavity(kappa_a, delta_a, omega)) ** 2
    return g * kappa_a * chi_a_sq / 2 * ((omega ** 2 + kappa_a ** 2 / 4) / delta_a ** 2 + 1)


def enmo_covariance(g_a, kappa_a, delta_a, kappa_c, delta_c, omega, meter_analogy=False):
    """(vxx, vpp, vxp) with the dimensionless cross term"""
    g = strength(g_a, kappa_a, delta_a, kappa_c, delta_c, omega, meter_analogy)
    chi_a = abs(cavity(kappa_a, delta_a, omega))
    vpp = 0.5 + g ** 2 * chi_a ** 2 / 2 + loss(g, kappa_a, delta_a, omega)
    return 0.5, vpp, -g * chi_a / 2


def s_cqnc(g_a, kappa_a, delta_a, kappa_c, delta_c, omega_m, gamma_m, omega, meter_analogy=False):
    g = strength(g_a, kappa_a, delta_a, kappa_c, delta_c, omega, meter_analogy)
    chi_sum = mechanics(omega_m, gamma_m, omega) + cavity(kappa_a, delta_a, omega)
    return 0.5 + g ** 2 / 2 * abs(chi_sum) ** 2 + loss(g, kappa_a, delta_a, omega)
