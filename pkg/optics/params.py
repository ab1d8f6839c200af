"""
Physical parameter types shared by every package.

All frequencies are stored as angular frequencies [rad/s]. Files and the command line speak Hz, and the conversion
happens exactly once, in the ``from_hz`` constructors and ``to_hz`` helpers below.
"""

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from optics.errors import InvalidParameter


TWO_PI = 2 * math.pi


def hz(value):
    """Convert Hz to rad/s. Works on scalars and numpy arrays."""
    return TWO_PI * np.asarray(value, dtype=float) if np.ndim(value) else TWO_PI * float(value)


def to_hz(value):
    """Convert rad/s to Hz."""
    return np.asarray(value, dtype=float) / TWO_PI if np.ndim(value) else float(value) / TWO_PI


def require_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise InvalidParameter(name, value, "must be finite")
    return value


class Variant(enum.Enum):
    """Which cavity sets the ENMO measurement strength G_a = g_a^2 kappa |chi|^2."""

    AS_PRINTED = "as-printed"  # ancilla cavity (kappa_a, chi_a)
    METER_ANALOGY = "meter-analogy"  # meter cavity (kappa_c, chi_c), mirroring the OMS definition

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("_", "-"))
        except ValueError:
            raise InvalidParameter("variant", value, "expected one of {}".format([v.value for v in cls]))


@dataclass(frozen=True)
class CavityMode:
    kappa: float
    detuning: float = 0.0
    fsr: float = None

    def __post_init__(self):
        require_finite("kappa", self.kappa)
        require_finite("detuning", self.detuning)
        if self.kappa <= 0:
            raise InvalidParameter("kappa", self.kappa, "the linewidth must be positive")
        if self.fsr is not None:
            require_finite("fsr", self.fsr)
            if self.fsr <= self.kappa:
                raise InvalidParameter("fsr", self.fsr, "the free spectral range must exceed the linewidth")

    @classmethod
    def from_hz(cls, kappa_hz, detuning_hz=0.0, fsr_hz=None):
        return cls(hz(kappa_hz), hz(detuning_hz), None if fsr_hz is None else hz(fsr_hz))


@dataclass(frozen=True)
class MechanicalMode:
    omega_m: float
    gamma_m: float

    def __post_init__(self):
        require_finite("omega_m", self.omega_m)
        require_finite("gamma_m", self.gamma_m)
        if self.omega_m <= 0:
            raise InvalidParameter("omega_m", self.omega_m, "the resonance frequency must be positive")
        if not 0 < self.gamma_m < self.omega_m:
            raise InvalidParameter("gamma_m", self.gamma_m, "the damping must be positive and below omega_m")

    @classmethod
    def from_hz(cls, omega_m_hz, gamma_m_hz):
        return cls(hz(omega_m_hz), hz(gamma_m_hz))


@dataclass(frozen=True)
class Coupling:
    g_bs: float
    g_dc: float

    def __post_init__(self):
        for name in ("g_bs", "g_dc"):
            value = require_finite(name, getattr(self, name))
            if value < 0:
                raise InvalidParameter(name, value, "coupling strengths can't be negative")

    @property
    def g_a(self):
        """Total ENMO coupling, g_bs + g_dc"""
        return self.g_bs + self.g_dc

    @classmethod
    def from_hz(cls, g_bs_hz, g_dc_hz):
        return cls(hz(g_bs_hz), hz(g_dc_hz))

    @classmethod
    def balanced(cls, g_a):
        """Split a total coupling evenly between the beamsplitter and down-conversion processes."""
        return cls(g_a / 2, g_a / 2)


@dataclass(frozen=True)
class EnmoParams:
    meter: CavityMode
    ancilla: CavityMode
    coupling: Coupling
    variant: Variant = Variant.AS_PRINTED

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.meter.kappa <= self.ancilla.kappa:
            raise InvalidParameter("meter.kappa", self.meter.kappa,
                                   "the meter cavity must be broader than the ancilla ({})".format(self.ancilla.kappa))

    @property
    def g_a(self):
        return self.coupling.g_a

    def with_ancilla(self, kappa=None, detuning=None):
        ancilla = replace(self.ancilla,
                          kappa=self.ancilla.kappa if kappa is None else kappa,
                          detuning=self.ancilla.detuning if detuning is None else detuning)
        return replace(self, ancilla=ancilla)

    def with_coupling(self, g_bs, g_dc):
        return replace(self, coupling=Coupling(g_bs, g_dc))

    def with_variant(self, variant):
        return replace(self, variant=Variant.parse(variant))


@dataclass(frozen=True)
class OmsParams:
    meter: CavityMode
    mech: MechanicalMode
    g_om: float

    def __post_init__(self):
        require_finite("g_om", self.g_om)
        if self.g_om < 0:
            raise InvalidParameter("g_om", self.g_om, "coupling strengths can't be negative")


@dataclass(frozen=True)
class WaveplateSetting:
    delta: float
    theta: float

    def __post_init__(self):
        require_finite("delta", self.delta)
        require_finite("theta", self.theta)


@dataclass(frozen=True)
class Band:
    """A frequency grid description, in Hz."""

    f_min_hz: float
    f_max_hz: float
    n_points: int = 2000
    spacing: str = "log"

    def __post_init__(self):
        if not self.f_min_hz < self.f_max_hz:
            raise InvalidParameter("band", (self.f_min_hz, self.f_max_hz), "f_min_hz must be below f_max_hz")
        if int(self.n_points) < 2:
            raise InvalidParameter("n_points", self.n_points, "need at least two grid points")
        if self.spacing not in ("linear", "log"):
            raise InvalidParameter("spacing", self.spacing, "expected 'linear' or 'log'")
        if self.spacing == "log" and self.f_min_hz <= 0:
            raise InvalidParameter("f_min_hz", self.f_min_hz, "a log-spaced grid needs a positive lower edge")

    @property
    def frequencies_hz(self):
        if self.spacing == "log":
            return np.geomspace(self.f_min_hz, self.f_max_hz, int(self.n_points))
        return np.linspace(self.f_min_hz, self.f_max_hz, int(self.n_points))

    @property
    def omega(self):
        return hz(self.frequencies_hz)

    @classmethod
    def from_dict(cls, data):
        return cls(float(data["f_min_hz"]), float(data["f_max_hz"]), int(data.get("n_points", 2000)),
                   data.get("spacing", "log"))

    def to_dict(self):
        return {"f_min_hz": self.f_min_hz, "f_max_hz": self.f_max_hz, "n_points": int(self.n_points),
                "spacing": self.spacing}


def enmo_from_dict(data, variant=None, detuning_hz=None):
    """
    Build EnmoParams from the Hz-valued keys used in parameter files.

    Either ``g_bs_hz`` and ``g_dc_hz`` or a total ``g_a_hz`` (split evenly) must be present. A file that lists
    several ``delta_a_hz`` values describes one ENMO per detuning, so ``detuning_hz`` must pick one of them.
    """
    delta_a_hz = data["delta_a_hz"] if detuning_hz is None else detuning_hz
    if isinstance(delta_a_hz, (list, tuple)):
        if len(delta_a_hz) != 1:
            raise InvalidParameter("delta_a_hz", delta_a_hz, "several detunings listed; choose one with detuning_hz")
        delta_a_hz = delta_a_hz[0]
    if "g_bs_hz" in data and "g_dc_hz" in data and data["g_bs_hz"] is not None and data["g_dc_hz"] is not None:
        coupling = Coupling.from_hz(data["g_bs_hz"], data["g_dc_hz"])
    else:
        coupling = Coupling.balanced(hz(data["g_a_hz"]))
    return EnmoParams(
        meter=CavityMode.from_hz(data["kappa_c_hz"], data.get("delta_c_hz", 0.0)),
        ancilla=CavityMode.from_hz(data["kappa_a_hz"], delta_a_hz, data.get("fsr_hz")),
        coupling=coupling,
        variant=Variant.parse(variant if variant is not None else data.get("variant", Variant.AS_PRINTED)),
    )


def oms_from_dict(data):
    """Build OmsParams from Hz-valued keys, either at the top level or nested under "oms"."""
    data = data.get("oms", data)
    return OmsParams(
        meter=CavityMode.from_hz(data["kappa_om_hz"], data.get("delta_om_hz", 0.0)),
        mech=MechanicalMode.from_hz(data["omega_m_hz"], data["gamma_m_hz"]),
        g_om=hz(data["g_om_hz"]),
    )


def enmo_to_dict(enmo):
    return {
        "kappa_a_hz": to_hz(enmo.ancilla.kappa),
        "delta_a_hz": to_hz(enmo.ancilla.detuning),
        "kappa_c_hz": to_hz(enmo.meter.kappa),
        "delta_c_hz": to_hz(enmo.meter.detuning),
        "g_bs_hz": to_hz(enmo.coupling.g_bs),
        "g_dc_hz": to_hz(enmo.coupling.g_dc),
        "g_a_hz": to_hz(enmo.g_a),
        "variant": enmo.variant.value,
    }


def oms_to_dict(oms):
    return {
        "kappa_om_hz": to_hz(oms.meter.kappa),
        "delta_om_hz": to_hz(oms.meter.detuning),
        "omega_m_hz": to_hz(oms.mech.omega_m),
        "gamma_m_hz": to_hz(oms.mech.gamma_m),
        "g_om_hz": to_hz(oms.g_om),
    }


# Fitted ENMO values and the membrane-in-the-middle OMS they were tuned for
TABLE_I_DETUNINGS_HZ = (-465e3, -710e3, -1050e3)
TABLE_I_FSR_HZ = 197.4e6


def table_i_enmo(delta_a_hz=-710e3, kappa_a_hz=160e3, variant=Variant.AS_PRINTED):
    return EnmoParams(
        meter=CavityMode.from_hz(980e3, 0.0),
        ancilla=CavityMode.from_hz(kappa_a_hz, delta_a_hz, TABLE_I_FSR_HZ),
        coupling=Coupling.from_hz(175e3, 175e3),
        variant=variant,
    )


def table_i_oms(omega_m_hz=710e3):
    return OmsParams(
        meter=CavityMode.from_hz(1e6, 0.0),
        mech=MechanicalMode.from_hz(omega_m_hz, 1.0),
        g_om=hz(350e3),
    )
