"""
The in-situ characterization model: the ENMO covariance with chi_m = 0, rotated to each trace's detection angle and
degraded by the detection efficiency. Also generates synthetic trace sets from it.
"""

import logging
import string
from dataclasses import dataclass, field, replace

import numpy as np

from characterize.traces import Trace, TraceSet
from optics.errors import InvalidParameter
from optics.params import (Band, CavityMode, Coupling, EnmoParams, Variant, hz, require_finite, to_hz)
from spectra.covariance import NORMALIZED, apply_loss, canonical_angle, enmo_covariance, rotate_covariance, \
    variance_at_angle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitParams:
    """
    Parameters of a multi-trace fit. Rates are in rad/s. ``delta_a`` has one entry per detuning group and ``psi`` one
    entry per trace, both in the order of the TraceSet they describe.
    """

    g_bs: float
    g_dc: float
    kappa_a: float
    delta_a: tuple
    kappa_c: float
    delta_c: float
    eta: float
    psi: tuple = ()
    variant: Variant = Variant.AS_PRINTED

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "delta_a", tuple(float(d) for d in np.atleast_1d(self.delta_a)))
        object.__setattr__(self, "psi", tuple(canonical_angle(p) for p in np.atleast_1d(self.psi)))
        for name in ("g_bs", "g_dc", "kappa_a", "kappa_c", "delta_c", "eta"):
            require_finite(name, getattr(self, name))
        require_finite("delta_a", self.delta_a)
        if self.kappa_a <= 0 or self.kappa_c <= 0:
            raise InvalidParameter("kappa", (self.kappa_a, self.kappa_c), "linewidths must be positive")
        if not 0 <= self.eta <= 1:
            raise InvalidParameter("eta", self.eta, "the efficiency must lie in [0, 1]")

    @property
    def g_a(self):
        return self.g_bs + self.g_dc

    def enmo(self, group=0):
        return EnmoParams(
            meter=CavityMode(self.kappa_c, self.delta_c),
            ancilla=CavityMode(self.kappa_a, self.delta_a[group]),
            coupling=Coupling(self.g_bs, self.g_dc),
            variant=self.variant,
        )

    def with_(self, **changes):
        return replace(self, **changes)

    @classmethod
    def from_enmo(cls, enmo, eta, psi=(), delta_a=None):
        return cls(enmo.coupling.g_bs, enmo.coupling.g_dc, enmo.ancilla.kappa,
                   enmo.ancilla.detuning if delta_a is None else delta_a,
                   enmo.meter.kappa, enmo.meter.detuning, eta, psi, enmo.variant)

    @classmethod
    def from_dict(cls, data, variant=None):
        """Read the Hz-valued parameter-file keys (kappa_a_hz, delta_a_hz, ..., eta, psi_rad)."""
        if data.get("g_bs_hz") is not None and data.get("g_dc_hz") is not None:
            g_bs, g_dc = hz(data["g_bs_hz"]), hz(data["g_dc_hz"])
        else:
            g_bs = g_dc = hz(data["g_a_hz"]) / 2
        return cls(
            g_bs=g_bs,
            g_dc=g_dc,
            kappa_a=hz(data["kappa_a_hz"]),
            delta_a=tuple(hz(np.atleast_1d(data["delta_a_hz"]))),
            kappa_c=hz(data["kappa_c_hz"]),
            delta_c=hz(data.get("delta_c_hz", 0.0)),
            eta=float(data.get("eta", 1.0)),
            psi=tuple(data.get("psi_rad", ())),
            variant=variant if variant is not None else data.get("variant", Variant.AS_PRINTED),
        )

    def to_dict(self):
        return {
            "kappa_a_hz": to_hz(self.kappa_a),
            "delta_a_hz": [to_hz(d) for d in self.delta_a],
            "kappa_c_hz": to_hz(self.kappa_c),
            "delta_c_hz": to_hz(self.delta_c),
            "g_bs_hz": to_hz(self.g_bs),
            "g_dc_hz": to_hz(self.g_dc),
            "g_a_hz": to_hz(self.g_a),
            "eta": self.eta,
            "psi_rad": list(self.psi),
            "variant": self.variant.value,
        }


def model_variance(params, omega, psi, group=0, cross_term=NORMALIZED):
    """
    Detected variance (vacuum = 1/2) of the ENMO output at detection angle psi: rotate the covariance, apply the
    detection loss, read the phase quadrature.
    """
    sigma = enmo_covariance(params.enmo(group), omega, cross_term)
    return variance_at_angle(apply_loss(rotate_covariance(sigma, psi), params.eta), 0.0)


@dataclass(frozen=True)
class Design:
    """
    Measurement layout for synthetic data: which detunings, which detection angles at each detuning, the
    frequency band, and the multiplicative noise level.
    """

    detunings_hz: tuple
    angles_rad: tuple
    band: Band
    noise_level: float = 0.0
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "detunings_hz", tuple(float(d) for d in self.detunings_hz))
        object.__setattr__(self, "angles_rad", tuple(tuple(float(a) for a in np.atleast_1d(angles))
                                                     for angles in self.angles_rad))
        if not self.detunings_hz:
            raise InvalidParameter("detunings_hz", self.detunings_hz, "need at least one detuning")
        if len(self.angles_rad) != len(self.detunings_hz):
            raise InvalidParameter("angles_rad", self.angles_rad, "need one list of angles per detuning")
        if any(not angles for angles in self.angles_rad):
            raise InvalidParameter("angles_rad", self.angles_rad, "every detuning needs at least one angle")
        if self.noise_level < 0:
            raise InvalidParameter("noise_level", self.noise_level, "can't be negative")

    @property
    def layout(self):
        """(group, psi) for every trace, in trace order"""
        return [(group, psi) for group, angles in enumerate(self.angles_rad) for psi in angles]

    def apply(self, params):
        """Return params with the detunings and detection angles of this design."""
        return params.with_(delta_a=tuple(hz(d) for d in self.detunings_hz),
                            psi=tuple(psi for _, psi in self.layout))

    @classmethod
    def from_dict(cls, data):
        """
        Keys: detunings_hz, angles_rad (one list per detuning, or a single list reused for all), band,
        noise_level, seed, metadata
        """
        detunings = tuple(data["detunings_hz"])
        angles = data["angles_rad"]
        if angles and np.ndim(angles[0]) == 0:
            angles = [angles] * len(detunings)
        return cls(detunings, tuple(angles), Band.from_dict(data["band"]), float(data.get("noise_level", 0.0)),
                   int(data.get("seed", 0)), dict(data.get("metadata", {})))


def angle_label(position):
    return string.ascii_uppercase[position % 26]


def synth_dataset(true_params, design):
    """
    Sample a TraceSet from the model. Each point is multiplied by (1 + eps) with eps ~ Normal(0, noise_level), drawn
    from numpy's PCG64 generator seeded with design.seed, one trace after another in layout order.
    """
    params = design.apply(true_params)
    rng = np.random.Generator(np.random.PCG64(design.seed))
    frequencies_hz = design.band.frequencies_hz
    omega = hz(frequencies_hz)

    traces = []
    for index, (group, psi) in enumerate(design.layout):
        position = design.angles_rad[group].index(psi)
        # Trace files use vacuum = 1
        clean = 2 * model_variance(params, omega, psi, group)
        values = clean * (1 + design.noise_level * rng.standard_normal(len(omega)))
        metadata = dict(design.metadata, psi_rad=psi, synthetic=True, noise_level=design.noise_level,
                        seed=design.seed)
        traces.append(Trace(frequencies_hz, values, angle_label(position), design.detunings_hz[group], metadata,
                            name="trace_{}".format(index)))
    logger.info("Synthesized %d trace(s) at noise level %g (seed %d)", len(traces), design.noise_level, design.seed)
    return TraceSet(traces)
