"""
Joint fit of the characterization model to a TraceSet.

The optimizer works on a flat vector: rates in kHz (rad/s divided by 2 pi 1e3), eta as is, angles in rad. Shared
parameters come first, then one delta_a per detuning group, then one psi per trace. Only g_a = g_bs + g_dc enters the
model, so the fit estimates g_a and splits it afterwards.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.linalg import pinvh, svd
from scipy.optimize import least_squares

from characterize.model import Design, FitParams, model_variance
from characterize.traces import TraceSet
from optics.errors import InvalidParameter
from optics.params import Variant, hz
from spectra.covariance import NORMALIZED

logger = logging.getLogger(__name__)

KHZ = hz(1e3)
RATES = ("g_a", "g_bs", "g_dc", "kappa_a", "kappa_c", "delta_c")
SHARED = ("g_a", "kappa_a", "kappa_c", "delta_c", "eta")
METER_ONLY = ("kappa_c", "delta_c")

DEFAULT_PSI_START = math.pi / 8
# Relative singular value below which a direction counts as unidentifiable
NULL_RTOL = 1e-8
CORRELATION_LIMIT = 0.999
# Smallest linewidth or |delta_a| the optimizer may reach, in kHz; delta_a = 0 is singular
MIN_RATE_KHZ = 1e-3


def delta_name(group):
    return "delta_a[{}]".format(group)


def psi_name(index):
    return "psi[{}]".format(index)


def internal_value(params, name):
    if name in RATES:
        return getattr(params, name) / KHZ
    if name == "eta":
        return params.eta
    index = int(name[name.index("[") + 1:-1])
    if name.startswith("delta_a"):
        return params.delta_a[index] / KHZ
    return params.psi[index]


def shifted(params, name, amount):
    """Return params with one parameter moved by amount, in internal units."""
    if name == "g_a":
        return params.with_(g_bs=params.g_bs + amount * KHZ / 2, g_dc=params.g_dc + amount * KHZ / 2)
    if name in RATES:
        return params.with_(**{name: getattr(params, name) + amount * KHZ})
    if name == "eta":
        return params.with_(eta=params.eta + amount)
    index = int(name[name.index("[") + 1:-1])
    if name.startswith("delta_a"):
        delta_a = list(params.delta_a)
        delta_a[index] += amount * KHZ
        return params.with_(delta_a=tuple(delta_a))
    psi = list(params.psi)
    psi[index] += amount
    return params.with_(psi=tuple(psi))


@dataclass(frozen=True)
class FitOptions:
    residual_space: str = "linear"
    fixed: tuple = ()
    # eta stays at its initial value, normally the measured efficiency, unless this is set
    free_eta: bool = False
    g_bs_prior_hz: float = None
    max_nfev: int = None
    bootstrap: int = 0
    seed: int = 0
    ftol: float = 1e-12
    xtol: float = 1e-12
    gtol: float = 1e-12
    cross_term: str = NORMALIZED

    def __post_init__(self):
        if self.residual_space not in ("linear", "db"):
            raise InvalidParameter("residual_space", self.residual_space, "expected 'linear' or 'db'")
        if self.bootstrap < 0 or self.bootstrap == 1:
            raise InvalidParameter("bootstrap", self.bootstrap, "use 0 (off) or at least 2 resamples")
        object.__setattr__(self, "fixed", tuple(self.fixed))

    @classmethod
    def from_dict(cls, data):
        return cls(**{key: tuple(value) if key == "fixed" else value for key, value in data.items()})


class Layout:
    """Which group and which frequencies each trace uses, plus the predicted values in residual space."""

    def __init__(self, frequencies, groups, residual_space="linear", cross_term=NORMALIZED):
        self.frequencies_hz = [np.asarray(f, dtype=float) for f in frequencies]
        self.omega = [hz(f) for f in self.frequencies_hz]
        self.groups = list(groups)
        self.residual_space = residual_space
        self.cross_term = cross_term

    @classmethod
    def from_traceset(cls, data, residual_space="linear", cross_term=NORMALIZED):
        return cls([t.frequencies_hz for t in data], [data.group_of(i) for i in range(len(data))], residual_space,
                   cross_term)

    @classmethod
    def from_design(cls, design, residual_space="linear", cross_term=NORMALIZED):
        frequencies_hz = design.band.frequencies_hz
        return cls([frequencies_hz] * len(design.layout), [group for group, _ in design.layout], residual_space,
                   cross_term)

    @property
    def n_groups(self):
        return max(self.groups) + 1

    def __len__(self):
        return len(self.groups)

    def transform(self, values):
        return 10 * np.log10(values) if self.residual_space == "db" else values

    def model_traces(self, params):
        """Model on every trace in the units of the trace files (vacuum = 1)"""
        return [2 * model_variance(params, omega, params.psi[i], group, self.cross_term)
                for i, (omega, group) in enumerate(zip(self.omega, self.groups))]

    def predict(self, params):
        return np.concatenate([self.transform(m) for m in self.model_traces(params)])


def jacobian_report(jacobian, names, rtol=NULL_RTOL, correlation_limit=CORRELATION_LIMIT):
    """
    Singular values, condition number, near-null directions and pairwise correlations of a Jacobian whose columns
    belong to ``names``. Columns are scaled to unit norm first so the result doesn't depend on parameter units.
    """
    jacobian = np.asarray(jacobian, dtype=float)
    norms = np.linalg.norm(jacobian, axis=0)
    no_influence = [name for name, norm in zip(names, norms) if norm == 0]
    # Columns without influence are reported by name and kept out of the decomposition
    keep = norms > 0
    parameters, names = list(names), [name for name, k in zip(names, keep) if k]
    scaled = jacobian[:, keep] / norms[keep]

    if names:
        _, singular_values, vt = svd(scaled, full_matrices=False)
    else:
        singular_values, vt = np.zeros(0), np.zeros((0, 0))
    s_max = singular_values[0] if len(singular_values) else 0.0
    null = singular_values <= rtol * s_max
    condition = s_max / singular_values[-1] if len(singular_values) and singular_values[-1] > 0 else math.inf

    null_combinations = []
    for row in vt[null]:
        null_combinations.append({name: float(c) for name, c in zip(names, row) if abs(c) > 0.1})

    covariance = pinvh(scaled.T @ scaled) if names else np.zeros((0, 0))
    scale = np.sqrt(np.clip(np.diag(covariance), 0, None))
    correlations = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            if scale[i] > 0 and scale[j] > 0:
                correlations.append({"pair": [names[i], names[j]],
                                     "value": float(covariance[i, j] / (scale[i] * scale[j]))})
    correlations.sort(key=lambda c: -abs(c["value"]))

    flags = {}
    for name in no_influence:
        flags[name] = "the model doesn't depend on it"
    for combination in null_combinations:
        for name in combination:
            flags.setdefault(name, "near-null direction {}".format(sorted(combination)))
    for correlation in correlations:
        if abs(correlation["value"]) > correlation_limit:
            a, b = correlation["pair"]
            flags.setdefault(a, "correlation {:.4f} with {}".format(correlation["value"], b))
            flags.setdefault(b, "correlation {:.4f} with {}".format(correlation["value"], a))

    for name, reason in flags.items():
        logger.warning("Parameter %s is poorly identified: %s", name, reason)
    return {
        "parameters": parameters,
        "analyzed": names,
        "singular_values": [float(s) for s in singular_values],
        "condition_number": float(condition),
        "rank": int(np.count_nonzero(~null)),
        "null_combinations": null_combinations,
        "correlations": correlations,
        "flags": flags,
    }


def numerical_jacobian(layout, params, names, step=1e-6):
    """Central differences of the prediction, one-sided next to a bound the parameter types enforce."""
    columns = []
    for name in names:
        h = step * max(abs(internal_value(params, name)), 1.0)
        sides = []
        for sign in (1, -1):
            try:
                sides.append(layout.predict(shifted(params, name, sign * h)))
            except InvalidParameter:
                sides.append(None)
        if sides[0] is not None and sides[1] is not None:
            columns.append((sides[0] - sides[1]) / (2 * h))
        else:
            center = layout.predict(params)
            columns.append((sides[0] - center) / h if sides[0] is not None else (center - sides[1]) / h)
    return np.column_stack(columns)


def identifiability_report(params, design, parameters=None, step=1e-6, rtol=NULL_RTOL, residual_space="linear",
                           cross_term=NORMALIZED):
    """
    Which parameters the traces of a design can pin down at params. ``design`` is a Design or a TraceSet.
    ``parameters`` defaults to g_bs and g_dc separately plus every other parameter, so the sum-only dependence on
    the couplings shows up as a (1, -1) null direction. Pass "g_a" instead to analyze the identifiable sum.
    """
    if isinstance(design, Design):
        layout = Layout.from_design(design, residual_space, cross_term)
        if len(params.psi) != len(layout) or len(params.delta_a) != layout.n_groups:
            params = design.apply(params)
    elif isinstance(design, TraceSet):
        layout = Layout.from_traceset(design, residual_space, cross_term)
    else:
        raise InvalidParameter("design", design, "expected a Design or a TraceSet")
    if len(params.psi) != len(layout) or len(params.delta_a) != layout.n_groups:
        raise InvalidParameter("params", params, "need one delta_a per detuning group and one psi per trace")

    if parameters is None:
        parameters = ["g_bs", "g_dc", "kappa_a", "kappa_c", "delta_c", "eta"]
        parameters += [delta_name(k) for k in range(layout.n_groups)] + [psi_name(i) for i in range(len(layout))]
    jacobian = numerical_jacobian(layout, params, list(parameters), step)
    return jacobian_report(jacobian, list(parameters), rtol)


class ParameterVector:

    def __init__(self, template, n_groups, n_traces, fixed=()):
        self.template = template
        names = list(SHARED) + [delta_name(k) for k in range(n_groups)] + [psi_name(i) for i in range(n_traces)]
        self.fixed = set(fixed)
        if template.variant == Variant.AS_PRINTED:
            self.fixed.update(METER_ONLY)
        unknown = self.fixed - set(names)
        if unknown:
            raise InvalidParameter("fixed", sorted(unknown), "unknown parameter names")
        self.names = [name for name in names if name not in self.fixed]

    def to_vector(self, params):
        return np.array([internal_value(params, name) for name in self.names])

    def to_params(self, x):
        t = self.template
        values = dict(zip(self.names, x))

        def get(name):
            return values[name] if name in values else internal_value(t, name)

        g_a = get("g_a") * KHZ
        return FitParams(
            g_bs=g_a / 2,
            g_dc=g_a / 2,
            kappa_a=get("kappa_a") * KHZ,
            delta_a=tuple(get(delta_name(k)) * KHZ for k in range(len(t.delta_a))),
            kappa_c=get("kappa_c") * KHZ,
            delta_c=get("delta_c") * KHZ,
            eta=get("eta"),
            psi=tuple(get(psi_name(i)) for i in range(len(t.psi))),
            variant=t.variant,
        )

    def default_bounds(self):
        t = self.template
        kappa_c_free = "kappa_c" in self.names
        split = math.sqrt(t.kappa_a * t.kappa_c) / KHZ if kappa_c_free else t.kappa_c / KHZ * (1 - 1e-9)
        bounds = {
            "g_a": (0.0, np.inf),
            "kappa_a": (MIN_RATE_KHZ, split),
            "kappa_c": (split, np.inf),
            "delta_c": (-np.inf, np.inf),
            "eta": (0.0, 1.0),
        }
        for k, delta in enumerate(t.delta_a):
            bounds[delta_name(k)] = (-np.inf, -MIN_RATE_KHZ) if delta < 0 else (MIN_RATE_KHZ, np.inf)
        for i in range(len(t.psi)):
            bounds[psi_name(i)] = (-math.pi / 2, 3 * math.pi / 2)
        return bounds

    def bounds(self, overrides=None):
        """Bounds per free parameter. Overrides are in Hz for rates; "delta_a" and "psi" apply to every entry."""
        bounds = self.default_bounds()
        for key, (low, high) in (overrides or {}).items():
            targets = [n for n in bounds if n == key or n.startswith(key + "[")]
            if not targets:
                raise InvalidParameter("bounds", key, "unknown parameter name")
            unit = 1e3 if key in RATES or key.startswith("delta_a") else 1.0
            for name in targets:
                # null in a bounds file means unbounded
                bounds[name] = (-np.inf if low is None else low / unit, np.inf if high is None else high / unit)
        lower = np.array([bounds[name][0] for name in self.names])
        upper = np.array([bounds[name][1] for name in self.names])
        return lower, upper


class FitResult:

    def __init__(self, params, names, uncertainty, covariance, layout, measured, residuals, cost, init_cost, dof,
                 converged, message, nfev, identifiability, g_split_known, bootstrap=None):
        self.params = params
        self.names = names
        self.uncertainty = uncertainty
        self.covariance = covariance
        self.layout = layout
        self.measured = measured
        self.residuals = residuals
        self.cost = cost
        self.init_cost = init_cost
        self.dof = dof
        self.converged = converged
        self.message = message
        self.nfev = nfev
        self.identifiability = identifiability
        self.g_split_known = g_split_known
        self.bootstrap = bootstrap

    @property
    def reduced_chi_square(self):
        return 2 * self.cost / self.dof

    @property
    def flags(self):
        return self.identifiability["flags"]

    def uncertainty_hz(self):
        """1-sigma uncertainties keyed like the parameter file; None for parameters that weren't fitted."""
        return self.convert(self.uncertainty)

    def convert(self, sigma):
        def pick(name, unit=1e3):
            return sigma[name] * unit if name in sigma else None

        return {
            "g_a_hz": pick("g_a"),
            "kappa_a_hz": pick("kappa_a"),
            "kappa_c_hz": pick("kappa_c"),
            "delta_c_hz": pick("delta_c"),
            "eta": pick("eta", 1.0),
            "delta_a_hz": [pick(delta_name(k)) for k in range(len(self.params.delta_a))],
            "psi_rad": [pick(psi_name(i), 1.0) for i in range(len(self.params.psi))],
        }

    def residual_frame(self, index):
        model = self.layout.model_traces(self.params)[index]
        return pd.DataFrame({
            "frequency_hz": self.layout.frequencies_hz[index],
            "measured": self.measured[index],
            "model": model,
            "residual": self.residuals[index],
        })

    def covariance_frame(self):
        return pd.DataFrame(self.covariance, index=self.names, columns=self.names)

    def to_dict(self):
        params = self.params.to_dict()
        if not self.g_split_known:
            params["g_bs_hz"] = params["g_dc_hz"] = None
        result = {
            "params": params,
            "uncertainty": self.uncertainty_hz(),
            "free_parameters": list(self.names),
            "cost": self.cost,
            "initial_cost": self.init_cost,
            "reduced_chi_square": self.reduced_chi_square,
            "degrees_of_freedom": self.dof,
            "converged": self.converged,
            "message": self.message,
            "nfev": self.nfev,
            "identifiability_flags": self.flags,
        }
        if self.bootstrap is not None:
            result["bootstrap_uncertainty"] = self.convert(self.bootstrap)
        return result


def resolve_init(data, init):
    """Fill in per-group detunings from the trace labels and per-trace angles from metadata when init lacks them."""
    groups = list(data.groups)
    if len(init.delta_a) != len(groups):
        init = init.with_(delta_a=tuple(hz(d) for d in groups))
    if len(init.psi) != len(data):
        init = init.with_(psi=tuple(t.metadata.get("psi_rad", DEFAULT_PSI_START) for t in data))
    return init


def split_coupling(params, g_bs_prior_hz):
    if g_bs_prior_hz is None:
        return params.with_(g_bs=params.g_a / 2, g_dc=params.g_a / 2)
    g_bs = min(hz(g_bs_prior_hz), params.g_a)
    return params.with_(g_bs=g_bs, g_dc=params.g_a - g_bs)


def solve(residual, x0, lower, upper, options):
    return least_squares(residual, x0, jac="3-point", bounds=(lower, upper), method="trf", x_scale="jac",
                         ftol=options.ftol, xtol=options.xtol, gtol=options.gtol, max_nfev=options.max_nfev)


def fit_dataset(data, init, bounds=None, options=None):
    """
    Least-squares fit of every trace at once. Delta_a is shared within a detuning group, psi is free per trace and
    the remaining parameters are shared by all traces. eta is held at init.eta unless options.free_eta is set.
    Residuals are trace value minus twice the model variance (or their dB difference with residual_space="db").

    Returns a FitResult. Running out of evaluations doesn't raise; the result is flagged instead.
    """
    options = options or FitOptions()
    init = resolve_init(data, init)
    layout = Layout.from_traceset(data, options.residual_space, options.cross_term)
    fixed = options.fixed if options.free_eta else options.fixed + ("eta",)
    vector = ParameterVector(init, layout.n_groups, len(layout), fixed)
    lower, upper = vector.bounds(bounds)
    x0 = vector.to_vector(init)
    if np.any(x0 < lower) or np.any(x0 > upper):
        outside = [n for n, x, lo, hi in zip(vector.names, x0, lower, upper) if not lo <= x <= hi]
        raise InvalidParameter("init", outside, "initial values must lie inside the bounds")

    measured = [t.values for t in data]
    target = np.concatenate([layout.transform(values) for values in measured])

    def residual(x):
        return target - layout.predict(vector.to_params(x))

    init_cost = 0.5 * float(np.sum(residual(x0) ** 2))
    logger.info("Fitting %d trace(s), %d free parameter(s), %s residuals", len(layout), len(vector.names),
                options.residual_space)
    solution = solve(residual, x0, lower, upper, options)
    converged = solution.status > 0
    if not converged:
        logger.warning("The fit stopped without converging: %s", solution.message)
    else:
        logger.info("Fit converged after %d evaluations, cost %.6g", solution.nfev, solution.cost)

    params = split_coupling(vector.to_params(solution.x), options.g_bs_prior_hz)
    m, n = solution.jac.shape
    dof = max(m - n, 1)
    covariance = 2 * solution.cost / dof * pinvh(solution.jac.T @ solution.jac)
    sigma = np.sqrt(np.clip(np.diag(covariance), 0, None))

    identifiability = jacobian_report(solution.jac, vector.names)
    for name in sorted(vector.fixed & set(METER_ONLY)):
        if init.variant == Variant.AS_PRINTED:
            identifiability["flags"][name] = "doesn't enter the as-printed model; held at its initial value"
    if not options.free_eta and "eta" not in options.fixed:
        identifiability["flags"]["eta"] = "held at its initial value; float it with free_eta"
    if options.g_bs_prior_hz is None:
        identifiability["flags"]["g_bs/g_dc"] = "only g_a = g_bs + g_dc enters the model; no g_bs prior given"

    bootstrap = None
    if options.bootstrap:
        bootstrap = residual_bootstrap(target, residual, solution, lower, upper, options, vector.names)

    residual_vector = solution.fun
    offsets = np.cumsum([0] + [len(v) for v in measured])
    residuals = [residual_vector[a:b] for a, b in zip(offsets[:-1], offsets[1:])]
    return FitResult(params, vector.names, dict(zip(vector.names, sigma)), covariance, layout, measured,
                     residuals, float(solution.cost), init_cost, dof, converged, solution.message,
                     int(solution.nfev), identifiability, options.g_bs_prior_hz is not None, bootstrap)


def residual_bootstrap(target, residual, solution, lower, upper, options, names):
    """
    Refit options.bootstrap synthetic targets built from the best fit plus resampled residuals, drawn with numpy's
    PCG64 generator seeded with options.seed. Returns the standard deviation of each parameter over the refits.
    """
    rng = np.random.Generator(np.random.PCG64(options.seed))
    best_prediction = target - solution.fun
    samples = []
    for _ in range(options.bootstrap):
        resampled = best_prediction + rng.choice(solution.fun, size=len(solution.fun), replace=True)

        def shifted_residual(x, resampled=resampled):
            return residual(x) - target + resampled

        refit = solve(shifted_residual, solution.x, lower, upper, options)
        samples.append(refit.x)
    spread = np.std(np.array(samples), axis=0, ddof=1)
    logger.info("Residual bootstrap with %d resamples done", options.bootstrap)
    return dict(zip(names, spread))
