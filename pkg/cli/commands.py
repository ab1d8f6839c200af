import functools
import logging
import os
import sys
from dataclasses import replace

import click
import numpy as np
import pandas as pd

from app_config import GUARD_BAND_LINEWIDTHS, TOOL_NAME, VERSION
from budget.budget import EfficiencyBudget, budget_consistency, table_ii_budget, total_efficiency
from characterize.diagnostics import infer_efficiency_from_squeezing
from characterize.fit import FitOptions, fit_dataset, identifiability_report
from characterize.model import Design, FitParams, model_variance, synth_dataset
from characterize.traces import DB_COLUMN, LINEAR_COLUMN, manifest_entry, read_manifest
from cli.files import FORMATS, RunConfig, read_json, write_csv, write_json, write_table
from cli.plots import plot_ellipses, plot_projection
from optics.coupling import g_bs_from_waveplate, waveplate_for_g_bs
from optics.errors import EnmoError, InvalidParameter, ParameterFileError
from optics.matching import matching_report
from optics.params import Variant, WaveplateSetting, enmo_from_dict, enmo_to_dict, hz, oms_from_dict, oms_to_dict, \
    to_hz
from spectra.covariance import NORMALIZED, ellipse_spectrum
from spectra.cqnc import project_cqnc

logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 2
EXIT_NOT_CONVERGED = 3


def parse_file(path, build):
    """Run a loader on a JSON file and turn missing or malformed entries into a ParameterFileError."""
    data = read_json(path)
    try:
        return build(data)
    except ParameterFileError:
        raise
    except EnmoError as e:
        raise ParameterFileError(path, str(e))
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ParameterFileError(path, "bad or missing entry: {}".format(e))


def parse_config(config, build):
    try:
        return build()
    except ParameterFileError:
        raise
    except EnmoError as e:
        raise ParameterFileError(config.path or "config", str(e))
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ParameterFileError(config.path or "config", "bad or missing entry: {}".format(e))


def pick_detuning(params, detuning_hz=None, oms=None):
    """
    The detuning to build a single ENMO at: the one asked for, else the listed entry nearest -omega_m when an OMS is
    given. None leaves the choice to enmo_from_dict, which accepts a single listed value only.
    """
    if detuning_hz is not None or oms is None or not isinstance(params, dict):
        return detuning_hz
    listed = np.atleast_1d(np.asarray(params.get("delta_a_hz", []), dtype=float))
    if len(listed) < 2:
        return None
    chosen = float(listed[np.argmin(np.abs(listed + to_hz(oms.mech.omega_m)))])
    logger.info("Using delta_a = %g Hz, the listed detuning nearest -omega_m", chosen)
    return chosen


def variance_stem(psi):
    return "variance_{:.4f}".format(psi)


def simulate(config):
    """Model variance curves, one per detection angle."""
    config.require("params", "band")
    enmo = parse_config(config, lambda: enmo_from_dict(config.params, config.variant, config.detuning_hz))
    config.variant = enmo.variant.value
    params = FitParams.from_enmo(enmo, config.eta)
    provenance = config.provenance()
    out = config.out_dir()

    frequencies_hz, omega = config.band.frequencies_hz, config.band.omega
    curves, files = {}, []
    for psi in config.psi_rad:
        variance = model_variance(params, omega, psi)
        frame = pd.DataFrame({
            "frequency_hz": frequencies_hz,
            "variance": variance,
            LINEAR_COLUMN: 2 * variance,
            DB_COLUMN: 10 * np.log10(2 * variance),
        })
        files += write_table(frame, out, variance_stem(psi), config.format, provenance)
        curves[variance_stem(psi)] = variance
    summary = {
        "provenance": provenance.to_dict(),
        "params": enmo_to_dict(enmo),
        "eta": config.eta,
        "psi_rad": config.psi_rad,
        "band": config.band.to_dict(),
        "frequency_hz": frequencies_hz,
        "variance": curves,
        "files": [os.path.basename(f) for f in files],
    }
    write_json(summary, os.path.join(out, "simulate.json"))
    return summary


def project(config, kappa_a_hz=None):
    """Noise of the OMS alone against the ENMO + OMS cascade."""
    config.require("params", "oms", "band")
    oms = parse_config(config, lambda: oms_from_dict(config.oms))
    enmo = parse_config(config, lambda: enmo_from_dict(config.params, config.variant,
                                                        pick_detuning(config.params, config.detuning_hz, oms)))
    if kappa_a_hz is not None:
        enmo = parse_config(config, lambda: enmo.with_ancilla(kappa=hz(kappa_a_hz)))
    config.variant = enmo.variant.value
    provenance = config.provenance(kappa_a_hz=kappa_a_hz)
    out = config.out_dir()

    guard = float(config.extra.get("guard_linewidths", GUARD_BAND_LINEWIDTHS))
    projection = project_cqnc(enmo, oms, config.band, guard)
    write_table(projection.to_frame(), out, "projection", config.format, provenance)
    summary = dict(projection.summary(), provenance=provenance.to_dict(), params=enmo_to_dict(enmo),
                   oms=oms_to_dict(oms))
    write_json(summary, os.path.join(out, "projection_summary.json"))
    plot_projection(projection, os.path.join(out, "projection.svg"))
    return summary


def waveplate_prior(init_path, theta, delta, options):
    """
    Turn a calibrated waveplate (retardation theta, optical axis at delta) into the g_bs prior of the fit. Returns
    (options, fsr [rad/s]); the FSR comes from the fsr_hz entry of the init file. Without delta only the FSR is read.
    """
    fsr_hz = parse_file(init_path, lambda d: None if d.get("fsr_hz") is None else float(d["fsr_hz"]))
    if fsr_hz is None:
        raise ParameterFileError(init_path, "waveplate settings need an fsr_hz entry")
    fsr = hz(fsr_hz)
    if delta is None:
        return options, fsr
    if options.g_bs_prior_hz is not None:
        raise ParameterFileError("--waveplate-delta-rad", "give either a waveplate angle or --g-bs-prior-hz, not both")
    g_bs = g_bs_from_waveplate(WaveplateSetting(delta, theta), fsr)
    if g_bs <= 0:
        raise ParameterFileError("--waveplate-delta-rad", "the waveplate setting gives g_bs = {:g} Hz, which can't "
                                 "split a positive g_a".format(to_hz(g_bs)))
    logger.info("Waveplate at delta = %g rad, theta = %g rad gives g_bs = %g Hz", delta, theta, to_hz(g_bs))
    return replace(options, g_bs_prior_hz=float(to_hz(g_bs))), fsr


def balancing_waveplate(result, theta, delta, fsr):
    """Waveplate angle at retardation theta that would give g_bs = g_dc = g_a / 2 for the fitted g_a."""
    report = {"theta_rad": theta, "delta_rad": delta}
    try:
        report["delta_rad_for_balance"] = waveplate_for_g_bs(result.params.g_a / 2, fsr, theta).delta
    except InvalidParameter as e:
        logger.warning("No waveplate angle balances the couplings: %s", e)
        report["delta_rad_for_balance"] = None
    return report


def fit(manifest_path, init_path, config, options, waveplate_theta=None, waveplate_delta=None):
    """
    Fit a trace manifest. Returns the FitResult; files are written whether or not it converged. A waveplate
    retardation adds the balancing waveplate angle to fit_result.json; with the waveplate angle as well it also
    calibrates the g_bs prior.
    """
    data = read_manifest(manifest_path)
    init = parse_file(init_path, lambda d: FitParams.from_dict(d, config.variant))
    fsr = None
    if waveplate_theta is not None:
        options, fsr = waveplate_prior(init_path, waveplate_theta, waveplate_delta, options)
    elif waveplate_delta is not None:
        raise ParameterFileError("--waveplate-delta-rad", "also needs --waveplate-theta-rad")
    config.variant = init.variant.value
    provenance = config.provenance(init=init.to_dict(), options=options.__dict__,
                                   traces=[t.to_frame().to_dict(orient="list") for t in data])
    out = config.out_dir()

    result = fit_dataset(data, init, config.extra.get("bounds"), options)
    summary = dict(result.to_dict(), provenance=provenance.to_dict())
    if waveplate_theta is not None:
        summary["waveplate"] = balancing_waveplate(result, waveplate_theta, waveplate_delta, fsr)
    write_json(summary, os.path.join(out, "fit_result.json"))
    for index, trace in enumerate(data):
        write_csv(result.residual_frame(index), os.path.join(out, "residuals_{}.csv".format(index)), provenance)
    write_csv(result.covariance_frame().rename_axis("parameter").reset_index(), os.path.join(out, "covariance.csv"),
              provenance)
    report = {
        "provenance": provenance.to_dict(),
        "at_optimum": result.identifiability,
        "couplings_separately": identifiability_report(result.params, data, residual_space=options.residual_space,
                                                       cross_term=options.cross_term),
    }
    write_json(report, os.path.join(out, "identifiability.json"))
    return result


def synth(truth_path, design_path, config, seed=None):
    """Write a synthetic TraceSet as trace CSVs plus a manifest."""
    truth = parse_file(truth_path, lambda d: FitParams.from_dict(d, config.variant))
    design = parse_file(design_path, Design.from_dict)
    if seed is not None:
        design = replace(design, seed=seed)
    config.variant = truth.variant.value
    config.seed = design.seed
    provenance = config.provenance(truth=truth.to_dict(), design=read_json(design_path))
    out = config.out_dir()

    traceset = parse_config(config, lambda: synth_dataset(truth, design))
    entries = []
    for index, trace in enumerate(traceset):
        filename = "trace_{}.csv".format(index)
        write_csv(trace.to_frame(), os.path.join(out, filename), provenance)
        entries.append(manifest_entry(trace, filename))
    manifest = {
        "provenance": provenance.to_dict(),
        "truth": design.apply(truth).to_dict(),
        "design": {"detunings_hz": design.detunings_hz, "angles_rad": design.angles_rad,
                   "band": design.band.to_dict(), "noise_level": design.noise_level, "seed": design.seed},
        "traces": entries,
    }
    write_json(manifest, os.path.join(out, "manifest.json"))
    return manifest


def tomo(config, cross_term=NORMALIZED):
    """Squeezing ellipse of the detected ENMO output across the band."""
    config.require("params", "band")
    enmo = parse_config(config, lambda: enmo_from_dict(config.params, config.variant, config.detuning_hz))
    config.variant = enmo.variant.value
    provenance = config.provenance(cross_term=cross_term)
    out = config.out_dir()

    spectrum = parse_config(config, lambda: ellipse_spectrum(enmo, config.eta, config.band, cross_term))
    write_table(spectrum.to_frame(), out, "ellipses", config.format, provenance)
    plot_ellipses(spectrum, os.path.join(out, "ellipses.svg"))
    summary = {
        "provenance": provenance.to_dict(),
        "params": enmo_to_dict(enmo),
        "eta": config.eta,
        "cross_term": cross_term,
        "physicality": spectrum.physicality,
    }
    write_json(summary, os.path.join(out, "tomo.json"))
    return summary


def check(enmo_path, oms_path, config):
    """Matching conditions between an ENMO and an OMS. Unmet conditions are findings, not errors."""
    oms = parse_file(oms_path or enmo_path, oms_from_dict)
    enmo = parse_file(enmo_path,
                      lambda d: enmo_from_dict(d, config.variant, pick_detuning(d, config.detuning_hz, oms)))
    config.variant = enmo.variant.value
    provenance = config.provenance(enmo=enmo_to_dict(enmo), oms=oms_to_dict(oms))
    out = config.out_dir()

    report = matching_report(enmo, oms)
    write_json(dict(report.to_dict(), provenance=provenance.to_dict()), os.path.join(out, "matching.json"))
    with open(os.path.join(out, "matching.txt"), "w", newline="\n") as f:
        f.write(report.to_text())
    return report


def budget(budget_path, sqz_db, antisqz_db, measured_uncertainty, config):
    """Loss budget product against the efficiency inferred from a squeezing/anti-squeezing pair."""
    if budget_path is None:
        channels = table_ii_budget()
    else:
        channels = parse_file(budget_path, lambda d: EfficiencyBudget.from_json_list(
            d["channels"] if isinstance(d, dict) else d))
    provenance = config.provenance(channels=channels.to_json_list(), sqz_db=sqz_db, antisqz_db=antisqz_db,
                                   measured_uncertainty=measured_uncertainty)
    out = config.out_dir()

    state = infer_efficiency_from_squeezing(sqz_db, antisqz_db)
    total = total_efficiency(channels)
    consistency = budget_consistency(channels, (state.eta, measured_uncertainty))
    write_table(channels.to_frame(), out, "budget", config.format, provenance)
    report = {
        "provenance": provenance.to_dict(),
        "channels": channels.to_json_list(),
        "total": {"value": total.value, "uncertainty": total.uncertainty},
        "squeezer": {"sqz_db": sqz_db, "antisqz_db": antisqz_db, "eta": state.eta, "r": state.r},
        "consistency": consistency,
    }
    write_json(report, os.path.join(out, "budget_report.json"))
    return report


def handle_errors(command):
    """Input errors go to standard error with exit code 2."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except EnmoError as e:
            click.echo("{}: error: {}".format(TOOL_NAME, e), err=True)
            sys.exit(EXIT_INPUT_ERROR)
    return wrapper


def common_options(command):
    options = [
        click.option("--config", "config_path", type=click.Path(), help="RunConfig JSON file"),
        click.option("--out", help="Output directory"),
        click.option("--seed", type=int),
        click.option("--variant", type=click.Choice([v.value for v in Variant])),
        click.option("--format", "fmt", type=click.Choice(FORMATS)),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def detuning_option(command):
    return click.option("--detuning-hz", type=float,
                        help="delta_a to use when the parameter file lists several, e.g. -710e3")(command)


def load_config(config_path, out, seed, variant, fmt, detuning_hz=None):
    return RunConfig.load(config_path).override(out, seed, variant, fmt, detuning_hz)


@click.group()
@click.version_option(VERSION, prog_name=TOOL_NAME)
def main():
    pass


@main.command("simulate")
@common_options
@detuning_option
@handle_errors
def simulate_command(config_path, out, seed, variant, fmt, detuning_hz):
    simulate(load_config(config_path, out, seed, variant, fmt, detuning_hz))


@main.command("project")
@common_options
@detuning_option
@click.option("--kappa-a-hz", type=float, help="Override the ancilla linewidth, e.g. 10e3 for the improved ENMO")
@handle_errors
def project_command(config_path, out, seed, variant, fmt, detuning_hz, kappa_a_hz):
    summary = project(load_config(config_path, out, seed, variant, fmt, detuning_hz), kappa_a_hz)
    if summary["max_reduction_db"] is not None:
        click.echo("max reduction {:.2f} dB at {:.3f} omega_m".format(
            summary["max_reduction_db"]["value"], summary["max_reduction_db"]["frequency_over_omega_m"]))


@main.command("fit")
@click.argument("manifest", type=click.Path())
@click.argument("init", type=click.Path())
@common_options
@click.option("--residual-space", type=click.Choice(["linear", "db"]), default="linear")
@click.option("--fix", multiple=True, help="Hold a parameter at its initial value (repeatable), e.g. --fix eta")
@click.option("--g-bs-prior-hz", type=float, help="Calibrated g_bs used to split the fitted g_a")
@click.option("--max-nfev", type=int)
@click.option("--bootstrap", type=int, default=0, help="Number of residual-bootstrap refits")
@click.option("--free-eta", is_flag=True, help="Fit eta instead of holding it at the init file's value")
@click.option("--waveplate-theta-rad", type=float, help="Calibrated waveplate retardation; reports the balancing angle")
@click.option("--waveplate-delta-rad", type=float, help="Waveplate axis angle; sets the g_bs prior from the FSR")
@handle_errors
def fit_command(manifest, init, config_path, out, seed, variant, fmt, residual_space, fix, g_bs_prior_hz,
                max_nfev, bootstrap, free_eta, waveplate_theta_rad, waveplate_delta_rad):
    config = load_config(config_path, out, seed, variant, fmt)
    options = FitOptions(residual_space=residual_space, fixed=fix, free_eta=free_eta, g_bs_prior_hz=g_bs_prior_hz,
                         max_nfev=max_nfev, bootstrap=bootstrap, seed=config.seed)
    try:
        result = fit(manifest, init, config, options, waveplate_theta_rad, waveplate_delta_rad)
    except InvalidParameter as e:
        raise ParameterFileError(init, str(e))
    if not result.converged:
        click.echo("{}: fit did not converge: {}".format(TOOL_NAME, result.message), err=True)
        sys.exit(EXIT_NOT_CONVERGED)


@main.command("synth")
@click.argument("truth", type=click.Path())
@click.argument("design", type=click.Path())
@common_options
@handle_errors
def synth_command(truth, design, config_path, out, seed, variant, fmt):
    config = load_config(config_path, out, None, variant, fmt)
    synth(truth, design, config, seed)


@main.command("tomo")
@common_options
@detuning_option
@click.option("--cross-term", type=click.Choice(["normalized", "printed"]), default=NORMALIZED)
@handle_errors
def tomo_command(config_path, out, seed, variant, fmt, detuning_hz, cross_term):
    tomo(load_config(config_path, out, seed, variant, fmt, detuning_hz), cross_term)


@main.command("check")
@click.argument("enmo", type=click.Path())
@click.argument("oms", type=click.Path(), required=False)
@common_options
@detuning_option
@handle_errors
def check_command(enmo, oms, config_path, out, seed, variant, fmt, detuning_hz):
    report = check(enmo, oms, load_config(config_path, out, seed, variant, fmt, detuning_hz))
    click.echo(report.to_text(), nl=False)


@main.command("budget")
@click.argument("channels", type=click.Path(), required=False)
@common_options
@click.option("--sqz-db", type=float, required=True, help="Measured squeezing, below 0 dB")
@click.option("--antisqz-db", type=float, required=True, help="Measured anti-squeezing, above 0 dB")
@click.option("--measured-uncertainty", type=float, default=0.0, help="1-sigma uncertainty of the inferred eta")
@handle_errors
def budget_command(channels, config_path, out, seed, variant, fmt, sqz_db, antisqz_db, measured_uncertainty):
    report = budget(channels, sqz_db, antisqz_db, measured_uncertainty,
                    load_config(config_path, out, seed, variant, fmt))
    click.echo("budget {:.3f} +- {:.3f}, measured {:.3f}, {:.2f} sigma apart".format(
        report["total"]["value"], report["total"]["uncertainty"], report["squeezer"]["eta"],
        report["consistency"]["n_sigma"]))
