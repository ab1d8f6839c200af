"""
Check how well an ENMO matches the opto-mechanical sensor it is meant to cancel.

Mismatches are findings, not errors: the report always comes back, with a signed residual and a pass flag per
condition.
"""

import logging
from dataclasses import dataclass

import pandas as pd

from app_config import HIERARCHY_RATIO, MATCH_REL_TOL
from optics.params import to_hz

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    rel: float = MATCH_REL_TOL
    hierarchy_ratio: float = HIERARCHY_RATIO


class Condition:

    def __init__(self, name, formula, lhs, rhs, residual, scale, passed):
        self.name = name
        self.formula = formula
        self.lhs = lhs
        self.rhs = rhs
        self.residual = residual
        self.scale = scale
        self.passed = bool(passed)

    @property
    def relative_residual(self):
        return self.residual / self.scale if self.scale else 0.0

    def to_dict(self):
        return {
            "name": self.name,
            "formula": self.formula,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "relative_residual": self.relative_residual,
            "passed": self.passed,
        }


def equality(name, formula, lhs, rhs, rel_tol):
    """Compare two rates; values in the report are in Hz."""
    lhs, rhs = to_hz(lhs), to_hz(rhs)
    residual = lhs - rhs
    scale = max(abs(lhs), abs(rhs))
    return Condition(name, formula, lhs, rhs, residual, scale, abs(residual) <= rel_tol * scale)


def signed_sum(name, formula, lhs, rhs, rel_tol):
    """Like equality, but the condition is lhs + rhs = 0."""
    lhs, rhs = to_hz(lhs), to_hz(rhs)
    residual = lhs + rhs
    scale = max(abs(lhs), abs(rhs))
    return Condition(name, formula, lhs, rhs, residual, scale, abs(residual) <= rel_tol * scale)


class MatchingReport:

    def __init__(self, conditions, tolerances):
        self.conditions = conditions
        self.tolerances = tolerances

    @property
    def passed(self):
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name):
        for condition in self.conditions:
            if condition.name == name:
                return condition
        raise KeyError(name)

    def failures(self):
        return [c for c in self.conditions if not c.passed]

    def to_dict(self):
        return {
            "passed": self.passed,
            "tolerances": {"rel": self.tolerances.rel, "hierarchy_ratio": self.tolerances.hierarchy_ratio},
            "conditions": [c.to_dict() for c in self.conditions],
        }

    def to_frame(self):
        return pd.DataFrame([c.to_dict() for c in self.conditions]).set_index("name")

    def to_text(self):
        frame = self.to_frame()[["formula", "lhs", "rhs", "residual", "passed"]]
        verdict = "all conditions met" if self.passed else "{} condition(s) not met".format(len(self.failures()))
        return frame.to_string() + "\n\n" + verdict + "\n"


def matching_report(enmo, oms, tolerances=None):
    """Evaluate the susceptibility, meter and coupling matching conditions between an ENMO and an OMS."""
    tolerances = tolerances or Tolerances()
    ancilla, mech = enmo.ancilla, oms.mech
    hierarchy = abs(ancilla.detuning) / ancilla.kappa
    conditions = [
        signed_sum("detuning", "delta_a + omega_m = 0", ancilla.detuning, mech.omega_m, tolerances.rel),
        equality("linewidth", "kappa_a - gamma_m = 0", ancilla.kappa, mech.gamma_m, tolerances.rel),
        Condition("hierarchy", "|delta_a| / kappa_a >= {:g}".format(tolerances.hierarchy_ratio),
                  hierarchy, tolerances.hierarchy_ratio, hierarchy - tolerances.hierarchy_ratio,
                  tolerances.hierarchy_ratio, hierarchy >= tolerances.hierarchy_ratio),
        equality("meter_linewidth", "kappa_c - kappa_om = 0", enmo.meter.kappa, oms.meter.kappa, tolerances.rel),
        equality("coupling_sum", "(g_bs + g_dc) - g_om = 0", enmo.g_a, oms.g_om, tolerances.rel),
        equality("coupling_balance", "g_bs - g_dc = 0", enmo.coupling.g_bs, enmo.coupling.g_dc, tolerances.rel),
    ]
    report = MatchingReport(conditions, tolerances)
    for condition in report.failures():
        logger.warning("Matching condition '%s' not met: residual %.6g", condition.formula, condition.residual)
    return report
