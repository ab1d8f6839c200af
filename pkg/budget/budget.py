"""Loss budget of the detection chain: channel efficiencies, their product, and the check against a measured value."""

import logging
import math
from collections import namedtuple

import pandas as pd

from app_config import CONSISTENCY_SIGMAS
from optics.errors import InvalidParameter

logger = logging.getLogger(__name__)


Channel = namedtuple("Channel", ["name", "eta", "sigma"])
Estimate = namedtuple("Estimate", ["value", "uncertainty"])


class EfficiencyBudget:
    """
    An ordered list of loss channels.

    Example:
        budget = EfficiencyBudget([("propagation", 0.91, 0.04), ("escape", 0.684, 0.005)])
    """

    def __init__(self, channels=()):
        self.channels = []
        for channel in channels:
            self.add(*channel)

    def add(self, name, eta, sigma=0.0):
        if not 0 <= eta <= 1:
            raise InvalidParameter(name, eta, "channel efficiencies must lie in [0, 1]")
        if sigma < 0:
            raise InvalidParameter(name + ".sigma", sigma, "uncertainties can't be negative")
        self.channels.append(Channel(name, float(eta), float(sigma)))

    def __add__(self, other):
        return EfficiencyBudget(self.channels + other.channels)

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    def to_frame(self):
        return pd.DataFrame(self.channels, columns=Channel._fields)

    def to_json_list(self):
        return [channel._asdict() for channel in self.channels]

    @classmethod
    def from_json_list(cls, entries):
        """Entries look like {"name": ..., "eta": ..., "sigma": ...}; sigma is optional."""
        return cls((e["name"], e["eta"], e.get("sigma", 0.0)) for e in entries)


def table_ii_budget():
    """The channels of the single-mode-squeezer loss budget. Homodyne contrast enters linearly."""
    return EfficiencyBudget([
        ("propagation", 0.91, 0.04),
        ("homodyne_balancing", 0.999, 0.001),
        ("homodyne_contrast", 0.90, 0.04),
        ("quantum_efficiency", 0.97, 0.02),
        ("escape", 0.684, 0.005),
    ])


def total_efficiency(budget):
    """Product of the channel efficiencies, with relative uncertainties added in quadrature."""
    value = math.prod(channel.eta for channel in budget)
    relative_sq = 0.0
    for channel in budget:
        if channel.eta == 0:
            # A dead channel pins the product to zero; its own sigma is all that's left
            return Estimate(0.0, channel.sigma * math.prod(c.eta for c in budget if c is not channel))
        relative_sq += (channel.sigma / channel.eta) ** 2
    return Estimate(value, value * math.sqrt(relative_sq))


def budget_consistency(budget, measured_eta, k=CONSISTENCY_SIGMAS):
    """
    Compare the budget product against an independently measured efficiency. Passes when the two agree within k
    combined standard deviations.
    """
    measured = Estimate(*measured_eta)
    total = total_efficiency(budget)
    discrepancy = abs(total.value - measured.value)
    combined = math.hypot(total.uncertainty, measured.uncertainty)
    if combined > 0:
        n_sigma = discrepancy / combined
        consistent = n_sigma <= k
    else:
        n_sigma = 0.0 if discrepancy == 0 else math.inf
        consistent = discrepancy == 0
    if not consistent:
        logger.warning("Budget total %.3f and measured efficiency %.3f differ by %.1f sigma",
                       total.value, measured.value, n_sigma)
    return {
        "budget": {"value": total.value, "uncertainty": total.uncertainty},
        "measured": {"value": measured.value, "uncertainty": measured.uncertainty},
        "discrepancy": discrepancy,
        "combined_uncertainty": combined,
        "n_sigma": n_sigma,
        "k": k,
        "consistent": consistent,
    }
