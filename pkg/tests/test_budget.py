import json
import os

import pytest

from budget.budget import EfficiencyBudget, budget_consistency, total_efficiency
from optics.errors import InvalidParameter


def test_table_ii_total(budget):
    total = total_efficiency(budget)
    assert total.value == pytest.approx(0.54285, abs=1e-5)
    assert total.uncertainty == pytest.approx(0.036, abs=1e-3)
    assert len(budget) == 5


def test_consistency_with_measured_efficiency(budget):
    report = budget_consistency(budget, (0.53, 0.02))
    assert report["consistent"]
    assert report["n_sigma"] == pytest.approx(0.31, abs=0.01)
    assert report["budget"]["value"] == pytest.approx(0.54285, abs=1e-5)

    report = budget_consistency(budget, (0.30, 0.01))
    assert not report["consistent"]
    assert report["n_sigma"] > 2


def test_exact_budgets():
    exact = EfficiencyBudget([("a", 0.5), ("b", 0.5)])
    assert total_efficiency(exact) == (0.25, 0.0)
    assert budget_consistency(exact, (0.25, 0.0))["consistent"]
    assert not budget_consistency(exact, (0.26, 0.0))["consistent"]

    dead = EfficiencyBudget([("a", 0.0, 0.1), ("b", 0.5, 0.1)])
    assert total_efficiency(dead) == pytest.approx((0.0, 0.05))


def test_budget_building(budget, data_dir):
    with pytest.raises(InvalidParameter):
        EfficiencyBudget([("a", 1.2)])
    with pytest.raises(InvalidParameter):
        EfficiencyBudget([("a", 0.5, -0.1)])

    combined = budget + EfficiencyBudget([("extra", 0.9, 0.01)])
    assert len(combined) == 6
    assert [c.name for c in combined][-1] == "extra"

    with open(os.path.join(data_dir, "table_ii_budget.json")) as f:
        from_file = EfficiencyBudget.from_json_list(json.load(f)["channels"])
    assert from_file.to_json_list() == budget.to_json_list()
    assert list(budget.to_frame().columns) == ["name", "eta", "sigma"]


def test_total_efficiency_ignores_order_and_multiplies(budget):
    channels = budget.to_json_list()
    reversed_order = total_efficiency(EfficiencyBudget.from_json_list(channels[::-1]))
    total = total_efficiency(budget)
    assert reversed_order.value == pytest.approx(total.value, rel=1e-12)
    assert reversed_order.uncertainty == pytest.approx(total.uncertainty, rel=1e-12)

    first = EfficiencyBudget.from_json_list(channels[:2])
    second = EfficiencyBudget.from_json_list(channels[2:])
    assert total_efficiency(first + second).value == pytest.approx(
        total_efficiency(first).value * total_efficiency(second).value, rel=1e-12)
    assert total_efficiency(first + second).value == pytest.approx(total.value, rel=1e-12)
