import json
import os

import pytest

from optics.errors import InvalidParameter
from optics.matching import Tolerances, matching_report
from optics.params import CavityMode, Coupling, EnmoParams, enmo_from_dict, hz


def test_table_i_pair(enmo, oms):
    report = matching_report(enmo, oms)

    assert not report.passed
    assert [c.name for c in report.failures()] == ["linewidth"]
    assert report["detuning"].passed
    assert report["detuning"].residual == pytest.approx(0.0, abs=1e-6)
    assert report["hierarchy"].lhs == pytest.approx(710 / 160)
    assert report["meter_linewidth"].passed
    assert report["meter_linewidth"].residual == pytest.approx(-20e3)
    assert report["coupling_sum"].passed
    assert report["coupling_balance"].passed


def test_matched_pair(oms):
    enmo = EnmoParams(
        meter=CavityMode.from_hz(1e6),
        ancilla=CavityMode.from_hz(1.0, -710e3),
        coupling=Coupling.from_hz(175e3, 175e3),
    )
    report = matching_report(enmo, oms)
    assert report.passed
    assert not report.failures()
    assert "all conditions met" in report.to_text()


def test_hierarchy_violation(enmo, oms):
    report = matching_report(enmo.with_ancilla(detuning=-2.5 * enmo.ancilla.kappa), oms)

    assert not report["hierarchy"].passed
    assert report["hierarchy"].lhs == pytest.approx(2.5)
    assert not report["detuning"].passed
    assert "condition(s) not met" in report.to_text()


def test_tolerances(enmo, oms):
    report = matching_report(enmo, oms, Tolerances(rel=0.01))
    assert not report["meter_linewidth"].passed

    report = matching_report(enmo, oms, Tolerances(hierarchy_ratio=5.0))
    assert not report["hierarchy"].passed


def test_report_tables(enmo, oms):
    report = matching_report(enmo, oms)
    frame = report.to_frame()
    assert list(frame.index) == ["detuning", "linewidth", "hierarchy", "meter_linewidth", "coupling_sum",
                                 "coupling_balance"]
    assert report.to_dict()["passed"] is False
    assert len(report.to_dict()["conditions"]) == 6

    with pytest.raises(KeyError):
        report["nonexistent"]


def test_listed_detunings_need_a_choice(oms, data_dir):
    with open(os.path.join(data_dir, "table_i_enmo.json")) as f:
        data = json.load(f)
    with pytest.raises(InvalidParameter) as error:
        enmo_from_dict(data)
    assert "detuning_hz" in str(error.value)

    chosen = enmo_from_dict(data, detuning_hz=-710e3)
    assert chosen.ancilla.detuning == pytest.approx(hz(-710e3))
    assert matching_report(chosen, oms)["detuning"].passed
    assert not matching_report(enmo_from_dict(data, detuning_hz=-465e3), oms)["detuning"].passed

    assert enmo_from_dict(dict(data, delta_a_hz=[-710e3])).ancilla.detuning == pytest.approx(hz(-710e3))
