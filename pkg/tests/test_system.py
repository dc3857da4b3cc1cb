import json

import numpy as np
import pytest

from gridplan.system import (
    Bus,
    Generator,
    Line,
    PlanningConfig,
    PowerSystem,
    SystemDataError,
    capital_recovery_factor,
    dump_system,
    load_system,
    system_from_dict,
)


def two_bus_doc():
    return {
        "buses": [{"id": 1}, {"id": 2, "peak_load": 50.0}],
        "lines": [{"id": 1, "from_bus": 1, "to_bus": 2, "susceptance_pu": 5.0, "flow_max": 100.0}],
        "generators": [
            {"id": 1, "bus": 1, "p_min": 0, "p_max": 100, "segment_costs": [20.0], "ramp_up": 50, "ramp_down": 50}
        ],
        "config": {"stages": 1},
    }


def test_minimal_two_bus(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(two_bus_doc()))
    system = load_system(path)
    assert len(system.buses) == 2
    assert system.config.load_growth == (0.0,)
    assert system.incidence.A.tolist() == [[1.0], [-1.0]]


def test_dangling_bus_reference():
    doc = two_bus_doc()
    doc["lines"][0]["to_bus"] = 99
    with pytest.raises(SystemDataError, match="lines\\[0\\].to_bus"):
        system_from_dict(doc)


def test_negative_capacity_rejected():
    doc = two_bus_doc()
    doc["buses"][1]["peak_load"] = -1
    with pytest.raises(SystemDataError, match="peak_load"):
        system_from_dict(doc)


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"buses": [\n  {"id": 1,}\n]}')
    with pytest.raises(SystemDataError, match=r"bad.json:2:"):
        load_system(path)


def test_unknown_field_rejected():
    doc = two_bus_doc()
    doc["buses"][0]["colour"] = "red"
    with pytest.raises(SystemDataError, match="colour"):
        system_from_dict(doc)


def test_round_trip(tmp_path, data_dir):
    system = load_system(data_dir / "toy_system.json")
    dump_system(system, tmp_path / "copy.json")
    again = load_system(tmp_path / "copy.json")
    assert again == system
    assert again.to_dict() == system.to_dict()


def test_segment_count_must_match_config():
    doc = two_bus_doc()
    doc["config"]["cost_segments"] = 2
    with pytest.raises(SystemDataError, match="segment"):
        system_from_dict(doc)


def test_load_growth_length_checked():
    with pytest.raises(SystemDataError, match="load_growth"):
        PlanningConfig(stages=2, load_growth=(0.0,)).validate()


def test_capital_recovery_factor():
    r, n = 0.05, 10
    expected = r * (1 + r) ** n / ((1 + r) ** n - 1)
    assert capital_recovery_factor(r, n) == pytest.approx(expected)
    assert capital_recovery_factor(0.0, 20) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        capital_recovery_factor(0.05, 0)


def test_hvdc_incidence(data_dir):
    system = load_system(data_dir / "toy_system.json")
    inc = system.incidence
    assert inc.Kl.shape == (1, 2)
    assert inc.Kl.tolist() == [[1.0, 1.0]]
    dc = system.dc_candidates[0]
    assert inc.Kb[system.bus_index[dc.from_bus], 0] == 1.0
    assert inc.Kb[system.bus_index[dc.to_bus], 1] == 1.0
    assert np.all(inc.K.sum(axis=0) == 0)


def test_without_toggles(data_dir):
    system = load_system(data_dir / "toy_system.json")
    assert not system.without(hvdc=True).dc_candidates
    assert not system.without(bes=True).bes_buses
    assert system.without(bes=True).wf_buses == system.wf_buses


def test_hvdc_line_rejects_susceptance():
    with pytest.raises(SystemDataError):
        Line(1, 1, 2, "candidate_dc", susceptance_pu=1.0, flow_max=10).validate("x")


def test_generator_validation():
    with pytest.raises(SystemDataError):
        Generator(1, 1, 50, 10, (1.0,), 1, 1).validate("g")
    with pytest.raises(SystemDataError):
        Bus(1, is_wf_candidate=True).validate("b")


def test_reference_bus_must_exist():
    doc = two_bus_doc()
    doc["config"]["reference_bus"] = 7
    with pytest.raises(SystemDataError, match="reference"):
        system_from_dict(doc)


def test_system_is_immutable(data_dir):
    system = load_system(data_dir / "toy_system.json")
    with pytest.raises(Exception):
        system.buses = ()
    assert isinstance(system, PowerSystem)
