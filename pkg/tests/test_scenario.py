import math

import pytest
import yaml

from haps_isac.scenario import (AeroParams, SchemaError, ValidationError, builtin_scenario,
                                dump_scenario, load_scenario, scenario_from_dict, slots_for,
                                time_grid)

BASE = {"users": [[0, 0]], "targets": [[100, 0]], "M": 4, "wavelength": 0.15}


def load(tmp_path, doc):
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump(doc))
    return load_scenario(p)


def test_dbm_threshold_conversion(tmp_path):
    s = load(tmp_path, {**BASE, "bp_threshold_dBm": -36})
    assert s.bp_threshold == pytest.approx(2.51188643150958e-07, rel=1e-12)


def test_omitted_aero_defaults(tmp_path):
    s = load(tmp_path, BASE)
    assert s.aero.C_D0 == 0.015
    assert s.aero.F_w == pytest.approx(165 * 9.80665)
    assert s.aero == AeroParams()
    assert s.sar.G_t == pytest.approx(10 ** 3.5)
    assert s.sar.tau_p == 10e-6


def test_equal_altitude_bounds_rejected(tmp_path):
    with pytest.raises(ValidationError) as exc:
        load(tmp_path, {**BASE, "FlightLimits": {"H_min_km": 25, "H_max_km": 25}})
    assert any("H_min" in e for e in exc.value.errors)


def test_every_failure_is_listed(tmp_path):
    with pytest.raises(ValidationError) as exc:
        load(tmp_path, {**BASE, "power_max": -1, "weights": [0], "slots": 0})
    msgs = " ".join(exc.value.errors)
    assert "power_max" in msgs and "weights" in msgs and "slots" in msgs


def test_schema_errors_carry_field_paths(tmp_path):
    with pytest.raises(SchemaError) as exc:
        load(tmp_path, {"users": [[0, 0]], "targets": [[1, 2]], "M": 4,
                        "FlightLimits": {"H_min_dB": 3, "speed": 1}, "power_max": "ten"})
    msgs = exc.value.errors
    assert any(m.startswith("wavelength") for m in msgs)
    assert any(m.startswith("FlightLimits.H_min_dB") for m in msgs)
    assert any(m.startswith("FlightLimits.speed") for m in msgs)
    assert any(m.startswith("power_max") for m in msgs)


def test_db_and_linear_forms_are_bitwise_equal(tmp_path):
    a = load(tmp_path, {**BASE, "ref_gain_dB": 30, "noise_power_dBm": -60,
                        "FlightLimits": {"H_min_km": 20}})
    b = load(tmp_path, {**BASE, "ref_gain": 1000.0, "noise_power": 1e-9,
                        "FlightLimits": {"H_min": 20000.0}})
    assert a == b


def test_round_trip(tmp_path):
    s = builtin_scenario("full")
    p = tmp_path / "s.json"
    p.write_text(dump_scenario(s))
    assert load_scenario(p) == s


def test_time_grid():
    s = builtin_scenario("full")
    g = time_grid(s)
    assert s.slots == 35 and g.dt == 10.0
    assert list(g.indices) == list(range(36))
    assert slots_for(350, 10) == 35
    assert time_grid(s.replace(horizon=10.0, slots=1)).dt == 10.0
    with pytest.raises(ValueError):
        time_grid(s.replace(slots=0))


def test_discretization_minimum():
    raw = {**BASE, "horizon": 350, "slots": 2, "disc_accuracy": 0.1}
    with pytest.raises(ValidationError):
        scenario_from_dict(raw)  # needs N >= 40*350/(20000*0.1) = 7
    assert scenario_from_dict({**raw, "slots": 7}).slots == 7


def test_unknown_builtin():
    with pytest.raises(FileNotFoundError):
        builtin_scenario("nope")


def test_obs_angle_window(tmp_path):
    with pytest.raises(ValidationError):
        load(tmp_path, {**BASE, "FlightLimits": {"obs_angle_deg": 90}})
    s = load(tmp_path, {**BASE, "FlightLimits": {"obs_angle_deg": 30}})
    assert s.flight.obs_angle == pytest.approx(math.pi / 6)
