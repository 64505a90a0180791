import csv
import io
import json
import math
from dataclasses import fields

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geoflow.config import SCENARIOS, ScenarioConfig, load_config, parse_config, serialize_config
from geoflow.errors import ConfigurationError, ReportIOError
from geoflow.report import REPORT_COLUMNS, ScenarioReport, check, emit_report, observe


@given(
    st.sampled_from(SCENARIOS + ("all",)),
    st.floats(0.001, 0.3),
    st.floats(1.01, 1.99),
    st.integers(0, 2**64 - 1),
    st.lists(st.floats(0.001, 0.4), min_size=1, max_size=4),
    st.sampled_from(["csv", "json"]),
)
def test_config_round_trip(scenario, eps, c, seed, eps_list, fmt):
    cfg = ScenarioConfig(
        scenario=scenario, epsilon_tube=eps, cone_opening=c, seed=seed, epsilon_bound_list=tuple(eps_list), format=fmt
    )
    again = parse_config(serialize_config(cfg))
    assert again == cfg


def test_config_comments_and_defaults():
    cfg = parse_config("# comment\n\nepsilon_tube = 0.03  # trailing\nseed = 5\n")
    assert cfg.epsilon_tube == 0.03 and cfg.seed == 5
    assert cfg.cone_opening == ScenarioConfig().cone_opening
    assert cfg.smoothing is None


@pytest.mark.parametrize(
    "text",
    [
        "unknown_key = 1",
        "seed = 1\nseed = 2",
        "seed",
        "seed = x",
        "cone_opening = 2.0",
        "cone_opening = 1.0",
        "epsilon_tube = 0.6",
        "tau_ramp = 0.3",
        "a_block_count = 4",
        "scenario = nope",
        "format = xml",
        "loglog_start_time = 200",
        "epsilon_tube = nan",
    ],
)
def test_config_rejects(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_config_overrides_and_files(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("seed = 3\nout_dir = here\n")
    cfg = load_config(p, seed=9, out_dir=None)
    assert cfg.seed == 9 and cfg.out_dir == "here"
    assert load_config(None) == ScenarioConfig()
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigurationError):
        parse_config("", nonsense=1)


def test_check_relations():
    assert check("a", 1.0, 1.05, 0.1).passed
    assert not check("a", 1.0, 1.2, 0.1).passed
    assert check("r", 1.0, 1.05, 0.1, "rel").passed
    assert check("l", 0.9, 1.0, 0.0, "le").passed
    assert not check("g", 0.9, 1.0, 0.0, "gt").passed
    assert not check("n", math.nan, 1.0, 1.0).passed
    assert observe("o", 1.0).passed is None
    with pytest.raises(ValueError):
        check("x", 1, 1, 0, "approx")


def _report():
    rep = ScenarioReport("symmetric-cones", ScenarioConfig())
    rep.add(check("finite", np.float64(0.1), 0.0, 0.5))
    rep.add(check("bad", math.inf, 0.0, 0.5))
    rep.add(observe("note", math.nan, provenance="PAPER"))
    t = rep.table("series", ("x", "y"))
    t.add(1, 0.1)
    t.add(2, math.inf)
    return rep


def test_json_report_is_valid(tmp_path):
    rep = _report()
    paths = emit_report(rep, tmp_path, "json")
    data = json.loads(paths[0].read_text())
    assert data["verdict"] is False
    assert data["checks"][1]["measured"] is None
    assert data["checks"][2]["passed"] is None
    assert data["checks"][0]["measured"] == 0.1
    assert data["series"][0]["rows"][1] == [2, None]
    assert data["config"]["seed"] == 0


def test_csv_report(tmp_path):
    paths = emit_report(_report(), tmp_path, "csv")
    rows = list(csv.reader(io.StringIO(paths[0].read_text())))
    assert tuple(rows[0]) == REPORT_COLUMNS
    assert rows[2][2] == "inf" and rows[2][6] == "false"
    series = paths[1].read_text().splitlines()
    assert series[0] == "# table=series" and series[1] == "x,y" and series[3] == "2,inf"


def test_header_only_csv(tmp_path):
    paths = emit_report(ScenarioReport("bump-bounds", ScenarioConfig()), tmp_path, "csv")
    assert paths[0].read_text() == ",".join(REPORT_COLUMNS) + "\n"
    assert paths[1].read_text() == ""


def test_emission_deterministic(tmp_path):
    a = emit_report(_report(), tmp_path / "a", "json")
    b = emit_report(_report(), tmp_path / "b", "json")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_float_round_trip(tmp_path):
    rep = ScenarioReport("crossing-time", ScenarioConfig())
    vals = [0.1 + 0.2, 1 / 3, 1e-300, 12345.678901234567]
    for i, v in enumerate(vals):
        rep.add(observe(f"v{i}", v))
    data = json.loads(emit_report(rep, tmp_path, "json")[0].read_text())
    assert [c["measured"] for c in data["checks"]] == vals


def test_report_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportIOError) as exc:
        emit_report(_report(), blocker / "sub", "json")
    assert exc.value.kind == "io"
