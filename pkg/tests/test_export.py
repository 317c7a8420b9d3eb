import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from fmab.harness import Table, export, parse_config, read_table, run_episode
from fmab.harness.export import (
    AGGREGATE_COLUMNS,
    NAV_SWEEP_COLUMNS,
    TRACE_COLUMNS,
    ExportError,
    as_table,
    read_csv,
)
from fmab.harness.montecarlo import run_monte_carlo


def _cfg(**over):
    base = {
        "graph_process": {"kind": "er_hom", "n": 3, "p": 0.6},
        "reward_model": {"means": [0.7, 0.2, 0.4]},
        "horizon": 120,
        "policy": {"t0": 40},
        "record_trace": True,
    }
    base.update(over)
    return parse_config(base)


def test_column_sets():
    assert TRACE_COLUMNS == (
        "run_id", "t", "position", "action", "reward",
        "pseudo_regret", "cum_pseudo_regret", "realized_regret", "phase",
    )
    assert AGGREGATE_COLUMNS == ("series_id", "t", "mean", "median", "q25", "q75", "n_runs")
    assert NAV_SWEEP_COLUMNS == ("p", "n", "runs", "min", "q25", "median", "q75", "max", "censored_count")


def test_empty_table_is_header_only(tmp_path):
    path = export(Table(AGGREGATE_COLUMNS), tmp_path / "a.csv")
    assert path.read_text().strip() == ",".join(AGGREGATE_COLUMNS)
    assert read_csv(path) == Table(AGGREGATE_COLUMNS)


def test_trace_row_count(tmp_path):
    r = run_episode(_cfg())
    tab = r.trace_table()
    assert len(tab) == 120
    assert tab.column("t") == list(range(1, 121))
    back = read_table(export(tab, tmp_path / "trace.csv"))
    assert back == tab


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_aggregate_roundtrip(tmp_path, fmt):
    agg = run_monte_carlo(_cfg(record_trace=False), 5).aggregate()
    assert read_table(export(agg, tmp_path / f"agg.{fmt}", fmt)) == agg


def test_json_mirrors_columns(tmp_path):
    tab = as_table(("a", "b"), [{"a": 1, "b": 0.1}, {"a": 2, "b": 1 / 3}])
    doc = json.loads(export(tab, tmp_path / "t.json", "json").read_text())
    assert doc["columns"] == ["a", "b"]
    assert doc["rows"][1] == {"a": 2, "b": 1 / 3}


def test_seventeen_digit_floats(tmp_path):
    x = 0.1 + 0.2
    path = export(Table(("x",), [(x,)]), tmp_path / "x.csv")
    text = path.read_text().splitlines()[1]
    assert text == format(x, ".17g")
    assert float(text) == x


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-10**9, 10**9), st.floats(allow_nan=False), st.booleans()), max_size=20))
def test_csv_roundtrip_property(tmp_path_factory, rows):
    tab = Table(("i", "x", "flag"), rows)
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    assert read_table(export(tab, path)) == tab


def test_nonfinite_values_roundtrip(tmp_path):
    tab = Table(("x",), [(math.inf,), (-math.inf,)])
    for fmt in ("csv", "json"):
        assert read_table(export(tab, tmp_path / f"n.{fmt}", fmt)) == tab


def test_io_errors_carry_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ExportError, match="file"):
        export(Table(("a",)), blocker / "sub" / "t.csv")
    with pytest.raises(ExportError, match="missing"):
        read_table(tmp_path / "missing.csv")
    with pytest.raises(ValueError):
        export(Table(("a",)), tmp_path / "t.xml", "xml")


def test_table_helpers():
    tab = Table(("k", "v"))
    tab.append("a", 1)
    tab.append("b", 2)
    with pytest.raises(ValueError):
        tab.append("c")
    assert tab.where(k="b").rows == [("b", 2)]
    assert tab.records() == [{"k": "a", "v": 1}, {"k": "b", "v": 2}]
