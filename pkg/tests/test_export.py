import json
import math

import pandas as pd
import pytest

from analysis import SweepFamily, sweep_capacity
from capacity_engine import Regime
from export import format_record, read_table, significant, table_metadata, write_table


def test_significant_rounds_and_flags_non_finite():
    assert significant(1.0 / 3.0) == 0.333333333333
    assert significant(math.inf) == "inf"
    assert significant(-math.inf) == "-inf"
    assert significant(math.nan) == "nan"
    assert significant(Regime.BELOW) == "BelowThreshold"
    assert significant({"a": (1, 2.0)}) == {"a": [1, 2.0]}


def test_metadata_echoes_config():
    meta = table_metadata(tau=1.0, command="sweep")
    assert meta["tool"] == "gausscap"
    assert meta["config"] == {"tau": 1.0, "command": "sweep"}


def test_csv_round_trip_is_byte_identical(tmp_path):
    table = sweep_capacity(SweepFamily("y", tau=0.5, omega_env=0.4), 0.3, 0.7, 9, max_workers=1)
    first = tmp_path / "sweep.csv"
    second = tmp_path / "again.csv"
    write_table(table.frame, str(first))
    frame, _ = read_table(str(first))
    write_table(frame, str(second))
    assert first.read_bytes() == second.read_bytes()
    assert b"\r\n" not in first.read_bytes()
    assert first.read_text().splitlines()[0].startswith("y,regime,capacity_bits")


def test_json_layout(tmp_path):
    frame = pd.DataFrame({"tau": [0.5, 1.0], "beta_out": [1.25, math.inf]})
    path = tmp_path / "out" / "table.json"
    write_table(frame, str(path), "json", {"version": "x"})
    payload = json.loads(path.read_text())
    assert payload["metadata"] == {"version": "x"}
    assert payload["rows"][1] == {"tau": 1.0, "beta_out": "inf"}
    back, meta = read_table(str(path))
    assert back["beta_out"].iloc[1] == math.inf
    assert meta == {"version": "x"}


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        write_table(pd.DataFrame({"a": [1]}), str(tmp_path / "a.xml"), "xml")


def test_format_record_aligns_keys():
    text = format_record({"tau": 1.0, "capacity_bits": 2.0})
    assert text.splitlines() == ["tau           : 1.0", "capacity_bits : 2.0"]
