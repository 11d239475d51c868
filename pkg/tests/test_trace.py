import json

import pytest

from plirls.core.solver import IterationRecord
from plirls.core.trace import (
    plot_data_text,
    read_trace,
    trace_columns,
    trace_to_csv_text,
    write_trace_csv,
    write_trace_json,
)

RECORDS = [
    IterationRecord(k=1, objective=3.5, step_norm=0.25, w_norm=0.125, c_k=11.0, rho1_witness=0.5, rho2_witness=1.0),
    IterationRecord(k=2, objective=3.25, step_norm=0.0625, w_norm=0.03125, c_k=11.0, rho1_witness=0.0,
                    rho2_witness=None),
]


def test_csv_header_and_empty_cells():
    lines = trace_to_csv_text(RECORDS).splitlines()
    assert lines[0] == "k,objective,step_norm,w_norm,c_k,rho1_witness,rho2_witness"
    assert lines[1] == "1,3.5,0.25,0.125,11.0,0.5,1.0"
    assert lines[2].endswith(",0.0,")


def test_multiblock_and_verbose_columns():
    block = [IterationRecord(k=1, objective=1.0, step_norm=1.0, w_norm=1.0, c_k=1.0, rho1_witness=0.0,
                             rho2_witness=None, step_norm_X=0.5, step_norm_Y=0.5)]
    assert trace_columns(block)[-2:] == ["step_norm_X", "step_norm_Y"]
    assert trace_columns(RECORDS, verbose=True)[-1] == "w_norm_stated"


def test_files_read_back(tmp_path):
    csv_path, json_path = tmp_path / "trace.csv", tmp_path / "trace.json"
    write_trace_csv(csv_path, RECORDS)
    write_trace_json(json_path, RECORDS)
    assert json.loads(json_path.read_text())[1]["rho2_witness"] is None
    for path in (csv_path, json_path):
        rows = read_trace(path)
        assert [row["objective"] for row in rows] == [3.5, 3.25]
        assert rows[1]["rho2_witness"] is None


def test_json_nonfinite_values_become_null(tmp_path):
    record = IterationRecord(k=1, objective=float("inf"), step_norm=0.0, w_norm=0.0, c_k=1.0,
                             rho1_witness=float("nan"), rho2_witness=0.0)
    path = tmp_path / "trace.json"
    write_trace_json(path, [record])
    row = json.loads(path.read_text())[0]
    assert row["objective"] is None
    assert row["rho1_witness"] is None


def test_plot_data_text(tmp_path):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, RECORDS)
    lines = plot_data_text(read_trace(path)).splitlines()
    assert lines[0] == "# k objective w_norm"
    assert lines[1:] == ["1 3.5 0.125", "2 3.25 0.03125"]


@pytest.mark.parametrize("value, text", [(0.1, "0.1"), (float("inf"), "inf"), (-float("inf"), "-inf")])
def test_csv_float_format(value, text):
    record = IterationRecord(k=1, objective=value, step_norm=0.0, w_norm=0.0, c_k=1.0, rho1_witness=0.0,
                             rho2_witness=0.0)
    assert trace_to_csv_text([record]).splitlines()[1].split(",")[1] == text
