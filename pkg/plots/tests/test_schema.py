"""Artifact readers: accepted layouts and named-column schema errors."""

import shutil
import sys
from pathlib import Path

import numpy as np
import pytest

from report_plots import SchemaError, read_field_snapshots, read_signals

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def test_reads_field_snapshots():
    snaps = read_field_snapshots(FIXTURES / "lqr_like", "u.csv")
    assert snaps.values.shape == (4, 4)
    np.testing.assert_allclose(snaps.times, [0.0, 0.1, 0.2, 0.3])
    assert snaps.values[0, 1] == 0.7
    assert not snaps.values.flags.writeable


def test_reads_signals():
    signals = read_signals(FIXTURES / "lqr_like")
    np.testing.assert_allclose(signals.control, [0.0, -0.2, -0.3, -0.25])
    np.testing.assert_allclose(signals.norm_u, [0.57, 0.44, 0.31, 0.2])
    assert signals.running_cost[0] == 3.2


def test_corrupt_fixture_names_missing_column():
    with pytest.raises(SchemaError, match="missing required column 'norm_u'"):
        read_signals(FIXTURES / "corrupt_run")


def test_unexpected_signal_column_named(tmp_path):
    run = tmp_path / "run"
    shutil.copytree(FIXTURES / "lqr_like", run)
    text = (run / "signals.csv").read_text().splitlines()
    text[0] = text[0] + ",energy"
    (run / "signals.csv").write_text(
        "\n".join(line + (",1" if i else "") for i, line in enumerate(text)) + "\n"
    )
    with pytest.raises(SchemaError, match="unexpected column 'energy'"):
        read_signals(run)


def test_misnamed_node_column_named(tmp_path):
    run = tmp_path / "run"
    shutil.copytree(FIXTURES / "lqr_like", run)
    text = (run / "u.csv").read_text().replace("x2", "y2")
    (run / "u.csv").write_text(text)
    with pytest.raises(SchemaError, match="column 'y2' found where 'x2' was expected"):
        read_field_snapshots(run, "u.csv")


def test_ragged_row_reported_with_row_number(tmp_path):
    run = tmp_path / "run"
    shutil.copytree(FIXTURES / "lqr_like", run)
    lines = (run / "v.csv").read_text().splitlines()
    lines[2] = "0.1,0.1,0.6"
    (run / "v.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="row 2 has 3 fields, expected 5"):
        read_field_snapshots(run, "v.csv")


def test_non_numeric_cell_names_row_and_column(tmp_path):
    run = tmp_path / "run"
    shutil.copytree(FIXTURES / "lqr_like", run)
    text = (run / "signals.csv").read_text().replace("-0.3", "oops", 1)
    (run / "signals.csv").write_text(text)
    with pytest.raises(SchemaError, match="row 3, column 'U': 'oops'"):
        read_signals(run)


def test_missing_file_is_a_schema_error(tmp_path):
    with pytest.raises(SchemaError, match="artifact file not found"):
        read_signals(tmp_path)


def test_empty_file_rejected(tmp_path):
    run = tmp_path / "run"
    run.mkdir()
    (run / "u.csv").write_text("")
    with pytest.raises(SchemaError, match="empty"):
        read_field_snapshots(run, "u.csv")


def test_header_only_rejected(tmp_path):
    run = tmp_path / "run"
    run.mkdir()
    (run / "signals.csv").write_text("t,U,norm_u,norm_v,running_cost\n")
    with pytest.raises(SchemaError, match="no signal rows"):
        read_signals(run)


def test_component_never_imports_the_solver_package():
    # the CSV schema is the whole interface between the packages, so no
    # report_plots module may hold a reference into the solver package
    import types

    for name, module in list(sys.modules.items()):
        if not name.startswith("report_plots"):
            continue
        for value in vars(module).values():
            if isinstance(value, types.ModuleType):
                assert not value.__name__.startswith("hyperlqr"), (
                    f"{name} imports {value.__name__}"
                )
            elif hasattr(value, "__module__"):
                assert not str(value.__module__).startswith("hyperlqr"), (
                    f"{name} uses {value!r} from {value.__module__}"
                )
