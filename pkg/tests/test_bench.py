"""Benchmark harness and CLI tests (small, fast configurations)."""

import math

import pytest

from lrfcodes.bench import (CSV_COLUMNS, ExperimentSpec, ResultRow, emit_csv,
                            emit_summary, load_csv, run_experiment)
from lrfcodes.cli import main
from lrfcodes.errors import InvalidParameterError


def _spec(experiment, **overrides):
    base = dict(experiment=experiment, window_lengths=(256,),
                loss_rates=(0.01, 0.02), trials=3, master_seed=5,
                symbol_bytes=16, total_symbols=2048, epsilon=0.2,
                precode_k=256, precode_s=9, precode_h=2)
    base.update(overrides)
    return ExperimentSpec(**base)


# ---------------------------------------------------------------------------
# Spec validation


def test_spec_rejects_unknown_experiment():
    with pytest.raises(InvalidParameterError):
        _spec("no-such-experiment")


def test_spec_rejects_bad_trials():
    with pytest.raises(InvalidParameterError):
        _spec("window-sweep", trials=0)


# ---------------------------------------------------------------------------
# Experiments produce sane rows


def test_window_sweep_rows():
    rows = run_experiment(_spec("window-sweep"))
    assert len(rows) == 2  # one scheme x two loss rates
    for row in rows:
        assert row.experiment == "window-sweep"
        assert row.scheme == "LRF"
        assert row.success_rate == 1.0
        assert row.encoding_ratio > 0
        assert row.degree_ratio >= row.encoding_ratio
        # Timing columns stay empty without timing mode.
        assert row.encode_ns_per_lost is None
        assert row.decode_ns_per_lost is None


def test_lt_compare_rows():
    rows = run_experiment(_spec("lt-compare", loss_rates=(0.02,)))
    schemes = {row.scheme for row in rows}
    assert schemes == {"LT", "LRF"}
    by_scheme = {row.scheme: row for row in rows}
    # The baseline re-encodes the whole window; the loss-aware codec only
    # repairs the losses.
    assert by_scheme["LT"].encoding_ratio > 1.0
    assert by_scheme["LRF"].encoding_ratio < 0.5


def test_raptor_compare_rows():
    rows = run_experiment(_spec("raptor-compare", loss_rates=(0.02,)))
    schemes = {row.scheme for row in rows}
    assert schemes == {"Raptor", "LR-Raptor"}
    for row in rows:
        assert row.success_rate == 1.0


def test_transfer_rows_have_throughput():
    rows = run_experiment(_spec("transfer", loss_rates=(0.01,), timing=True,
                                total_symbols=1024))
    assert {row.scheme for row in rows} == {"LT", "LRF", "Raptor", "LR-Raptor"}
    for row in rows:
        assert row.throughput_MBps is not None and row.throughput_MBps > 0


def test_timing_mode_fills_columns():
    rows = run_experiment(_spec("window-sweep", loss_rates=(0.02,),
                                timing=True))
    (row,) = rows
    assert row.encode_ns_per_lost > 0
    assert row.decode_ns_per_lost > 0


def test_rows_deterministic_for_master_seed():
    a = run_experiment(_spec("window-sweep"))
    b = run_experiment(_spec("window-sweep"))
    assert a == b
    c = run_experiment(_spec("window-sweep", master_seed=6))
    assert any(x.encoding_ratio != y.encoding_ratio for x, y in zip(a, c))


# ---------------------------------------------------------------------------
# CSV round trip


def test_csv_roundtrip(tmp_path):
    rows = run_experiment(_spec("window-sweep"))
    path = tmp_path / "out.csv"
    emit_csv(rows, path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    assert load_csv(path) == rows


def test_csv_bytes_identical_across_runs(tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_experiment(_spec("lt-compare", loss_rates=(0.01,))), p1)
    emit_csv(run_experiment(_spec("lt-compare", loss_rates=(0.01,))), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_emit_summary_lists_schemes(tmp_path, capsys):
    rows = run_experiment(_spec("raptor-compare", loss_rates=(0.02,)))
    emit_summary(rows)
    out = capsys.readouterr().out
    assert "Raptor" in out and "LR-Raptor" in out


# ---------------------------------------------------------------------------
# CLI


def _cli(*args):
    return main(list(args))


def test_cli_window_sweep_writes_csv(tmp_path):
    out = tmp_path / "ws.csv"
    code = _cli("window-sweep", "--window", "256", "--loss-rate", "0.02",
                "--trials", "2", "--total-symbols", "1024",
                "--symbol-bytes", "16", "--out", str(out))
    assert code == 0
    rows = load_csv(out)
    assert rows and rows[0].experiment == "window-sweep"


def test_cli_determinism(tmp_path):
    args = ("lt-compare", "--window", "256", "--loss-rate", "0.02",
            "--trials", "2", "--total-symbols", "1024",
            "--symbol-bytes", "16", "--seed", "3")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _cli(*args, "--out", str(a)) == 0
    assert _cli(*args, "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_bad_output_path_is_io_error(tmp_path):
    code = _cli("window-sweep", "--window", "64", "--loss-rate", "0.02",
                "--trials", "1", "--total-symbols", "128",
                "--symbol-bytes", "8",
                "--out", str(tmp_path / "missing-dir" / "x.csv"))
    assert code == 1


def test_cli_invalid_parameter_is_error(capsys):
    code = _cli("window-sweep", "--loss-rate", "2.0", "--trials", "1",
                "--total-symbols", "128", "--window", "64")
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_cli_trace_log(tmp_path):
    trace = tmp_path / "trace.log"
    code = _cli("transfer", "--window", "128", "--loss-rate", "0.05",
                "--trials", "1", "--total-symbols", "256",
                "--symbol-bytes", "8", "--trace", str(trace))
    assert code == 0
    assert trace.exists()
