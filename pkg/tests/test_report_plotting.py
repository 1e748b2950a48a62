import csv

import numpy as np
import pytest

from racinggan.analysis import BenchmarkSummary, RunSummary, convergence_report
from racinggan.plotting import plot_checkpoint_curves, plot_loss_trace, plot_trace_file, series_labels
from racinggan.report import SUMMARY_HEADER, format_tables, summary_rows, write_bench_outputs
from racinggan.synthdata import CurveBand, sample_real
from racinggan.trainer import LossTrace


def fake_run(variant, seed, d, gs, tracking=None):
    rep = convergence_report(LossTrace(len(gs)))
    rep.iterations = {"d": d, **{f"g{i}": g for i, g in enumerate(gs)}}
    return RunSummary(variant, seed, rep, tracking, [1.0] * len(gs), [0.28] * len(gs))


@pytest.fixture
def summary():
    runs = []
    for s in range(3):
        runs.append(fake_run("gan1", s, 9348, [8107]))
        runs.append(fake_run("gan4", s, 7728, [6049, 4944], tracking=0.01 * (s + 1)))
    runs.append(RunSummary("gan4", 9, None, error="diverged at iteration 3"))
    return BenchmarkSummary(runs)


def test_summary_rows_carry_per_seed_improvement(summary):
    rows = summary_rows(summary)
    g4 = [r for r in rows if r[0] == "gan4" and r[1] == "0"]
    assert [r[2] for r in g4] == ["d", "g0", "g1", "g_best"]
    assert g4[0][5] == "17.33" and g4[3][5] == "39.02"
    med = [r for r in rows if r[0] == "gan4" and r[1] == "median"]
    assert med[0][3] == "7728" and med[-1][5] == "39.02"


def test_failed_run_excluded_from_rows_but_listed(summary):
    rows = summary_rows(summary)
    assert not any(r[1] == "9" for r in rows)
    text = format_tables(summary)
    assert "gan4 seed 9: diverged" in text
    assert "17.33%" in text and "39.02%" in text
    assert "0.0200" in text


def test_write_bench_outputs(tmp_path, summary):
    paths = write_bench_outputs(tmp_path, summary)
    with open(paths["summary"], newline="") as fh:
        assert next(csv.reader(fh)) == SUMMARY_HEADER
    with open(paths["metrics"], newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 3 * 1 + 3 * 2


def test_series_labels():
    assert series_labels(1) == ["D", "G"]
    assert series_labels(3) == ["D", "G1", "G2", "G3"]


def test_loss_plot_is_byte_stable(tmp_path):
    trace = LossTrace(2)
    for t in range(1, 30):
        trace.append(t, 1.9 + 0.1 / t, [1.1 - 0.1 / t, 1.1])
    a = plot_loss_trace(trace, tmp_path / "a.svg", title="x")
    b = plot_loss_trace(trace, tmp_path / "b.svg", title="x")
    assert a.read_bytes() == b.read_bytes()


def test_empty_trace_plot_rejected(tmp_path):
    with pytest.raises(ValueError):
        plot_loss_trace(LossTrace(1), tmp_path / "e.svg")
    assert not (tmp_path / "e.svg").exists()


def test_plot_trace_file_default_location(tmp_path):
    trace = LossTrace(1)
    trace.append(1, 1.0, [0.5])
    trace.append(2, 1.1, [0.6])
    csv_path = trace.write_csv(tmp_path / "t.csv")
    assert plot_trace_file(csv_path) == tmp_path / "t.svg"


def test_checkpoint_curves(tmp_path):
    band = CurveBand()
    ys = sample_real(band, 6, np.random.default_rng(0))
    out = plot_checkpoint_curves({(1, 0): ys, (8000, 0): ys, (8000, 1): ys}, band, tmp_path / "c.svg")
    assert out.read_text().startswith("<?xml")
