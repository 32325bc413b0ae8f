import numpy as np
import pytest

from s2cgan.metrics import MetricsRecord
from s2cgan.objectives import ObjectiveBreakdown, full_objective
from s2cgan.reporting import (
    CSV_HEADER,
    emit_metrics_csv,
    emit_scatter_svg,
    parse_metrics_csv,
)


def record(step, *, unsup=True, mean_iou=None, pl_acc=None):
    breakdown = full_objective(-1.372, 0.9416, -1.401 if unsup else 0.0, (1.0, 1.0, 1.0))
    return MetricsRecord(
        step=step,
        breakdown=breakdown,
        unsup_active=unsup,
        label_agreement=0.9125,
        label_agreement_one_pass=0.905,
        label_agreement_two_pass=0.9125,
        per_class_iou=None,
        mean_iou=mean_iou,
        mmd2=0.004321,
        marginal_tv=0.0625,
        pseudo_label_acc=pl_acc,
    )


def test_empty_history_writes_header_only(tmp_path):
    path = tmp_path / "m.csv"
    emit_metrics_csv([], path)
    assert path.read_text() == CSV_HEADER + "\n"


def test_row_count_and_lf_endings(tmp_path):
    path = tmp_path / "m.csv"
    emit_metrics_csv([record(500), record(1000)], path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert len(lines) == 3
    assert lines[0] == CSV_HEADER


def test_inapplicable_cells_are_empty(tmp_path):
    path = tmp_path / "m.csv"
    emit_metrics_csv([record(1, unsup=False)], path)
    row = path.read_text().splitlines()[1].split(",")
    header = CSV_HEADER.split(",")
    assert row[header.index("v_unsup")] == ""
    assert row[header.index("mean_iou")] == ""
    assert row[header.index("pseudo_label_acc")] == ""


def test_round_trip_preserves_values_exactly(tmp_path):
    path = tmp_path / "m.csv"
    recs = [
        record(500, mean_iou=1.0 / 3.0, pl_acc=0.87512345678901),
        record(1000, unsup=False),
    ]
    emit_metrics_csv(recs, path)
    rows = parse_metrics_csv(path)
    assert len(rows) == 2
    assert rows[0]["step"] == 500
    assert rows[0]["v_sup"] == recs[0].breakdown.v_sup
    assert rows[0]["v_unsup"] == recs[0].breakdown.v_unsup
    assert rows[0]["v_full"] == recs[0].breakdown.v_full
    assert rows[0]["mean_iou"] == 1.0 / 3.0
    assert rows[0]["pseudo_label_acc"] == 0.87512345678901
    assert rows[1]["v_unsup"] is None
    assert rows[1]["mean_iou"] is None
    assert rows[1]["label_agreement"] == 0.9125


def test_emission_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    recs = [record(500), record(1000, unsup=False, pl_acc=0.5)]
    emit_metrics_csv(recs, a)
    emit_metrics_csv(recs, b)
    assert a.read_bytes() == b.read_bytes()


def test_csv_write_errors_carry_path(tmp_path):
    with pytest.raises(OSError, match="no/such/dir"):
        emit_metrics_csv([], tmp_path / "no" / "such" / "dir" / "m.csv")


# -- SVG ------------------------------------------------------------------------


def ring_points(rng, n):
    theta = rng.uniform(0, 2 * np.pi, size=n)
    return np.column_stack([2 * np.cos(theta), 2 * np.sin(theta)])


def test_svg_counts_match_inputs(tmp_path, rng):
    real = ring_points(rng, 40)
    fake = ring_points(rng, 25)
    labels = (rng.integers(0, 4, size=40), rng.integers(0, 4, size=25))
    path = tmp_path / "s.svg"
    emit_scatter_svg(real, fake, labels, path)
    text = path.read_text()
    assert text.count("<circle") == 40
    assert text.count('class="cross"') == 25
    assert 'width="800" height="800"' in text
    assert "class 0" in text and "class 3" in text
    assert "circle = real, cross = generated" in text


def test_svg_zero_points_still_valid(tmp_path):
    path = tmp_path / "empty.svg"
    emit_scatter_svg(np.zeros((0, 2)), np.zeros((0, 2)), None, path)
    text = path.read_text()
    assert text.startswith("<svg")
    assert text.rstrip().endswith("</svg>")
    assert text.count("<circle") == 0
    assert text.count('class="cross"') == 0


def test_svg_is_byte_deterministic(tmp_path, rng):
    real = ring_points(rng, 10)
    fake = ring_points(rng, 10)
    labels = (np.zeros(10, dtype=int), np.ones(10, dtype=int))
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_scatter_svg(real, fake, labels, a)
    emit_scatter_svg(real, fake, labels, b)
    assert a.read_bytes() == b.read_bytes()


def test_svg_bounds_include_ten_percent_margin(tmp_path):
    real = np.array([[0.0, 0.0], [10.0, 20.0]])
    path = tmp_path / "m.svg"
    emit_scatter_svg(real, np.zeros((0, 2)), (np.array([0, 1]), None), path)
    text = path.read_text()
    assert "-1.000" in text and "11.000" in text  # x range with margin
    assert "-2.000" in text and "22.000" in text  # y range with margin


def test_svg_label_count_mismatch_rejected(tmp_path, rng):
    real = ring_points(rng, 5)
    with pytest.raises(ValueError, match="label counts"):
        emit_scatter_svg(real, np.zeros((0, 2)), (np.zeros(3, dtype=int), None), tmp_path / "x.svg")
