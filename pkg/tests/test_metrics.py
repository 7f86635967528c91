import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradguide.metrics import (
    AccuracyMatrix, RunResult, export, faa, faa_unweighted, forgetting, read_matrix,
    read_summary, summary_table, write_summary,
)

nan = np.nan


def test_faa_weighted_example_is_exact():
    m = AccuracyMatrix([[0.5, 0.9]], [10, 30])
    assert faa(m) == 0.8


def test_faa_constant_and_single():
    assert faa(AccuracyMatrix([[0.7, 0.7, 0.7]], [5, 5, 5])) == pytest.approx(0.7, abs=1e-15)
    assert faa(AccuracyMatrix([[0.42]], [3])) == 0.42


def test_faa_needs_full_final_row():
    with pytest.raises(ValueError):
        faa(AccuracyMatrix([[0.5, nan]], [1, 1]))


accs = st.lists(st.floats(0, 1), min_size=1, max_size=6)


@settings(max_examples=200, deadline=None)
@given(accs, st.data())
def test_faa_scale_invariant_and_bounded(row, data):
    sizes = data.draw(st.lists(st.integers(1, 1000), min_size=len(row), max_size=len(row)))
    k = data.draw(st.integers(1, 50))
    m = AccuracyMatrix([row], sizes)
    scaled = AccuracyMatrix([row], [k * s for s in sizes])
    assert faa(m) == pytest.approx(faa(scaled), abs=1e-12)
    assert min(row) - 1e-12 <= faa(m) <= max(row) + 1e-12


def test_forgetting_examples():
    assert forgetting(AccuracyMatrix([[0.9, nan], [0.6, 0.8]], [1, 1])) == pytest.approx(0.3)
    const = AccuracyMatrix([[0.7, nan, nan], [0.7, 0.5, nan], [0.7, 0.5, 0.9]], [1, 1, 1])
    assert forgetting(const) == 0.0
    decreasing = AccuracyMatrix([[0.9, nan, nan], [0.8, 0.7, nan], [0.4, 0.5, 0.9]], [1, 1, 1])
    assert forgetting(decreasing) == pytest.approx(((0.9 - 0.4) + (0.7 - 0.5)) / 2)
    with pytest.raises(ValueError):
        forgetting(AccuracyMatrix([[0.5, 0.6]], [1, 1]))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.data())
def test_forgetting_nonnegative(t, data):
    vals = np.full((t, t), nan)
    for i in range(t):
        for j in range(i + 1):
            vals[i, j] = data.draw(st.floats(0, 1))
    assert forgetting(AccuracyMatrix(vals, [1] * t)) >= 0


def test_matrix_validation():
    with pytest.raises(ValueError):
        AccuracyMatrix([[1.2]], [1])
    with pytest.raises(ValueError):
        AccuracyMatrix([[0.5]], [0])


def test_export_round_trip_and_na(tmp_path):
    m = AccuracyMatrix([[0.123456789, nan], [0.5, 1 / 3]], [10, 20])
    export(m, tmp_path / "m.csv")
    text = (tmp_path / "m.csv").read_text()
    assert "NA" in text and "0.123457" in text
    back = read_matrix(tmp_path / "m.csv")
    np.testing.assert_allclose(back.values, m.values, rtol=5e-6)
    assert np.isnan(back.values[0, 1])
    np.testing.assert_array_equal(back.test_sizes, m.test_sizes)


def test_summary_empty_is_header_only(tmp_path):
    write_summary([], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_bytes().count(b"\r\n") == 1
    assert read_summary(tmp_path / "s.csv") == []


def test_summary_rows_sorted_and_counted():
    m = AccuracyMatrix([[0.9, nan], [0.6, 0.8]], [1, 1])
    runs = [RunResult(v, s, m) for s in (2, 0, 1) for v in ("sequential", "full")]
    rows = summary_table(runs)
    assert len(rows) == 7
    assert [(r[1], r[2]) for r in rows[1:]] == [
        ("full", "0"), ("full", "1"), ("full", "2"),
        ("sequential", "0"), ("sequential", "1"), ("sequential", "2"),
    ]
    assert rows[0][-2:] == ["final_acc_task0", "final_acc_task1"]


def test_summary_single_row_forgetting_is_na():
    rows = summary_table([RunResult("multitask", 0, AccuracyMatrix([[0.9, 0.8]], [1, 1]))])
    assert rows[1][rows[0].index("forgetting")] == "NA"
    assert rows[1][rows[0].index("faa_unweighted")] == "0.85"
