import pytest

from conftest import SUMMARY_HEADER, summary_row, write_csv

from loopreport import ReportError, render_summary_table


def test_three_rows_give_three_row_table(tmp_path):
    rows = [summary_row(value=v) for v in ("2", "6", "10")]
    path = write_csv(tmp_path / "summary.csv", SUMMARY_HEADER, rows)
    out = render_summary_table(path, tmp_path / "summary.txt")
    lines = out.read_text(encoding="utf-8").splitlines()
    data = lines[2:]
    assert len(data) == 3
    # every cell is echoed verbatim, column for column
    for line, row in zip(data, rows):
        assert line.startswith(" ")
        assert line.split() == row.split(",")


def test_infeasible_rows_are_flagged(tmp_path):
    rows = [summary_row(value="10"),
            summary_row(value="17", feasible=False)]
    path = write_csv(tmp_path / "summary.csv", SUMMARY_HEADER, rows)
    text = render_summary_table(path, tmp_path / "t.txt") \
        .read_text(encoding="utf-8")
    lines = text.splitlines()
    assert lines[2].startswith(" ")
    assert lines[3].startswith("!")
    assert "infeasible" in lines[-1]


def test_all_feasible_table_has_no_flag_footnote(tmp_path):
    path = write_csv(tmp_path / "summary.csv", SUMMARY_HEADER,
                     [summary_row()])
    text = render_summary_table(path, tmp_path / "t.txt") \
        .read_text(encoding="utf-8")
    assert "marks rows" not in text


def test_missing_column_is_named(tmp_path):
    header = SUMMARY_HEADER.replace(",jitter_rms_m", "")
    path = write_csv(tmp_path / "summary.csv", header, ["x" * 20])
    with pytest.raises(ReportError, match="missing column 'jitter_rms_m'"):
        render_summary_table(path, tmp_path / "t.txt")


def test_header_only_summary_is_an_error(tmp_path):
    path = write_csv(tmp_path / "summary.csv", SUMMARY_HEADER, [])
    with pytest.raises(ReportError, match="no data rows"):
        render_summary_table(path, tmp_path / "t.txt")


def test_short_row_is_an_error(tmp_path):
    path = write_csv(tmp_path / "summary.csv", SUMMARY_HEADER,
                     ["k_s,2,broken"])
    with pytest.raises(ReportError, match="line 2: expected 21 fields"):
        render_summary_table(path, tmp_path / "t.txt")
