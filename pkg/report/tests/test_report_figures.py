import pytest

from conftest import TRAJECTORY_HEADER, trajectory_rows, write_csv

from loopreport import FigureSpec, ReportError, render_trajectories


def make_traj(tmp_path, name="traj.csv", **kwargs):
    return write_csv(tmp_path / name, TRAJECTORY_HEADER,
                     trajectory_rows(**kwargs))


def make_spec(tmp_path, paths, labels=None, **kwargs):
    labels = tuple(f"k_s={i}" for i in range(len(paths))) \
        if labels is None else tuple(labels)
    return FigureSpec(csv_paths=tuple(paths), labels=labels, parameter="k_s",
                      out_path=tmp_path / "fig.svg", **kwargs)


def test_single_value_gives_one_line_figure(tmp_path):
    spec = make_spec(tmp_path, [make_traj(tmp_path)], labels=["k_s=2"])
    out = render_trajectories(spec)
    svg = out.read_text(encoding="utf-8")
    assert svg.count('class="mean"') == 1
    assert svg.count('class="target"') == 1
    assert ">k_s=2<" in svg


def test_five_values_give_five_mean_lines(tmp_path):
    paths = [make_traj(tmp_path, f"t{i}.csv", bias=0.3 * i) for i in range(5)]
    labels = [f"k_s={k}" for k in (2, 6, 10, 14, 17)]
    svg = render_trajectories(make_spec(tmp_path, paths, labels)) \
        .read_text(encoding="utf-8")
    assert svg.count('class="mean"') == 5
    for label in labels:
        assert f">{label}<" in svg


def test_per_run_traces_match_run_count(tmp_path):
    paths = [make_traj(tmp_path, "a.csv", n_runs=4),
             make_traj(tmp_path, "b.csv", n_runs=2)]
    svg = render_trajectories(make_spec(tmp_path, paths)) \
        .read_text(encoding="utf-8")
    assert svg.count('class="run"') == 6

    quiet = make_spec(tmp_path, paths, show_runs=False)
    assert 'class="run"' not in render_trajectories(quiet) \
        .read_text(encoding="utf-8")


def test_target_line_can_be_disabled(tmp_path):
    spec = make_spec(tmp_path, [make_traj(tmp_path)], target_line=False)
    svg = render_trajectories(spec).read_text(encoding="utf-8")
    assert 'class="target"' not in svg
    assert ">target<" not in svg


def test_empty_csv_is_an_error(tmp_path):
    path = write_csv(tmp_path / "empty.csv", TRAJECTORY_HEADER, [])
    spec = make_spec(tmp_path, [path])
    with pytest.raises(ReportError, match="no data rows"):
        render_trajectories(spec)
    assert not (tmp_path / "fig.svg").exists()


def test_missing_column_is_named(tmp_path):
    header = TRAJECTORY_HEADER.replace("delta_m,", "")
    rows = [",".join(r.split(",")[:3] + r.split(",")[4:])
            for r in trajectory_rows()]
    path = write_csv(tmp_path / "bad.csv", header, rows)
    with pytest.raises(ReportError, match="missing column 'delta_m'"):
        render_trajectories(make_spec(tmp_path, [path]))


def test_unexpected_column_is_named(tmp_path):
    path = write_csv(tmp_path / "bad.csv", TRAJECTORY_HEADER + ",bogus",
                     [r + ",1" for r in trajectory_rows()])
    with pytest.raises(ReportError, match="unexpected column 'bogus'"):
        render_trajectories(make_spec(tmp_path, [path]))


def test_non_numeric_cell_names_column_and_line(tmp_path):
    rows = trajectory_rows(n_runs=1, n_steps=3)
    fields = rows[1].split(",")
    fields[3] = "wat"
    rows[1] = ",".join(fields)
    path = write_csv(tmp_path / "bad.csv", TRAJECTORY_HEADER, rows)
    with pytest.raises(ReportError, match="line 3: column 'delta_m'"):
        render_trajectories(make_spec(tmp_path, [path]))


def test_missing_file_fails_at_spec_construction(tmp_path):
    with pytest.raises(ReportError, match="not found"):
        make_spec(tmp_path, [tmp_path / "absent.csv"])


def test_label_count_must_match_paths(tmp_path):
    path = make_traj(tmp_path)
    with pytest.raises(ReportError, match="labels"):
        make_spec(tmp_path, [path], labels=["a", "b"])


def test_bad_range_rejected(tmp_path):
    path = make_traj(tmp_path)
    with pytest.raises(ReportError, match="y_range"):
        make_spec(tmp_path, [path], y_range=(1.0, 1.0))


def test_rendering_is_deterministic(tmp_path):
    paths = [make_traj(tmp_path, f"t{i}.csv", bias=0.1 * i) for i in range(3)]
    spec = make_spec(tmp_path, paths)
    first = render_trajectories(spec).read_bytes()
    assert render_trajectories(spec).read_bytes() == first


def test_only_legend_values_appear_as_figure_text(tmp_path):
    # the provenance rule: any number printed in the figure must come from
    # the caller's labels, never from internally computed quantities
    import re
    paths = [make_traj(tmp_path, f"t{i}.csv", bias=0.2 * i) for i in range(2)]
    svg = render_trajectories(
        make_spec(tmp_path, paths, labels=["k_s=6", "k_s=17"])) \
        .read_text(encoding="utf-8")
    texts = re.findall(r"<text[^>]*>([^<]*)</text>", svg)
    numeric = {tok for t in texts
               for tok in re.findall(r"\d+(?:\.\d+)?(?:e-?\d+)?", t)}
    assert numeric == {"6", "17"}
