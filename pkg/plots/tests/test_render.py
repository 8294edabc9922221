"""Unit tests for the CSV-to-chart renderer."""

import numpy as np
import pytest

from cachingplots import PlotError, PlotSpec, render
from cachingplots.render import main

HEADER = (
    "sweep_value,scheme,exact,smoothed,simulated_mean,simulated_stderr,"
    "converse,wall_time"
)

SAMPLE_ROWS = [
    "1,alpha,2.0,2.1,2.02,0.01,1.5,",
    "1,beta,2.5,2.6,,,1.5,",
    "1,converse,,,,,1.5,",
    "2,alpha,3.0,3.1,3.05,0.02,2.5,",
    "2,beta,3.5,3.6,,,2.5,",
    "2,converse,,,,,2.5,",
]


def write_csv(path, rows, header=HEADER):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return str(path)


def spec_for(csv_path, tmp_path, **overrides):
    return PlotSpec(
        source=str(csv_path), output=str(tmp_path / "chart.png"), **overrides
    )


def solid_and_dashed(figure):
    lines = figure.axes[0].lines
    solid = [line for line in lines if line.get_linestyle() == "-"]
    dashed = [line for line in lines if line.get_linestyle() == "--"]
    return solid, dashed


class TestSeries:
    def test_one_line_per_scheme_plus_dashed_bound(self, tmp_path):
        source = write_csv(tmp_path / "table.csv", SAMPLE_ROWS)
        figure = render(spec_for(source, tmp_path))
        solid, dashed = solid_and_dashed(figure)
        assert sorted(line.get_label() for line in solid) == ["alpha", "beta"]
        assert [line.get_label() for line in dashed] == ["converse"]
        alpha = next(line for line in solid if line.get_label() == "alpha")
        assert alpha.get_xydata().tolist() == [[1.0, 2.0], [2.0, 3.0]]
        assert dashed[0].get_xydata().tolist() == [[1.0, 1.5], [2.0, 2.5]]

    def test_bound_rows_never_become_solid_series(self, tmp_path):
        source = write_csv(tmp_path / "table.csv", SAMPLE_ROWS)
        figure = render(spec_for(source, tmp_path))
        solid, _ = solid_and_dashed(figure)
        assert "converse" not in {line.get_label() for line in solid}

    def test_rows_without_y_value_are_skipped(self, tmp_path):
        rows = SAMPLE_ROWS + ["3,infeasible,,,,,,"]
        source = write_csv(tmp_path / "table.csv", rows)
        figure = render(spec_for(source, tmp_path))
        solid, dashed = solid_and_dashed(figure)
        assert "infeasible" not in {line.get_label() for line in solid}
        # The infeasible row holds no bound either, so x=3 stays off the dash.
        assert dashed[0].get_xydata().tolist() == [[1.0, 1.5], [2.0, 2.5]]

    def test_numeric_x_values_are_sorted(self, tmp_path):
        shuffled = [SAMPLE_ROWS[3], SAMPLE_ROWS[0], SAMPLE_ROWS[4], SAMPLE_ROWS[1]]
        source = write_csv(tmp_path / "table.csv", shuffled)
        figure = render(spec_for(source, tmp_path))
        solid, _ = solid_and_dashed(figure)
        for line in solid:
            xs = [point[0] for point in line.get_xydata()]
            assert xs == sorted(xs)

    def test_string_x_values_sort_lexicographically(self, tmp_path):
        rows = ["late,alpha,3.0,,,,,", "early,alpha,2.0,,,,,"]
        source = write_csv(tmp_path / "table.csv", rows)
        figure = render(spec_for(source, tmp_path, converse_column=None))
        solid, _ = solid_and_dashed(figure)
        ys = [point[1] for point in solid[0].get_xydata()]
        assert ys == [2.0, 3.0]

    def test_single_row_gives_single_point_chart(self, tmp_path):
        source = write_csv(tmp_path / "table.csv", [SAMPLE_ROWS[0]])
        figure = render(spec_for(source, tmp_path))
        solid, dashed = solid_and_dashed(figure)
        assert len(solid) == 1
        assert solid[0].get_xydata().tolist() == [[1.0, 2.0]]
        assert dashed[0].get_xydata().tolist() == [[1.0, 1.5]]

    def test_simulated_alias_reads_simulated_mean(self, tmp_path):
        source = write_csv(tmp_path / "table.csv", SAMPLE_ROWS)
        figure = render(spec_for(source, tmp_path, y_column="simulated"))
        solid, _ = solid_and_dashed(figure)
        assert sorted(line.get_label() for line in solid) == ["alpha"]
        assert solid[0].get_xydata().tolist() == [[1.0, 2.02], [2.0, 3.05]]

    def test_same_csv_gives_same_series(self, tmp_path):
        source = write_csv(tmp_path / "table.csv", SAMPLE_ROWS)
        first = render(spec_for(source, tmp_path))
        second = render(spec_for(source, tmp_path))
        for one, two in zip(first.axes[0].lines, second.axes[0].lines):
            assert one.get_label() == two.get_label()
            assert one.get_color() == two.get_color()
            assert np.array_equal(one.get_xydata(), two.get_xydata())

    def test_output_file_is_written(self, tmp_path):
        source = write_csv(tmp_path / "table.csv", SAMPLE_ROWS)
        out = tmp_path / "figure.png"
        render(PlotSpec(source=source, output=str(out)))
        assert out.stat().st_size > 0


class TestErrors:
    def test_missing_y_column_errors(self, tmp_path):
        source = write_csv(tmp_path / "table.csv", SAMPLE_ROWS)
        with pytest.raises(PlotError, match="nope"):
            render(spec_for(source, tmp_path, y_column="nope"))

    def test_missing_converse_column_when_requested_errors(self, tmp_path):
        header = "sweep_value,scheme,exact"
        rows = ["1,alpha,2.0"]
        source = write_csv(tmp_path / "table.csv", rows, header=header)
        with pytest.raises(PlotError, match="converse"):
            render(spec_for(source, tmp_path))
        # Dropping the bound request makes the same file renderable.
        figure = render(spec_for(source, tmp_path, converse_column=None))
        assert len(figure.axes[0].lines) == 1

    def test_header_only_file_errors(self, tmp_path):
        source = tmp_path / "table.csv"
        source.write_text(HEADER + "\n", encoding="utf-8")
        with pytest.raises(PlotError, match="no data rows"):
            render(spec_for(source, tmp_path))

    def test_zero_byte_file_errors(self, tmp_path):
        source = tmp_path / "table.csv"
        source.write_text("", encoding="utf-8")
        with pytest.raises(PlotError, match="header"):
            render(spec_for(source, tmp_path))

    def test_missing_file_errors(self, tmp_path):
        with pytest.raises(PlotError, match="cannot read"):
            render(spec_for(tmp_path / "absent.csv", tmp_path))

    def test_non_numeric_y_cell_errors(self, tmp_path):
        rows = ["1,alpha,abc,,,,1.5,"]
        source = write_csv(tmp_path / "table.csv", rows)
        with pytest.raises(PlotError, match="non-numeric"):
            render(spec_for(source, tmp_path))

    def test_no_plottable_values_errors(self, tmp_path):
        rows = ["1,alpha,,,,,,"]
        source = write_csv(tmp_path / "table.csv", rows)
        with pytest.raises(PlotError, match="no plottable values"):
            render(spec_for(source, tmp_path, converse_column=None))


class TestScript:
    def test_success_exit_code_and_image(self, tmp_path):
        source = write_csv(tmp_path / "table.csv", SAMPLE_ROWS)
        out = tmp_path / "chart.png"
        assert main([source, str(out), "--title", "demo"]) == 0
        assert out.stat().st_size > 0

    def test_malformed_csv_exits_2(self, tmp_path, capsys):
        source = tmp_path / "junk.csv"
        source.write_text("definitely;not\nthe right;table\n", encoding="utf-8")
        assert main([str(source), str(tmp_path / "chart.png")]) == 2
        assert "plot error" in capsys.readouterr().err

    def test_no_converse_flag_skips_bound(self, tmp_path):
        header = "sweep_value,scheme,exact"
        source = write_csv(
            tmp_path / "table.csv", ["1,alpha,2.0"], header=header
        )
        out = tmp_path / "chart.png"
        assert main([source, str(out), "--no-converse"]) == 0
        assert out.stat().st_size > 0
